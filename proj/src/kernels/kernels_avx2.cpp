#include <cstddef>

#include "iout/kernels.hpp"

// AVX2/FMA variants, 4 doubles per lane. This translation unit is the only
// one compiled with -mavx2 -mfma; callers must check avx2_available() before
// routing here. Horizontal reductions reassociate relative to the scalar
// kernels, so equivalence tests compare with a small relative tolerance;
// the purely elementwise kernels (axpby, adam_update) match bit-for-bit.

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace iout::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                           acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                           acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void gemv_avx2(const double* w, const double* x, const double* bias,
               double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double base = bias ? bias[r] : 0.0;
    y[r] = base + dot_avx2(w + r * cols, x, cols);
  }
}

void gemv_t_avx2(const double* w, const double* g, double* out,
                 std::size_t rows, std::size_t cols) {
  std::size_t c = 0;
  for (; c + 4 <= cols; c += 4) _mm256_storeu_pd(out + c, _mm256_setzero_pd());
  for (; c < cols; ++c) out[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w + r * cols;
    const __m256d gr = _mm256_set1_pd(g[r]);
    c = 0;
    for (; c + 4 <= cols; c += 4) {
      __m256d o = _mm256_loadu_pd(out + c);
      o = _mm256_fmadd_pd(gr, _mm256_loadu_pd(wr + c), o);
      _mm256_storeu_pd(out + c, o);
    }
    for (; c < cols; ++c) out[c] += g[r] * wr[c];
  }
}

void ger_acc_avx2(double* w, const double* g, const double* x,
                  std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* wr = w + r * cols;
    const __m256d gr = _mm256_set1_pd(g[r]);
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      __m256d acc = _mm256_loadu_pd(wr + c);
      acc = _mm256_fmadd_pd(gr, _mm256_loadu_pd(x + c), acc);
      _mm256_storeu_pd(wr + c, acc);
    }
    for (; c < cols; ++c) wr[c] += g[r] * x[c];
  }
}

void axpby_avx2(double a, const double* x, double b, double* y,
                std::size_t n) {
  // mul+add rather than fmadd: keeps the rounding identical to the scalar
  // kernel, so axpby is bit-exact across backends.
  const __m256d av = _mm256_set1_pd(a);
  const __m256d bv = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d yv = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(
        y + i, _mm256_add_pd(_mm256_mul_pd(av, xv), _mm256_mul_pd(bv, yv)));
  }
  for (; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

void adam_update_avx2(double* p, double* m, double* v, const double* g,
                      std::size_t n, double lr, double b1, double b2,
                      double eps, double b1t, double b2t) {
  const double mc = 1.0 / (1.0 - b1t);
  const double vc = 1.0 / (1.0 - b2t);
  const __m256d b1v = _mm256_set1_pd(b1);
  const __m256d b1c = _mm256_set1_pd(1.0 - b1);
  const __m256d b2v = _mm256_set1_pd(b2);
  const __m256d b2c = _mm256_set1_pd(1.0 - b2);
  const __m256d mcv = _mm256_set1_pd(mc);
  const __m256d vcv = _mm256_set1_pd(vc);
  const __m256d lrv = _mm256_set1_pd(lr);
  const __m256d epsv = _mm256_set1_pd(eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gv = _mm256_loadu_pd(g + i);
    __m256d mv = _mm256_loadu_pd(m + i);
    __m256d vv = _mm256_loadu_pd(v + i);
    // mul+add (no fma) so the update is bit-exact against the scalar kernel
    mv = _mm256_add_pd(_mm256_mul_pd(b1v, mv), _mm256_mul_pd(b1c, gv));
    vv = _mm256_add_pd(_mm256_mul_pd(b2v, vv),
                       _mm256_mul_pd(b2c, _mm256_mul_pd(gv, gv)));
    _mm256_storeu_pd(m + i, mv);
    _mm256_storeu_pd(v + i, vv);
    const __m256d denom =
        _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vv, vcv)), epsv);
    const __m256d step =
        _mm256_div_pd(_mm256_mul_pd(lrv, _mm256_mul_pd(mv, mcv)), denom);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * (g[i] * g[i]);
    p[i] -= lr * (m[i] * mc) / (std::sqrt(v[i] * vc) + eps);
  }
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops ops = {gemv_avx2,  gemv_t_avx2, ger_acc_avx2,
                          dot_avx2,   axpby_avx2,  adam_update_avx2};
  return ops;
}

}  // namespace iout::kernels::detail

#else  // no AVX2 at compile time for this TU (non-x86 build)

namespace iout::kernels::detail {
const Ops& avx2_ops() {
  static const Ops ops = {nullptr, nullptr, nullptr, nullptr, nullptr,
                          nullptr};
  return ops;
}
}  // namespace iout::kernels::detail

#endif
