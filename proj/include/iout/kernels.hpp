#pragma once

#include <cstddef>
#include <string>

// Dense-arithmetic kernels backing the approximator stack. Every kernel has
// a scalar reference implementation and an AVX2 variant; the active backend
// is picked at startup from CPU capabilities (override with IOUT_KERNELS=
// scalar|avx2). The two backends are equivalence-tested against each other.
namespace iout::kernels {

enum class Backend { scalar, avx2 };

bool avx2_available();
Backend active_backend();
void set_backend(Backend b);  // throws if the backend is unsupported
std::string backend_name(Backend b);

// y[r] = sum_c w[r*cols+c] * x[c] + bias[r]         (w row-major, rows x cols)
void gemv(const double* w, const double* x, const double* bias, double* y,
          std::size_t rows, std::size_t cols);

// out[c] = sum_r w[r*cols+c] * g[r]                 (w^T g)
void gemv_t(const double* w, const double* g, double* out, std::size_t rows,
            std::size_t cols);

// w[r*cols+c] += g[r] * x[c]                        (rank-1 accumulate)
void ger_acc(double* w, const double* g, const double* x, std::size_t rows,
             std::size_t cols);

double dot(const double* a, const double* b, std::size_t n);

// y[i] = a*x[i] + b*y[i]
void axpby(double a, const double* x, double b, double* y, std::size_t n);

// Adam step with bias correction already folded into b1t = b1^t, b2t = b2^t.
void adam_update(double* p, double* m, double* v, const double* g,
                 std::size_t n, double lr, double b1, double b2, double eps,
                 double b1t, double b2t);

namespace detail {
struct Ops {
  void (*gemv)(const double*, const double*, const double*, double*,
               std::size_t, std::size_t);
  void (*gemv_t)(const double*, const double*, double*, std::size_t,
                 std::size_t);
  void (*ger_acc)(double*, const double*, const double*, std::size_t,
                  std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpby)(double, const double*, double, double*, std::size_t);
  void (*adam_update)(double*, double*, double*, const double*, std::size_t,
                      double, double, double, double, double, double);
};
const Ops& scalar_ops();
const Ops& avx2_ops();  // null pointers when not compiled in
}  // namespace detail

}  // namespace iout::kernels
