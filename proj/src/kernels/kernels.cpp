#include "iout/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace iout::kernels {
namespace {

using detail::Ops;

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma") &&
         detail::avx2_ops().gemv != nullptr;
#else
  return false;
#endif
}

Backend pick_default() {
  if (const char* env = std::getenv("IOUT_KERNELS")) {
    const std::string s(env);
    if (s == "scalar") return Backend::scalar;
    if (s == "avx2") {
      if (!cpu_has_avx2())
        throw std::runtime_error("IOUT_KERNELS=avx2 but AVX2 is unavailable");
      return Backend::avx2;
    }
    if (s != "auto")
      throw std::runtime_error("IOUT_KERNELS must be scalar, avx2 or auto");
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

struct State {
  Backend backend = pick_default();
  const Ops* ops = backend == Backend::avx2 ? &detail::avx2_ops()
                                            : &detail::scalar_ops();
};

State& state() {
  static State s;
  return s;
}

}  // namespace

bool avx2_available() { return cpu_has_avx2(); }

Backend active_backend() { return state().backend; }

void set_backend(Backend b) {
  if (b == Backend::avx2 && !cpu_has_avx2())
    throw std::runtime_error("AVX2 backend unavailable on this CPU/build");
  state().backend = b;
  state().ops =
      b == Backend::avx2 ? &detail::avx2_ops() : &detail::scalar_ops();
}

std::string backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

void gemv(const double* w, const double* x, const double* bias, double* y,
          std::size_t rows, std::size_t cols) {
  state().ops->gemv(w, x, bias, y, rows, cols);
}

void gemv_t(const double* w, const double* g, double* out, std::size_t rows,
            std::size_t cols) {
  state().ops->gemv_t(w, g, out, rows, cols);
}

void ger_acc(double* w, const double* g, const double* x, std::size_t rows,
             std::size_t cols) {
  state().ops->ger_acc(w, g, x, rows, cols);
}

double dot(const double* a, const double* b, std::size_t n) {
  return state().ops->dot(a, b, n);
}

void axpby(double a, const double* x, double b, double* y, std::size_t n) {
  state().ops->axpby(a, x, b, y, n);
}

void adam_update(double* p, double* m, double* v, const double* g,
                 std::size_t n, double lr, double b1, double b2, double eps,
                 double b1t, double b2t) {
  state().ops->adam_update(p, m, v, g, n, lr, b1, b2, eps, b1t, b2t);
}

}  // namespace iout::kernels
