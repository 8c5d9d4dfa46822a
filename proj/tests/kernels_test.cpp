#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "iout/kernels.hpp"
#include "iout/rng.hpp"

using namespace iout;
namespace k = iout::kernels;

namespace {

struct BackendGuard {
  k::Backend saved = k::active_backend();
  ~BackendGuard() { k::set_backend(saved); }
};

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

}  // namespace

TEST_CASE("scalar gemv reference values") {
  BackendGuard guard;
  k::set_backend(k::Backend::scalar);
  // 2x3 * 3 + bias, by hand
  const double w[] = {1, 2, 3, 4, 5, 6};
  const double x[] = {1, -1, 2};
  const double b[] = {0.5, -0.5};
  double y[2];
  k::gemv(w, x, b, y, 2, 3);
  CHECK(y[0] == doctest::Approx(1 - 2 + 6 + 0.5));
  CHECK(y[1] == doctest::Approx(4 - 5 + 12 - 0.5));

  double xt[3];
  const double g[] = {1.0, -2.0};
  k::gemv_t(w, g, xt, 2, 3);
  CHECK(xt[0] == doctest::Approx(1 - 8));
  CHECK(xt[1] == doctest::Approx(2 - 10));
  CHECK(xt[2] == doctest::Approx(3 - 12));
}

TEST_CASE("avx2 backend matches scalar within tolerance" *
          doctest::skip(!k::avx2_available())) {
  Rng rng(42);
  for (const std::size_t rows : {1u, 3u, 8u, 33u}) {
    for (const std::size_t cols : {1u, 4u, 7u, 64u, 129u}) {
      const auto w = random_vec(rows * cols, rng);
      const auto x = random_vec(cols, rng);
      const auto bias = random_vec(rows, rng);
      const auto g = random_vec(rows, rng);

      BackendGuard guard;
      k::set_backend(k::Backend::scalar);
      std::vector<double> y_s(rows), xt_s(cols);
      k::gemv(w.data(), x.data(), bias.data(), y_s.data(), rows, cols);
      k::gemv_t(w.data(), g.data(), xt_s.data(), rows, cols);
      auto w_s = w;
      k::ger_acc(w_s.data(), g.data(), x.data(), rows, cols);
      const double dot_s = k::dot(x.data(), x.data(), cols);

      k::set_backend(k::Backend::avx2);
      std::vector<double> y_v(rows), xt_v(cols);
      k::gemv(w.data(), x.data(), bias.data(), y_v.data(), rows, cols);
      k::gemv_t(w.data(), g.data(), xt_v.data(), rows, cols);
      auto w_v = w;
      k::ger_acc(w_v.data(), g.data(), x.data(), rows, cols);
      const double dot_v = k::dot(x.data(), x.data(), cols);

      for (std::size_t i = 0; i < rows; ++i)
        CHECK(y_v[i] == doctest::Approx(y_s[i]).epsilon(1e-12));
      for (std::size_t i = 0; i < cols; ++i)
        CHECK(xt_v[i] == doctest::Approx(xt_s[i]).epsilon(1e-12));
      for (std::size_t i = 0; i < rows * cols; ++i)
        CHECK(w_v[i] == doctest::Approx(w_s[i]).epsilon(1e-12));
      CHECK(dot_v == doctest::Approx(dot_s).epsilon(1e-12));
    }
  }
}

TEST_CASE("elementwise kernels are bit-exact across backends" *
          doctest::skip(!k::avx2_available())) {
  Rng rng(7);
  const std::size_t n = 131;  // odd tail exercises the remainder loop
  const auto x = random_vec(n, rng);
  const auto g = random_vec(n, rng);
  auto y1 = random_vec(n, rng);
  auto y2 = y1;
  auto p1 = random_vec(n, rng);
  auto p2 = p1;
  std::vector<double> m1(n, 0.0), v1(n, 0.0), m2(n, 0.0), v2(n, 0.0);

  BackendGuard guard;
  k::set_backend(k::Backend::scalar);
  k::axpby(0.01, x.data(), 0.99, y1.data(), n);
  k::adam_update(p1.data(), m1.data(), v1.data(), g.data(), n, 1e-3, 0.9,
                 0.999, 1e-8, 0.9, 0.999);

  k::set_backend(k::Backend::avx2);
  k::axpby(0.01, x.data(), 0.99, y2.data(), n);
  k::adam_update(p2.data(), m2.data(), v2.data(), g.data(), n, 1e-3, 0.9,
                 0.999, 1e-8, 0.9, 0.999);

  for (std::size_t i = 0; i < n; ++i) {
    CHECK(y1[i] == y2[i]);  // exact
    CHECK(p1[i] == p2[i]);
    CHECK(m1[i] == m2[i]);
    CHECK(v1[i] == v2[i]);
  }
}

TEST_CASE("backend selection") {
  CHECK((k::active_backend() == k::Backend::scalar ||
         k::active_backend() == k::Backend::avx2));
  BackendGuard guard;
  k::set_backend(k::Backend::scalar);
  CHECK(k::active_backend() == k::Backend::scalar);
  CHECK(k::backend_name(k::Backend::scalar) == "scalar");
  CHECK(k::backend_name(k::Backend::avx2) == "avx2");
}
