#include "iout/nets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "iout/kernels.hpp"

namespace iout {

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::identity:
      return z;
    case Activation::softplus:
      // log(1 + e^z), overflow-safe
      if (z > 30.0) return z;
      if (z < -30.0) return std::exp(z);
      return std::log1p(std::exp(z));
    case Activation::tanh_act:
      return std::tanh(z);
    case Activation::relu:
      return z > 0.0 ? z : 0.0;
  }
  return z;
}

double activate_grad(Activation a, double z) {
  switch (a) {
    case Activation::identity:
      return 1.0;
    case Activation::softplus:
      return 1.0 / (1.0 + std::exp(-z));  // sigmoid
    case Activation::tanh_act: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::relu:
      return z > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

}  // namespace

void MlpGrads::zero() {
  for (auto& g : dw) std::fill(g.begin(), g.end(), 0.0);
  for (auto& g : db) std::fill(g.begin(), g.end(), 0.0);
}

void MlpGrads::scale(double s) {
  for (auto& g : dw)
    for (double& x : g) x *= s;
  for (auto& g : db)
    for (double& x : g) x *= s;
}

bool MlpGrads::finite() const {
  for (const auto& g : dw)
    for (double x : g)
      if (!std::isfinite(x)) return false;
  for (const auto& g : db)
    for (double x : g)
      if (!std::isfinite(x)) return false;
  return true;
}

Mlp Mlp::make(std::span<const std::size_t> sizes, Activation hidden,
              Rng& rng) {
  if (sizes.size() < 2)
    throw std::invalid_argument("Mlp::make: need at least input and output");
  Mlp net;
  net.hidden_act = hidden;
  net.layers.resize(sizes.size() - 1);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    DenseLayer& layer = net.layers[l];
    layer.in = sizes[l];
    layer.out = sizes[l + 1];
    layer.w.resize(layer.in * layer.out);
    layer.b.resize(layer.out);
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (double& w : layer.w) w = rng.uniform(-bound, bound);
    for (double& b : layer.b) b = rng.uniform(-bound, bound);
  }
  return net;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers) n += l.w.size() + l.b.size();
  return n;
}

void Mlp::forward(std::span<const double> in, std::vector<double>& out) const {
  if (is_identity()) {
    out.assign(in.begin(), in.end());
    return;
  }
  if (in.size() != input_size())
    throw std::invalid_argument("Mlp::forward: input size mismatch");
  std::vector<double> cur(in.begin(), in.end());
  std::vector<double> next;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    next.resize(layer.out);
    kernels::gemv(layer.w.data(), cur.data(),
                  layer.b.empty() ? nullptr : layer.b.data(), next.data(),
                  layer.out, layer.in);
    const bool last = (l + 1 == layers.size());
    if (!last)
      for (double& z : next) z = activate(hidden_act, z);
    cur.swap(next);
  }
  out = std::move(cur);
}

const std::vector<double>& Mlp::forward_cached(std::span<const double> in,
                                               MlpCache& cache) const {
  if (is_identity()) {
    cache.pre.clear();
    cache.post.resize(1);
    cache.post[0].assign(in.begin(), in.end());
    return cache.post[0];
  }
  if (in.size() != input_size())
    throw std::invalid_argument("Mlp::forward_cached: input size mismatch");
  cache.pre.resize(layers.size());
  cache.post.resize(layers.size() + 1);
  cache.post[0].assign(in.begin(), in.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    cache.pre[l].resize(layer.out);
    kernels::gemv(layer.w.data(), cache.post[l].data(),
                  layer.b.empty() ? nullptr : layer.b.data(),
                  cache.pre[l].data(), layer.out, layer.in);
    cache.post[l + 1].resize(layer.out);
    const bool last = (l + 1 == layers.size());
    for (std::size_t i = 0; i < layer.out; ++i)
      cache.post[l + 1][i] =
          last ? cache.pre[l][i] : activate(hidden_act, cache.pre[l][i]);
  }
  return cache.post.back();
}

void Mlp::backward(const MlpCache& cache, std::span<const double> upstream,
                   MlpGrads* grads, std::vector<double>* d_input) const {
  if (is_identity()) {
    if (d_input) d_input->assign(upstream.begin(), upstream.end());
    return;
  }
  if (upstream.size() != output_size())
    throw std::invalid_argument("Mlp::backward: upstream size mismatch");
  std::vector<double> delta(upstream.begin(), upstream.end());
  std::vector<double> prev;
  for (std::size_t li = layers.size(); li-- > 0;) {
    const DenseLayer& layer = layers[li];
    const bool last = (li + 1 == layers.size());
    if (!last)
      for (std::size_t i = 0; i < layer.out; ++i)
        delta[i] *= activate_grad(hidden_act, cache.pre[li][i]);
    if (grads) {
      // dW += delta x^T ; db += delta
      kernels::ger_acc(grads->dw[li].data(), delta.data(),
                       cache.post[li].data(), layer.out, layer.in);
      if (!layer.b.empty())
        for (std::size_t i = 0; i < layer.out; ++i)
          grads->db[li][i] += delta[i];
    }
    if (li > 0 || d_input) {
      prev.resize(layer.in);
      kernels::gemv_t(layer.w.data(), delta.data(), prev.data(), layer.out,
                      layer.in);
      delta.swap(prev);
    }
  }
  if (d_input) *d_input = std::move(delta);
}

MlpGrads Mlp::make_grads() const {
  MlpGrads g;
  g.dw.resize(layers.size());
  g.db.resize(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    g.dw[l].assign(layers[l].w.size(), 0.0);
    g.db[l].assign(layers[l].b.size(), 0.0);
  }
  return g;
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
  if (target.layers.size() != online.layers.size())
    throw std::invalid_argument("soft_update: shape mismatch");
  for (std::size_t l = 0; l < target.layers.size(); ++l) {
    DenseLayer& t = target.layers[l];
    const DenseLayer& o = online.layers[l];
    if (t.w.size() != o.w.size() || t.b.size() != o.b.size())
      throw std::invalid_argument("soft_update: shape mismatch");
    kernels::axpby(tau, o.w.data(), 1.0 - tau, t.w.data(), t.w.size());
    kernels::axpby(tau, o.b.data(), 1.0 - tau, t.b.data(), t.b.size());
  }
}

void Adam::init(const Mlp& net) {
  const std::size_t n = net.layers.size();
  m_w.resize(n);
  v_w.resize(n);
  m_b.resize(n);
  v_b.resize(n);
  for (std::size_t l = 0; l < n; ++l) {
    m_w[l].assign(net.layers[l].w.size(), 0.0);
    v_w[l].assign(net.layers[l].w.size(), 0.0);
    m_b[l].assign(net.layers[l].b.size(), 0.0);
    v_b[l].assign(net.layers[l].b.size(), 0.0);
  }
  step_count = 0;
  skipped_steps = 0;
}

bool Adam::step(Mlp& net, const MlpGrads& grads) {
  if (!grads.finite()) {
    ++skipped_steps;
    return false;
  }
  ++step_count;
  const double b1t = std::pow(beta1, static_cast<double>(step_count));
  const double b2t = std::pow(beta2, static_cast<double>(step_count));
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    DenseLayer& layer = net.layers[l];
    kernels::adam_update(layer.w.data(), m_w[l].data(), v_w[l].data(),
                         grads.dw[l].data(), layer.w.size(), lr, beta1, beta2,
                         eps, b1t, b2t);
    kernels::adam_update(layer.b.data(), m_b[l].data(), v_b[l].data(),
                         grads.db[l].data(), layer.b.size(), lr, beta1, beta2,
                         eps, b1t, b2t);
  }
  return true;
}

bool ScalarAdam::step(double& p, double g) {
  if (!std::isfinite(g)) return false;
  ++step_count;
  m = beta1 * m + (1.0 - beta1) * g;
  v = beta2 * v + (1.0 - beta2) * g * g;
  const double mc = m / (1.0 - std::pow(beta1, static_cast<double>(step_count)));
  const double vc = v / (1.0 - std::pow(beta2, static_cast<double>(step_count)));
  p -= lr * mc / (std::sqrt(vc) + eps);
  return true;
}

GaussianPolicy GaussianPolicy::make(std::size_t obs_dim,
                                    std::size_t action_dim,
                                    std::span<const std::size_t> hidden,
                                    Rng& rng) {
  GaussianPolicy p;
  p.action_dim = action_dim;
  std::vector<std::size_t> sizes;
  sizes.push_back(obs_dim);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(2 * action_dim);
  p.net = Mlp::make(sizes, Activation::softplus, rng);
  return p;
}

PolicySample GaussianPolicy::sample(std::span<const double> obs,
                                    Rng& rng) const {
  std::vector<double> out;
  net.forward(obs, out);
  PolicySample s;
  const std::size_t d = action_dim;
  s.mean.resize(d);
  s.log_std.resize(d);
  s.noise.resize(d);
  s.pre_tanh.resize(d);
  s.action.resize(d);
  s.log_std_saturated.resize(d);
  constexpr double half_log_2pi = 0.9189385332046727;  // 0.5*log(2*pi)
  for (std::size_t i = 0; i < d; ++i) {
    s.mean[i] = out[i];
    s.log_std[i] = std::clamp(out[d + i], kLogStdMin, kLogStdMax);
    s.log_std_saturated[i] = (out[d + i] < kLogStdMin ||
                              out[d + i] > kLogStdMax)
                                 ? 1
                                 : 0;
    const double std_i = std::exp(s.log_std[i]);
    s.noise[i] = rng.normal();
    s.pre_tanh[i] = s.mean[i] + std_i * s.noise[i];
    s.action[i] = std::tanh(s.pre_tanh[i]);
    s.log_prob += -0.5 * s.noise[i] * s.noise[i] - s.log_std[i] -
                  half_log_2pi -
                  std::log(1.0 - s.action[i] * s.action[i] + kSquashEps);
  }
  return s;
}

void GaussianPolicy::mean_action(std::span<const double> obs,
                                 std::vector<double>& action) const {
  std::vector<double> out;
  net.forward(obs, out);
  action.resize(action_dim);
  for (std::size_t i = 0; i < action_dim; ++i)
    action[i] = std::tanh(out[i]);
}

double GaussianPolicy::log_prob_of(std::span<const double> obs,
                                   std::span<const double> action) const {
  std::vector<double> out;
  net.forward(obs, out);
  constexpr double half_log_2pi = 0.9189385332046727;
  double lp = 0.0;
  for (std::size_t i = 0; i < action_dim; ++i) {
    const double a = std::clamp(action[i], -1.0 + 1e-7, 1.0 - 1e-7);
    const double z = std::atanh(a);
    const double log_std = std::clamp(out[action_dim + i], kLogStdMin,
                                      kLogStdMax);
    const double inv_std = std::exp(-log_std);
    const double u = (z - out[i]) * inv_std;
    lp += -0.5 * u * u - log_std - half_log_2pi -
          std::log(1.0 - a * a + kSquashEps);
  }
  return lp;
}

void policy_output_grad(const PolicySample& s, double coeff_logp,
                        std::span<const double> coeff_action,
                        std::span<double> d_outputs) {
  // Reparameterized gradients of log_prob and action wrt (mean, log_std).
  // With z = mean + std*eps, the Gaussian part of log_prob depends on the
  // parameters only through -log_std; the squash term reaches them via z.
  const std::size_t d = s.mean.size();
  for (std::size_t i = 0; i < d; ++i) {
    const double a = s.action[i];
    const double one_m_a2 = 1.0 - a * a;
    const double std_i = std::exp(s.log_std[i]);
    const double dz_dlogstd = std_i * s.noise[i];
    // d(-log(1-a^2+eps))/dz
    const double u = 2.0 * a * one_m_a2 / (one_m_a2 + GaussianPolicy::kSquashEps);
    const double dlogp_dmean = u;
    const double dlogp_dlogstd = -1.0 + u * dz_dlogstd;
    const double da_dmean = one_m_a2;
    const double da_dlogstd = one_m_a2 * dz_dlogstd;
    d_outputs[i] = coeff_logp * dlogp_dmean + coeff_action[i] * da_dmean;
    d_outputs[d + i] =
        s.log_std_saturated[i]
            ? 0.0  // clamp active: no gradient through log_std
            : coeff_logp * dlogp_dlogstd + coeff_action[i] * da_dlogstd;
  }
}

}  // namespace iout
