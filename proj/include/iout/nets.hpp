#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "iout/rng.hpp"

namespace iout {

enum class Activation : std::uint8_t { identity = 0, softplus = 1,
                                       tanh_act = 2, relu = 3 };

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;  // row-major, out x in
  std::vector<double> b;
};

// Per-layer parameter gradients, shapes mirroring the network.
struct MlpGrads {
  std::vector<std::vector<double>> dw;
  std::vector<std::vector<double>> db;
  void zero();
  void scale(double s);
  bool finite() const;
};

// Forward activations cached for backprop: post[0] is the input, post[l+1]
// the output of layer l; pre[l] the pre-activation of layer l.
struct MlpCache {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;
};

// Plain feedforward approximator: affine layers with a smooth-rectifier
// (softplus) default on hidden layers and identity output. Gradients are
// analytic; no autodiff dependency.
struct Mlp {
  std::vector<DenseLayer> layers;
  Activation hidden_act = Activation::softplus;

  static Mlp make(std::span<const std::size_t> sizes, Activation hidden,
                  Rng& rng);  // init uniform +-1/sqrt(fan_in)

  // A layerless net is the identity map (any input size).
  bool is_identity() const { return layers.empty(); }
  std::size_t input_size() const {
    return layers.empty() ? 0 : layers.front().in;
  }
  std::size_t output_size() const {
    return layers.empty() ? 0 : layers.back().out;
  }
  std::size_t param_count() const;

  void forward(std::span<const double> in, std::vector<double>& out) const;
  // Forward keeping activations; returns a reference to the output vector
  // inside the cache.
  const std::vector<double>& forward_cached(std::span<const double> in,
                                            MlpCache& cache) const;
  // Accumulates parameter gradients for upstream = dL/d(output); when
  // d_input is non-null also emits dL/d(input). Pass grads = nullptr for an
  // input-gradient-only pass (e.g. dQ/da through a frozen critic).
  void backward(const MlpCache& cache, std::span<const double> upstream,
                MlpGrads* grads, std::vector<double>* d_input = nullptr) const;
  void backward(const MlpCache& cache, std::span<const double> upstream,
                MlpGrads& grads, std::vector<double>* d_input = nullptr) const {
    backward(cache, upstream, &grads, d_input);
  }

  MlpGrads make_grads() const;
};

// target <- tau * online + (1 - tau) * target, elementwise.
void soft_update(Mlp& target, const Mlp& online, double tau);

// Adaptive-moment optimizer with bias correction. Non-finite gradients skip
// the step and bump a diagnostic counter.
struct Adam {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;
  long skipped_steps = 0;
  std::vector<std::vector<double>> m_w, v_w, m_b, v_b;

  void init(const Mlp& net);
  bool step(Mlp& net, const MlpGrads& grads);  // false when skipped
};

// Scalar variant (entropy coefficient).
struct ScalarAdam {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;
  double m = 0.0, v = 0.0;
  bool step(double& p, double g);
};

// Stochastic squashed-Gaussian policy head over an Mlp emitting
// [mean, log_std] per action dimension.
struct PolicySample {
  std::vector<double> action;    // tanh(z), in (-1,1)
  std::vector<double> pre_tanh;  // z = mean + std * eps
  std::vector<double> mean;
  std::vector<double> log_std;   // clamped to [-20, 2]
  std::vector<double> noise;     // eps
  std::vector<std::uint8_t> log_std_saturated;  // clamp active per dim
  double log_prob = 0.0;
};

struct GaussianPolicy {
  Mlp net;  // obs_dim -> ... -> 2 * action_dim
  std::size_t action_dim = 0;
  static constexpr double kLogStdMin = -20.0;
  static constexpr double kLogStdMax = 2.0;
  static constexpr double kSquashEps = 1e-6;

  static GaussianPolicy make(std::size_t obs_dim, std::size_t action_dim,
                             std::span<const std::size_t> hidden, Rng& rng);

  // Reparameterized sample with tanh squashing; log_prob includes the
  // squash Jacobian correction.
  PolicySample sample(std::span<const double> obs, Rng& rng) const;
  // Deterministic head: tanh(mean).
  void mean_action(std::span<const double> obs,
                   std::vector<double>& action) const;
  // Log-density of a given squashed action (used by behavioral cloning).
  double log_prob_of(std::span<const double> obs,
                     std::span<const double> action) const;
};

// Gradient of the sampled log-prob and action wrt the net outputs, shared
// by the SAC/CQL policy losses. For loss L = coeff_logp * log_prob +
// sum_d coeff_action[d] * action[d], fills d_outputs (size 2*action_dim).
void policy_output_grad(const PolicySample& s, double coeff_logp,
                        std::span<const double> coeff_action,
                        std::span<double> d_outputs);

}  // namespace iout
