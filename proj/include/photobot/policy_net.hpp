#pragma once

// Small actor-critic MLP with hand-written backpropagation.
//
// obs -> (obs - offset) * scale -> [tanh(W x + b)]* -> { policy logits, value }
//
// All trainable weights live in one flat vector so the optimizer, gradient
// clipping and finite-difference checking all work on a single span.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "photobot/error.hpp"

namespace photobot {

struct NetShape {
  int input = 0;
  std::vector<int> hidden{64, 64};
  int actions = 4;

  friend bool operator==(const NetShape&, const NetShape&) = default;
};

// Location of one affine layer inside the flat parameter vector.
struct AffineSlot {
  int in = 0;
  int out = 0;
  std::size_t weight = 0;  // out x in, row-major
  std::size_t bias = 0;
};

class PolicyParams {
 public:
  PolicyParams() = default;

  explicit PolicyParams(NetShape shape) : shape_(std::move(shape)) {
    if (shape_.input < 1 || shape_.actions < 1) throw InvalidArgument("net needs input and actions");
    for (int h : shape_.hidden)
      if (h < 1) throw InvalidArgument("hidden layer sizes must be positive");
    std::size_t cursor = 0;
    auto add = [&](int in, int out) {
      AffineSlot s{in, out, cursor, cursor + static_cast<std::size_t>(in) * out};
      cursor = s.bias + out;
      return s;
    };
    int width = shape_.input;
    for (int h : shape_.hidden) {
      trunk_.push_back(add(width, h));
      width = h;
    }
    policy_ = add(width, shape_.actions);
    value_ = add(width, 1);
    theta_.assign(cursor, 0.0);
    offset_.assign(shape_.input, 0.0);
    scale_.assign(shape_.input, 1.0);
  }

  // Gaussian init with 1/sqrt(fan_in) spread; the policy head starts near
  // zero so the initial policy is close to uniform.
  static PolicyParams initialized(NetShape shape, std::uint64_t seed) {
    PolicyParams p(std::move(shape));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto fill = [&](const AffineSlot& s, double gain) {
      const double sd = gain / std::sqrt(static_cast<double>(s.in));
      for (int i = 0; i < s.in * s.out; ++i) p.theta_[s.weight + i] = sd * normal(rng);
    };
    for (const AffineSlot& s : p.trunk_) fill(s, 1.0);
    fill(p.policy_, 0.01);
    fill(p.value_, 1.0);
    return p;
  }

  const NetShape& shape() const { return shape_; }
  std::size_t size() const { return theta_.size(); }
  std::span<double> theta() { return theta_; }
  std::span<const double> theta() const { return theta_; }

  // Fixed (non-trained) input normalisation.
  std::vector<double>& input_offset() { return offset_; }
  std::vector<double>& input_scale() { return scale_; }
  const std::vector<double>& input_offset() const { return offset_; }
  const std::vector<double>& input_scale() const { return scale_; }

  const std::vector<AffineSlot>& trunk() const { return trunk_; }
  const AffineSlot& policy_head() const { return policy_; }
  const AffineSlot& value_head() const { return value_; }

  bool all_finite() const {
    return std::all_of(theta_.begin(), theta_.end(), [](double v) { return std::isfinite(v); });
  }

 private:
  NetShape shape_;
  std::vector<AffineSlot> trunk_;
  AffineSlot policy_;
  AffineSlot value_;
  std::vector<double> theta_;
  std::vector<double> offset_;
  std::vector<double> scale_;
};

// Activations kept for the backward pass.
struct ForwardCache {
  std::vector<std::vector<double>> layers;  // layers[0] = normalised input, then each tanh output
  std::vector<double> logits;
  double value = 0.0;
};

namespace detail {
inline void affine(std::span<const double> theta, const AffineSlot& s, const std::vector<double>& x,
                   std::vector<double>& y) {
  y.resize(s.out);
  for (int o = 0; o < s.out; ++o) {
    double acc = theta[s.bias + o];
    const double* w = theta.data() + s.weight + static_cast<std::size_t>(o) * s.in;
    for (int i = 0; i < s.in; ++i) acc += w[i] * x[i];
    y[o] = acc;
  }
}
}  // namespace detail

inline void forward(const PolicyParams& p, std::span<const double> obs, ForwardCache& cache) {
  if (static_cast<int>(obs.size()) != p.shape().input)
    throw InvalidArgument("observation length does not match network input");
  const auto theta = p.theta();
  cache.layers.resize(p.trunk().size() + 1);
  auto& x0 = cache.layers[0];
  x0.resize(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i)
    x0[i] = (obs[i] - p.input_offset()[i]) * p.input_scale()[i];
  for (std::size_t l = 0; l < p.trunk().size(); ++l) {
    detail::affine(theta, p.trunk()[l], cache.layers[l], cache.layers[l + 1]);
    for (double& v : cache.layers[l + 1]) v = std::tanh(v);
  }
  detail::affine(theta, p.policy_head(), cache.layers.back(), cache.logits);
  std::vector<double> v;
  detail::affine(theta, p.value_head(), cache.layers.back(), v);
  cache.value = v[0];
}

struct PolicyOutput {
  std::vector<double> logits;
  double value = 0.0;
};

inline PolicyOutput forward(const PolicyParams& p, std::span<const double> obs) {
  ForwardCache cache;
  forward(p, obs, cache);
  return {std::move(cache.logits), cache.value};
}

// Accumulate d(loss)/d(theta) into grad given upstream gradients on the
// logits and the value output of one sample.
inline void backward(const PolicyParams& p, const ForwardCache& cache,
                     std::span<const double> dlogits, double dvalue, std::span<double> grad) {
  const auto theta = p.theta();
  const auto& top = cache.layers.back();
  std::vector<double> dx(top.size(), 0.0);

  auto head = [&](const AffineSlot& s, std::span<const double> dy) {
    for (int o = 0; o < s.out; ++o) {
      const double g = dy[o];
      if (g == 0.0) continue;
      grad[s.bias + o] += g;
      const std::size_t row = s.weight + static_cast<std::size_t>(o) * s.in;
      for (int i = 0; i < s.in; ++i) {
        grad[row + i] += g * top[i];
        dx[i] += g * theta[row + i];
      }
    }
  };
  head(p.policy_head(), dlogits);
  const double dv[1] = {dvalue};
  head(p.value_head(), dv);

  for (std::size_t l = p.trunk().size(); l-- > 0;) {
    const AffineSlot& s = p.trunk()[l];
    const auto& out = cache.layers[l + 1];
    const auto& in = cache.layers[l];
    std::vector<double> dprev(l > 0 ? in.size() : 0, 0.0);
    for (int o = 0; o < s.out; ++o) {
      const double g = dx[o] * (1.0 - out[o] * out[o]);
      if (g == 0.0) continue;
      grad[s.bias + o] += g;
      const std::size_t row = s.weight + static_cast<std::size_t>(o) * s.in;
      for (int i = 0; i < s.in; ++i) {
        grad[row + i] += g * in[i];
        if (l > 0) dprev[i] += g * theta[row + i];
      }
    }
    dx = std::move(dprev);
  }
}

inline std::vector<double> softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += p[i] = std::exp(logits[i] - m);
  for (double& v : p) v /= z;
  return p;
}

inline std::vector<double> log_softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  const double lz = m + std::log(z);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lz;
  return out;
}

inline double entropy(std::span<const double> logits) {
  const auto p = softmax(logits);
  const auto lp = log_softmax(logits);
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) h -= p[i] * lp[i];
  return h;
}

template <class Gen>
int sample_action(std::span<const double> logits, Gen& rng) {
  const auto p = softmax(logits);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  for (std::size_t i = 0; i < p.size(); ++i) {
    r -= p[i];
    if (r < 0.0) return static_cast<int>(i);
  }
  // Round-off leftover: last action with non-zero probability.
  for (std::size_t i = p.size(); i-- > 0;)
    if (p[i] > 0.0) return static_cast<int>(i);
  return 0;
}

// Argmax; ties go to the lowest index.
inline int greedy_action(std::span<const double> logits) {
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

// ---- A2C loss --------------------------------------------------------------

// One minibatch. Advantages are inputs, not recomputed, so the policy term
// treats V(s) as a constant.
struct LossBatch {
  std::vector<std::vector<double>> observations;
  std::vector<int> actions;
  std::vector<double> returns;
  std::vector<double> advantages;

  std::size_t size() const { return observations.size(); }
};

struct LossCoefficients {
  double value_coef = 0.5;
  double entropy_coef = 0.01;
};

enum class LossSelector { Total, Policy, Value, Entropy };

struct LossTerms {
  double policy_loss = 0.0;  // -mean(A * log pi(a|s))
  double value_loss = 0.0;   // mean((R - V)^2)
  double entropy = 0.0;      // mean(H(pi(.|s)))
  double total = 0.0;        // policy + value_coef * value - entropy_coef * entropy
};

// Loss of the selected term and, if grad is non-empty, its gradient
// (overwritten, not accumulated). Samples are reduced in index order.
inline LossTerms a2c_loss(const PolicyParams& p, const LossBatch& batch, const LossCoefficients& c,
                          LossSelector which, std::span<double> grad) {
  const std::size_t n = batch.size();
  if (n == 0) throw InvalidArgument("empty loss batch");
  if (batch.actions.size() != n || batch.returns.size() != n || batch.advantages.size() != n)
    throw InvalidArgument("loss batch columns differ in length");
  std::fill(grad.begin(), grad.end(), 0.0);

  double wp = 0.0, wv = 0.0, we = 0.0;
  switch (which) {
    case LossSelector::Total: wp = 1.0; wv = c.value_coef; we = -c.entropy_coef; break;
    case LossSelector::Policy: wp = 1.0; break;
    case LossSelector::Value: wv = 1.0; break;
    case LossSelector::Entropy: we = 1.0; break;
  }

  LossTerms t;
  ForwardCache cache;
  std::vector<double> dlogits;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    forward(p, batch.observations[k], cache);
    const auto probs = softmax(cache.logits);
    const auto logp = log_softmax(cache.logits);
    double h = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) h -= probs[i] * logp[i];
    const int a = batch.actions[k];
    const double adv = batch.advantages[k];
    const double err = batch.returns[k] - cache.value;

    t.policy_loss -= adv * logp[a] * inv_n;
    t.value_loss += err * err * inv_n;
    t.entropy += h * inv_n;

    if (grad.empty()) continue;
    dlogits.assign(probs.size(), 0.0);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const double onehot = static_cast<int>(i) == a ? 1.0 : 0.0;
      // d(-A log p_a)/dz_i = -A (1[i=a] - p_i);  dH/dz_i = -p_i (log p_i + H)
      dlogits[i] = inv_n * (wp * -adv * (onehot - probs[i]) + we * -probs[i] * (logp[i] + h));
    }
    const double dvalue = inv_n * wv * -2.0 * err;
    backward(p, cache, dlogits, dvalue, grad);
  }
  t.total = t.policy_loss + c.value_coef * t.value_loss - c.entropy_coef * t.entropy;
  return t;
}

inline double selected(const LossTerms& t, LossSelector which) {
  switch (which) {
    case LossSelector::Policy: return t.policy_loss;
    case LossSelector::Value: return t.value_loss;
    case LossSelector::Entropy: return t.entropy;
    default: return t.total;
  }
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::vector<double> analytic;
  std::vector<double> numeric;
};

// Central differences on every parameter against the analytic gradient.
// Relative error per entry is |a - n| / max(|a| + |n|, 1e-8).
inline GradCheckResult grad_check(const PolicyParams& params, const LossBatch& batch,
                                  const LossCoefficients& coef, LossSelector which, double h = 1e-5) {
  if (batch.size() == 0) throw InvalidArgument("grad_check needs a non-empty batch");
  GradCheckResult r;
  r.analytic.assign(params.size(), 0.0);
  a2c_loss(params, batch, coef, which, r.analytic);

  PolicyParams probe = params;
  r.numeric.assign(params.size(), 0.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = probe.theta()[i];
    probe.theta()[i] = orig + h;
    const double up = selected(a2c_loss(probe, batch, coef, which, {}), which);
    probe.theta()[i] = orig - h;
    const double down = selected(a2c_loss(probe, batch, coef, which, {}), which);
    probe.theta()[i] = orig;
    r.numeric[i] = (up - down) / (2.0 * h);

    const double denom = std::max(std::abs(r.analytic[i]) + std::abs(r.numeric[i]), 1e-8);
    const double rel = std::abs(r.analytic[i] - r.numeric[i]) / denom;
    if (rel > r.max_rel_error) {
      r.max_rel_error = rel;
      r.worst_index = i;
    }
  }
  return r;
}

}  // namespace photobot
