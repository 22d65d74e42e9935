#pragma once

// Synchronous advantage actor-critic over PhotoEnv.
//
// Each update collects n_steps transitions from n_envs environments with the
// current policy, forms n-step bootstrapped returns, and takes one clipped
// gradient step. Every environment owns its own RNG stream derived from the
// run seed, and gradients are reduced in a fixed sample order, so a run is a
// pure function of (seed, configs).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "photobot/error.hpp"
#include "photobot/photo_env.hpp"
#include "photobot/policy_net.hpp"

namespace photobot {

struct TrainConfig {
  double gamma = 0.95;
  double learning_rate = 3e-3;
  bool lr_decay = true;  // linear anneal to zero over total_updates
  int n_steps = 5;
  int n_envs = 8;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double grad_clip_norm = 0.5;
  int total_updates = 45000;
  std::uint64_t seed = 1;
  std::vector<int> hidden{64, 64};
  bool rms_scaling = true;  // RMSprop-style per-parameter step scaling
  double rms_decay = 0.99;
  double rms_eps = 1e-5;
  // A match ends the episode but the robot keeps holding the matched view,
  // which earns reward 1 per step; the trainer credits that tail.
  bool hold_matched_view = true;
  double reward_scale = 0.1;  // training rewards are multiplied by this
  int log_interval = 100;
  int stats_window = 500;  // episodes averaged per curve point
};

inline void validate(const TrainConfig& c) {
  if (!(c.gamma > 0.0 && c.gamma <= 1.0)) throw InvalidArgument("gamma must lie in (0, 1]");
  if (!(c.learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  if (c.n_steps < 1 || c.n_envs < 1) throw InvalidArgument("n_steps and n_envs must be >= 1");
  if (c.entropy_coef < 0.0 || c.value_coef < 0.0) throw InvalidArgument("loss coefficients must be >= 0");
  if (!(c.grad_clip_norm > 0.0)) throw InvalidArgument("grad_clip_norm must be positive");
  if (c.total_updates < 0) throw InvalidArgument("total_updates must be >= 0");
  if (c.log_interval < 1 || c.stats_window < 1) throw InvalidArgument("log_interval and stats_window must be >= 1");
}

// Env-major layout: entry (e, t) lives at e * n_steps + t.
struct RolloutBuffer {
  int n_envs = 0;
  int n_steps = 0;
  std::vector<std::vector<double>> observations;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<bool> dones;     // transition (e, t) ended an episode
  std::vector<double> bootstrap;  // V(s_{t+n}) per env

  RolloutBuffer() = default;
  RolloutBuffer(int envs, int steps) : n_envs(envs), n_steps(steps) {
    const std::size_t n = static_cast<std::size_t>(envs) * steps;
    observations.resize(n);
    actions.assign(n, 0);
    rewards.assign(n, 0.0);
    values.assign(n, 0.0);
    dones.assign(n, false);
    bootstrap.assign(envs, 0.0);
  }

  std::size_t at(int env, int step) const { return static_cast<std::size_t>(env) * n_steps + step; }
  std::size_t size() const { return rewards.size(); }
};

// R_t = r_t + gamma * R_{t+1}, seeded with the bootstrap value and cut at
// episode ends.
inline std::vector<double> compute_returns(const RolloutBuffer& b, double gamma) {
  std::vector<double> out(b.size(), 0.0);
  for (int e = 0; e < b.n_envs; ++e) {
    double next = b.bootstrap[e];
    for (int t = b.n_steps; t-- > 0;) {
      const std::size_t i = b.at(e, t);
      next = b.rewards[i] + (b.dones[i] ? 0.0 : gamma * next);
      out[i] = next;
    }
  }
  return out;
}

// Plain gradient descent, optionally with RMSprop scaling.
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(std::size_t n, const TrainConfig& c)
      : lr_(c.learning_rate), rms_(c.rms_scaling), decay_(c.rms_decay), eps_(c.rms_eps),
        square_avg_(n, 0.0) {}

  void set_learning_rate(double lr) { lr_ = lr; }
  double learning_rate() const { return lr_; }

  void apply(std::span<double> theta, std::span<const double> grad) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      if (rms_) {
        square_avg_[i] = decay_ * square_avg_[i] + (1.0 - decay_) * grad[i] * grad[i];
        theta[i] -= lr_ * grad[i] / (std::sqrt(square_avg_[i]) + eps_);
      } else {
        theta[i] -= lr_ * grad[i];
      }
    }
  }

 private:
  double lr_ = 7e-4;
  bool rms_ = true;
  double decay_ = 0.99;
  double eps_ = 1e-5;
  std::vector<double> square_avg_;
};

struct LossReport {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;  // before clipping
};

inline LossReport a2c_update(PolicyParams& params, Optimizer& opt, const RolloutBuffer& buffer,
                             const TrainConfig& config) {
  const std::vector<double> returns = compute_returns(buffer, config.gamma);

  LossBatch batch;
  batch.observations = buffer.observations;
  batch.actions = buffer.actions;
  batch.returns = returns;
  batch.advantages.resize(returns.size());
  // buffer.values came from these same params during collection.
  for (std::size_t i = 0; i < returns.size(); ++i) batch.advantages[i] = returns[i] - buffer.values[i];

  std::vector<double> grad(params.size(), 0.0);
  const LossTerms terms = a2c_loss(params, batch, {config.value_coef, config.entropy_coef},
                                   LossSelector::Total, grad);

  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);

  LossReport report{terms.policy_loss, terms.value_loss, terms.entropy, norm};
  if (!std::isfinite(terms.total) || !std::isfinite(norm)) {
    std::ostringstream msg;
    msg << "A2C loss diverged: policy_loss=" << terms.policy_loss
        << " value_loss=" << terms.value_loss << " entropy=" << terms.entropy
        << " grad_norm=" << norm << " params_finite=" << (params.all_finite() ? "yes" : "no");
    throw TrainingDivergence(msg.str());
  }
  if (norm > config.grad_clip_norm) {
    const double k = config.grad_clip_norm / norm;
    for (double& g : grad) g *= k;
  }
  opt.apply(params.theta(), grad);
  return report;
}

// Input standardisation for env observations: each keypoint coordinate is
// centred and scaled by its mean and SD over every state of the scene. The
// one-hot memory block passes through unchanged.
inline void set_observation_normalization(PolicyParams& p, const KeypointTable& table) {
  const Scene& s = table.scene();
  const int n = s.num_states();
  for (int k = 0; k < 2 * kNumKeypoints && k < p.shape().input; ++k) {
    double mean = 0.0, var = 0.0;
    for (int i = 0; i < n; ++i) mean += table.at(pose_from_index(s, i)).coords[k];
    mean /= n;
    for (int i = 0; i < n; ++i) {
      const double d = table.at(pose_from_index(s, i)).coords[k] - mean;
      var += d * d;
    }
    p.input_offset()[k] = mean;
    p.input_scale()[k] = 1.0 / std::max(std::sqrt(var / n), 1.0);
  }
}

inline PolicyParams make_policy(const PhotoEnv& env, const std::vector<int>& hidden,
                                std::uint64_t seed) {
  PolicyParams p = PolicyParams::initialized(
      NetShape{static_cast<int>(env.observation_size()), hidden, env.num_actions()}, seed);
  set_observation_normalization(p, env.table());
  return p;
}

// Episode return over the full step-cap horizon (see TrainConfig::hold_matched_view).
inline double episode_return(double reward_sum, int steps, bool matched, int max_steps, bool hold) {
  return reward_sum + (hold && matched ? static_cast<double>(max_steps - steps) : 0.0);
}

// Discounted value of holding the matched view (reward 1 per step) after
// the match: gamma / (1 - gamma), or the remaining steps when gamma == 1.
inline double hold_credit(double gamma, int remaining_steps) {
  if (gamma >= 1.0) return static_cast<double>(remaining_steps);
  return gamma / (1.0 - gamma);
}

struct CurvePoint {
  int update = 0;
  double mean_return = 0.0;
  double mean_length = 0.0;
  double success_rate = 0.0;
  long episodes = 0;  // completed so far
};

struct TrainResult {
  PolicyParams params;
  std::vector<CurvePoint> curve;
  LossReport last_loss;
};

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x9e3779b9u};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

inline TrainResult train(const Scene& scene, const KeypointVector& goal, const EnvConfig& env_config,
                         const TrainConfig& config) {
  validate(config);
  validate(env_config);
  auto table = std::make_shared<const KeypointTable>(scene);

  std::vector<PhotoEnv> envs;
  std::vector<Rng> rngs;
  std::vector<Observation> obs;
  std::vector<double> reward_sums(config.n_envs, 0.0);
  for (int e = 0; e < config.n_envs; ++e) {
    envs.emplace_back(table, env_config);
    rngs.emplace_back(stream_seed(config.seed, 1000 + e));
    obs.push_back(envs.back().reset(goal, rngs.back()));
  }

  TrainResult result;
  result.params = make_policy(envs.front(), config.hidden, stream_seed(config.seed, 0));
  if (config.total_updates == 0) return result;

  Optimizer opt(result.params.size(), config);
  struct Episode {
    double ret;
    int length;
    bool success;
  };
  std::deque<Episode> window;
  long completed = 0;

  RolloutBuffer buf(config.n_envs, config.n_steps);
  ForwardCache cache;
  for (int update = 1; update <= config.total_updates; ++update) {
    for (int t = 0; t < config.n_steps; ++t) {
      for (int e = 0; e < config.n_envs; ++e) {
        const std::size_t i = buf.at(e, t);
        buf.observations[i] = obs[e].flat();
        forward(result.params, buf.observations[i], cache);
        const int a = sample_action(cache.logits, rngs[e]);
        StepResult step = envs[e].step(a);
        const bool matched = step.info.terminated_by == Termination::Match;
        reward_sums[e] += step.reward;
        double r = step.reward;
        if (matched && config.hold_matched_view) r += hold_credit(config.gamma, env_config.max_steps - step.info.steps);
        // The step cap is a time limit, not a terminal state: bootstrap
        // through it so the value target stays a function of the pose.
        r *= config.reward_scale;
        if (step.info.terminated_by == Termination::StepCap)
          r += config.gamma * forward(result.params, step.observation.flat()).value;

        buf.actions[i] = a;
        buf.rewards[i] = r;
        buf.values[i] = cache.value;
        buf.dones[i] = step.done;
        if (step.done) {
          window.push_back({episode_return(reward_sums[e], step.info.steps, matched,
                                           env_config.max_steps, config.hold_matched_view),
                            step.info.steps, matched});
          if (static_cast<int>(window.size()) > config.stats_window) window.pop_front();
          ++completed;
          reward_sums[e] = 0.0;
          obs[e] = envs[e].reset(goal, rngs[e]);
        } else {
          obs[e] = std::move(step.observation);
        }
      }
    }
    for (int e = 0; e < config.n_envs; ++e) buf.bootstrap[e] = forward(result.params, obs[e].flat()).value;

    if (config.lr_decay)
      opt.set_learning_rate(config.learning_rate * (1.0 - static_cast<double>(update - 1) / config.total_updates));
    result.last_loss = a2c_update(result.params, opt, buf, config);

    if (update % config.log_interval == 0 || update == config.total_updates) {
      CurvePoint pt;
      pt.update = update;
      pt.episodes = completed;
      if (!window.empty()) {
        for (const Episode& ep : window) {
          pt.mean_return += ep.ret;
          pt.mean_length += ep.length;
          pt.success_rate += ep.success ? 1.0 : 0.0;
        }
        const double n = static_cast<double>(window.size());
        pt.mean_return /= n;
        pt.mean_length /= n;
        pt.success_rate /= n;
      }
      result.curve.push_back(pt);
    }
  }
  return result;
}

inline void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& curve) {
  os << "update,mean_return,mean_len,success_rate\n";
  char buf[128];
  for (const CurvePoint& p : curve) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.4f,%.4f\n", p.update, p.mean_return, p.mean_length,
                  p.success_rate);
    os << buf;
  }
}

// ---- evaluation ------------------------------------------------------------

// A controller picks an action index for the env's current state.
using Controller = std::function<int(const PhotoEnv&, const Observation&, Rng&)>;

enum class PolicyMode { Greedy, Sampled };

inline Controller policy_controller(std::shared_ptr<const PolicyParams> params, PolicyMode mode) {
  return [params = std::move(params), mode](const PhotoEnv&, const Observation& o, Rng& rng) {
    const PolicyOutput out = forward(*params, o.flat());
    return mode == PolicyMode::Greedy ? greedy_action(out.logits) : sample_action(out.logits, rng);
  };
}

inline Controller random_controller() {
  return [](const PhotoEnv& env, const Observation&, Rng& rng) {
    std::uniform_int_distribution<int> pick(0, env.num_actions() - 1);
    return pick(rng);
  };
}

struct EpisodeOutcome {
  std::vector<TraceRow> trace;
  KeypointVector final_keypoints;
  bool success = false;
  int actions = 0;
  double reward_sum = 0.0;
};

// Drive an already-reset env to the end of its episode.
inline EpisodeOutcome run_episode(PhotoEnv& env, const Observation& first, const Controller& ctl,
                                  Rng& rng) {
  EpisodeOutcome out;
  out.trace.push_back({0, env.pose(), "", reward(env.current_keypoints(), env.goal(), env.config().alpha),
                       env.distance_px(), env.done()});
  Observation o = first;
  out.success = env.done();  // start already matching
  while (!env.done()) {
    const int a = ctl(env, o, rng);
    StepResult r = env.step(a);
    out.reward_sum += r.reward;
    out.trace.push_back({r.info.steps, r.info.pose, to_string(env.actions()[a]), r.reward,
                         r.info.distance_px, r.done});
    out.success = r.info.terminated_by == Termination::Match;
    o = std::move(r.observation);
  }
  out.actions = env.steps();
  out.final_keypoints = env.current_keypoints();
  return out;
}

struct EvalStats {
  int episodes = 0;
  double success_rate = 0.0;
  double mean_actions = 0.0;  // over all episodes; failures count max_steps
  double sd_actions = 0.0;    // sample standard deviation of the same
  double mean_actions_success = 0.0;
  double sd_actions_success = 0.0;
  double mean_return = 0.0;
};

inline EvalStats evaluate(PhotoEnv& env, const KeypointVector& goal, int episodes,
                          const Controller& ctl, Rng& rng, bool hold_matched_view = true) {
  if (episodes < 1) throw InvalidArgument("evaluate: episodes must be >= 1");
  std::vector<double> counts, success_counts;
  EvalStats s;
  s.episodes = episodes;
  for (int i = 0; i < episodes; ++i) {
    const Observation first = env.reset(goal, rng);
    const EpisodeOutcome ep = run_episode(env, first, ctl, rng);
    counts.push_back(ep.actions);
    if (ep.success) success_counts.push_back(ep.actions);
    s.mean_return += episode_return(ep.reward_sum, ep.actions, ep.success, env.config().max_steps,
                                    hold_matched_view);
  }
  auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
    if (v.empty()) return;
    mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    if (v.size() < 2) return;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / (v.size() - 1));
  };
  mean_sd(counts, s.mean_actions, s.sd_actions);
  mean_sd(success_counts, s.mean_actions_success, s.sd_actions_success);
  s.success_rate = static_cast<double>(success_counts.size()) / episodes;
  s.mean_return /= episodes;
  return s;
}

}  // namespace photobot
