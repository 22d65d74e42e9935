#pragma once

// Multi-run drivers shared by the command-line tool and the test suites:
// seeded gradient-check instances and the memory / velocity ablations.

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "photobot/a2c.hpp"
#include "photobot/config.hpp"
#include "photobot/policy_net.hpp"

namespace photobot {

struct GradInstance {
  PolicyParams params;
  LossBatch batch;
};

// Random weights, observations, actions, returns and advantages for a small
// network. Weights are drawn wider than the training init so the tanh units
// are exercised away from their linear range.
inline GradInstance random_grad_instance(std::uint64_t seed, const NetShape& shape = {6, {5, 4}, 4},
                                         int batch_size = 8) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, shape.actions - 1);
  GradInstance g{PolicyParams(shape), {}};
  for (double& v : g.params.theta()) v = 0.5 * normal(rng);
  for (int b = 0; b < batch_size; ++b) {
    std::vector<double> obs(shape.input);
    for (double& v : obs) v = normal(rng);
    g.batch.observations.push_back(std::move(obs));
    g.batch.actions.push_back(pick(rng));
    g.batch.returns.push_back(normal(rng));
    g.batch.advantages.push_back(normal(rng));
  }
  return g;
}

enum class AblationKind { Memory, Velocity };

inline const char* to_string(AblationKind k) { return k == AblationKind::Memory ? "memory" : "velocity"; }

struct AblationRun {
  std::string variant;  // e.g. "memory_len=5"
  bool is_variant = false;
  std::uint64_t seed = 0;
  double final_return = 0.0;
  double final_success = 0.0;
  std::vector<CurvePoint> curve;
};

struct AblationReport {
  AblationKind kind = AblationKind::Memory;
  std::vector<AblationRun> runs;
  double baseline_mean = 0.0;
  double variant_mean = 0.0;
  bool direction_holds = false;  // variant_mean >= baseline_mean
};

inline EnvConfig ablation_env(AblationKind kind, EnvConfig base, bool variant) {
  if (kind == AblationKind::Memory)
    base.memory_len = variant ? 5 : 0;
  else
    base.velocity_levels = variant ? 3 : 1;
  return base;
}

inline std::string ablation_label(AblationKind kind, bool variant) {
  if (kind == AblationKind::Memory) return variant ? "memory_len=5" : "memory_len=0";
  return variant ? "velocity_levels=3" : "velocity_levels=1";
}

// Trains baseline and variant for each seed; the final training return is
// the last curve point (mean over the trailing stats window).
inline AblationReport run_ablation(AblationKind kind, const RunConfig& cfg, const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw InvalidArgument("ablation needs at least one seed");
  AblationReport rep;
  rep.kind = kind;
  const KeypointVector goal = project_keypoints(cfg.scene, cfg.template_pose);
  for (bool variant : {false, true}) {
    const EnvConfig env = ablation_env(kind, cfg.env, variant);
    for (std::uint64_t seed : seeds) {
      TrainConfig tc = cfg.train;
      tc.seed = seed;
      TrainResult r = train(cfg.scene, goal, env, tc);
      AblationRun run;
      run.variant = ablation_label(kind, variant);
      run.is_variant = variant;
      run.seed = seed;
      if (!r.curve.empty()) {
        run.final_return = r.curve.back().mean_return;
        run.final_success = r.curve.back().success_rate;
      }
      run.curve = std::move(r.curve);
      (variant ? rep.variant_mean : rep.baseline_mean) += run.final_return / seeds.size();
      rep.runs.push_back(std::move(run));
    }
  }
  rep.direction_holds = rep.variant_mean >= rep.baseline_mean;
  return rep;
}

inline void write_ablation_csv(std::ostream& os, const AblationReport& rep) {
  os << "variant,seed,final_return,final_success_rate\n";
  char buf[160];
  for (const AblationRun& r : rep.runs) {
    std::snprintf(buf, sizeof buf, "%s,%llu,%.6f,%.4f\n", r.variant.c_str(),
                  static_cast<unsigned long long>(r.seed), r.final_return, r.final_success);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "mean:%s,,%.6f,\nmean:%s,,%.6f,\n",
                ablation_label(rep.kind, false).c_str(), rep.baseline_mean,
                ablation_label(rep.kind, true).c_str(), rep.variant_mean);
  os << buf;
}

}  // namespace photobot
