// photobot: train, evaluate and inspect the view-matching agent, replay
// tracker scenarios and run the compose pipeline.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "photobot/photobot.hpp"

namespace fs = std::filesystem;
using namespace photobot;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

RunConfig resolve(const Globals& g) {
  RunConfig c;
  if (!g.config_path.empty()) {
    if (!fs::exists(g.config_path)) throw UsageError("config file not found: " + g.config_path);
    c = load_config(g.config_path);
  }
  if (g.seed) c.seed = *g.seed;
  if (g.out) c.out_dir = *g.out;
  c.train.seed = c.seed;
  validate(c);
  return c;
}

fs::path prepare_out(const RunConfig& c) {
  fs::path dir(c.out_dir);
  fs::create_directories(dir);
  std::ofstream os(dir / "config.ini");
  write_config(os, c);
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

RobotPose parse_pose(const std::string& s) {
  int a = 0, b = 0, c = 0;
  char tail = 0;
  if (std::sscanf(s.c_str(), "%d,%d,%d%c", &a, &b, &c, &tail) != 3) throw UsageError("pose must be ix,iy,yaw_index");
  return {a, b, c};
}

KeypointVector load_template_or_fixture(const std::string& path, const RunConfig& c) {
  if (path.empty()) return project_keypoints(c.scene, c.template_pose);
  std::ifstream is(path);
  if (!is) throw UsageError("template file not found: " + path);
  TemplateFile t = read_template(is);
  if (t.width_px != c.scene.camera.width_px || t.height_px != c.scene.camera.height_px)
    throw FormatError("template frame size does not match the scene camera");
  return t.keypoints;
}

void print_stats(const char* label, const EvalStats& s) {
  std::printf("%-16s episodes %d  success %.3f  actions %.2f (SD %.2f)  successful-only %.2f (SD %.2f)  return %.3f\n",
              label, s.episodes, s.success_rate, s.mean_actions, s.sd_actions, s.mean_actions_success,
              s.sd_actions_success, s.mean_return);
}

void write_stats_csv(std::ostream& os, const std::string& label, const EvalStats& s, bool header) {
  if (header) os << "controller,episodes,success_rate,mean_actions,sd_actions,mean_actions_success,sd_actions_success,mean_return\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", label.c_str(), s.episodes, s.success_rate,
                s.mean_actions, s.sd_actions, s.mean_actions_success, s.sd_actions_success, s.mean_return);
  os << buf;
}

// ---- commands ---------------------------------------------------------------

int cmd_train(const Globals& g, const std::string& ablation, int seeds) {
  RunConfig c = resolve(g);
  const fs::path dir = prepare_out(c);
  if (!ablation.empty()) {
    const AblationKind kind = ablation == "memory" ? AblationKind::Memory : AblationKind::Velocity;
    std::vector<std::uint64_t> list;
    for (int i = 0; i < seeds; ++i) list.push_back(c.seed + i);
    const AblationReport rep = run_ablation(kind, c, list);
    for (const AblationRun& r : rep.runs) {
      std::string name = r.variant;
      for (char& ch : name)
        if (ch == '=') ch = '_';
      auto os = open_out(dir / ("curve_" + name + "_seed" + std::to_string(r.seed) + ".csv"));
      write_curve_csv(os, r.curve);
    }
    auto os = open_out(dir / ("ablation_" + ablation + ".csv"));
    write_ablation_csv(os, rep);
    std::printf("%s ablation over %d seed(s): %s mean final return %.4f, %s mean final return %.4f\n", ablation.c_str(),
                seeds, ablation_label(kind, false).c_str(), rep.baseline_mean, ablation_label(kind, true).c_str(),
                rep.variant_mean);
    if (rep.direction_holds)
      std::printf("direction: %s >= %s (holds)\n", ablation_label(kind, true).c_str(), ablation_label(kind, false).c_str());
    else
      std::printf("DIRECTION FLAG: %s finished below %s on this budget\n", ablation_label(kind, true).c_str(),
                  ablation_label(kind, false).c_str());
    return 0;
  }

  const KeypointVector goal = project_keypoints(c.scene, c.template_pose);
  TrainResult r = train(c.scene, goal, c.env, c.train);
  {
    auto os = open_out(dir / "curve.csv");
    write_curve_csv(os, r.curve);
  }
  save_params((dir / "params.txt").string(), {r.params, goal, c, c.seed});
  if (!r.curve.empty()) {
    const CurvePoint& p = r.curve.back();
    std::printf("trained %d updates: mean return %.3f, mean length %.2f, success %.3f\n", p.update, p.mean_return,
                p.mean_length, p.success_rate);
  } else {
    std::printf("trained 0 updates\n");
  }
  std::printf("wrote %s\n", (dir / "params.txt").string().c_str());
  return 0;
}

int cmd_eval(const Globals& g, const std::string& params_path, const std::string& mode, int episodes) {
  if (episodes < 1) throw UsageError("--episodes must be >= 1");
  RunConfig c;
  KeypointVector goal;
  std::shared_ptr<const PolicyParams> params;
  if (!params_path.empty()) {
    if (!fs::exists(params_path)) throw UsageError("params file not found: " + params_path);
    SavedPolicy saved = load_params(params_path);
    c = saved.config;  // the policy only fits the env it was trained in
    if (g.seed) c.seed = *g.seed;
    if (g.out) c.out_dir = *g.out;
    goal = saved.goal;
    params = std::make_shared<const PolicyParams>(std::move(saved.params));
  } else {
    c = resolve(g);
    goal = project_keypoints(c.scene, c.template_pose);
  }
  validate(c);
  const fs::path dir = prepare_out(c);

  auto table = std::make_shared<const KeypointTable>(c.scene);
  Controller ctl;
  if (mode == "oracle") {
    ctl = oracle_controller(match_region(table, goal, c.env.match_epsilon_px));
  } else if (mode == "random") {
    ctl = random_controller();
  } else if (mode == "greedy-baseline") {
    ctl = greedy_controller(goal);
  } else {
    if (!params) throw UsageError("mode '" + mode + "' needs --params");
    if (params->shape().input != static_cast<int>(PhotoEnv(table, c.env).observation_size()))
      throw FormatError("params do not fit this environment's observation size");
    ctl = policy_controller(params, mode == "sampled" ? PolicyMode::Sampled : PolicyMode::Greedy);
  }
  PhotoEnv env(table, c.env);
  Rng rng(stream_seed(c.seed, 7));
  const EvalStats s = evaluate(env, goal, episodes, ctl, rng, c.train.hold_matched_view);
  print_stats(mode.c_str(), s);
  auto os = open_out(dir / "eval.csv");
  write_stats_csv(os, mode, s, true);
  return 0;
}

int cmd_match(const Globals& g, const std::string& params_path, const std::string& controller,
              const std::string& start_s, const std::string& template_path) {
  RunConfig c;
  KeypointVector goal;
  std::shared_ptr<const PolicyParams> params;
  if (!params_path.empty()) {
    if (!fs::exists(params_path)) throw UsageError("params file not found: " + params_path);
    SavedPolicy saved = load_params(params_path);
    c = saved.config;
    if (g.seed) c.seed = *g.seed;
    if (g.out) c.out_dir = *g.out;
    goal = saved.goal;
    params = std::make_shared<const PolicyParams>(std::move(saved.params));
  } else {
    c = resolve(g);
    goal = load_template_or_fixture(template_path, c);
  }
  validate(c);
  const fs::path dir = prepare_out(c);
  auto table = std::make_shared<const KeypointTable>(c.scene);

  Controller ctl;
  if (controller == "policy") {
    if (!params) throw UsageError("controller 'policy' needs --params");
    ctl = policy_controller(params, PolicyMode::Greedy);
  } else if (controller == "greedy") {
    ctl = greedy_controller(goal);
  } else {
    ctl = oracle_controller(match_region(table, goal, c.env.match_epsilon_px));
  }
  Rng rng(stream_seed(c.seed, 11));
  RobotPose start = c.env.fixed_start;
  if (!start_s.empty()) {
    start = parse_pose(start_s);
  } else if (c.env.start == StartMode::Uniform) {
    PhotoEnv probe(table, c.env);
    probe.reset(goal, rng);
    start = probe.pose();
  }
  if (!in_range(c.scene, start)) throw UsageError("start pose outside the grid");
  const CaptureResult r = match_and_capture(ctl, table, goal, c.env, start, rng);
  auto os = open_out(dir / "trace.csv");
  write_trace_csv(os, r.trace);
  std::printf("start (%d,%d,%d) -> %s after %d actions, final distance %.2f px\n", start.ix, start.iy,
              start.yaw_index, r.success ? "match" : "no match", r.actions, r.trace.back().distance_px);
  return r.success ? 0 : 1;
}

int cmd_oracle(const Globals& g, const std::string& template_path) {
  RunConfig c = resolve(g);
  const fs::path dir = prepare_out(c);
  const KeypointVector goal = load_template_or_fixture(template_path, c);
  auto table = std::make_shared<const KeypointTable>(c.scene);
  const OracleResult best = best_state(*table, goal, c.env.alpha);
  {
    auto os = open_out(dir / "reward_table.csv");
    write_reward_table_csv(os, c.scene, best);
  }
  const auto lengths = path_lengths(c.scene, match_region(table, goal, c.env.match_epsilon_px), c.env.velocity_levels);
  const auto hist = histogram(lengths);
  {
    auto os = open_out(dir / "path_lengths.csv");
    os << "length,count\n";
    for (const auto& [len, n] : hist) os << len << ',' << n << '\n';
  }
  std::printf("best pose (%d,%d,%d) reward %.6f\n", best.best_pose.ix, best.best_pose.iy, best.best_pose.yaw_index,
              best.best_reward);
  int total = 0, sum = 0, reach = 0;
  for (int l : lengths) {
    ++total;
    if (l >= 0) {
      sum += l;
      ++reach;
    }
  }
  std::printf("BFS path lengths into the match region over %d starts: reachable %d, mean %.3f\n", total, reach,
              reach ? static_cast<double>(sum) / reach : 0.0);
  for (const auto& [len, n] : hist) std::printf("  %3d actions: %d\n", len, n);
  return 0;
}

int cmd_track(const Globals& g, const std::string& scenario) {
  RunConfig c = resolve(g);
  if (!fs::exists(scenario)) throw UsageError("scenario file not found: " + scenario);
  std::ifstream is(scenario);
  const auto frames = read_scenario_csv(is);
  const fs::path dir = prepare_out(c);
  const auto trace = run_script(frames, c.tracker);
  auto os = open_out(dir / "tracker_trace.csv");
  write_tracker_trace_csv(os, trace);
  std::printf("replayed %zu frames\n", trace.size());
  return 0;
}

int cmd_compose(const Globals& g, const std::string& controller, const std::string& params_path, bool ascii,
                bool ppm) {
  RunConfig c = resolve(g);
  const fs::path dir = prepare_out(c);
  auto table = std::make_shared<const KeypointTable>(c.scene);

  CandidateOptions opt = default_candidate_options(c.scene);
  opt.fov_levels_deg = c.fov_levels_deg;
  opt.with_images = ppm;
  CandidateSet cs = generate_candidates(c.scene, c.panorama_ix, c.panorama_iy, opt);
  const Scorer scorer = make_scorer(c.scorer, c.scene.camera);
  std::vector<CandidateTemplate> pool = reachable_candidates(cs.kept, *table, c.env.match_epsilon_px);
  const Selection sel = select_template(pool, scorer);
  {
    auto os = open_out(dir / "candidates.csv");
    write_candidate_report_csv(os, pool, sel.index);
  }
  {
    auto os = open_out(dir / "template.txt");
    write_template(os, sel.chosen.keypoints, c.scene.camera.width_px, c.scene.camera.height_px);
  }
  if (ppm && sel.chosen.image) write_ppm(dir / "template.ppm", *sel.chosen.image);

  std::printf("candidates: %d generated, %zu contain the person, %zu matchable from the grid\n", cs.generated,
              cs.kept.size(), pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i)
    std::printf("  [%2zu] yaw %6.1f deg  level %d  score %.6f%s\n", i, rad2deg(pool[i].yaw_rad),
                pool[i].distance_level, *pool[i].score, i == sel.index ? "  <- selected" : "");

  Controller ctl;
  std::shared_ptr<const PolicyParams> params;
  if (controller == "policy") {
    if (params_path.empty()) throw UsageError("controller 'policy' needs --params");
    SavedPolicy saved = load_params(params_path);
    params = std::make_shared<const PolicyParams>(std::move(saved.params));
    ctl = policy_controller(params, PolicyMode::Greedy);
  } else if (controller == "greedy") {
    ctl = greedy_controller(sel.chosen.keypoints);
  } else {
    ctl = oracle_controller(match_region(table, sel.chosen.keypoints, c.env.match_epsilon_px));
  }

  Rng rng(stream_seed(c.seed, 13));
  RobotPose start = c.env.fixed_start;
  if (c.env.start == StartMode::Uniform) {
    PhotoEnv probe(table, c.env);
    probe.reset(sel.chosen.keypoints, rng);
    start = probe.pose();
  }
  const CaptureResult r = match_and_capture(ctl, table, sel.chosen.keypoints, c.env, start, rng);
  {
    auto os = open_out(dir / "trace.csv");
    write_trace_csv(os, r.trace);
  }
  {
    auto os = open_out(dir / "final_keypoints.txt");
    write_template(os, r.final_keypoints, c.scene.camera.width_px, c.scene.camera.height_px);
  }
  const bool shutter = pose_trigger(r.final_keypoints, sel.chosen.keypoints, c.trigger_threshold);
  std::printf("matching from (%d,%d,%d): %s after %d actions; pose trigger %s (similarity %.4f)\n", start.ix, start.iy,
              start.yaw_index, r.success ? "match" : "no match", r.actions, shutter ? "fired" : "not fired",
              pose_similarity(r.final_keypoints, sel.chosen.keypoints));
  if (ascii) std::printf("%s", render_ascii_path(c.scene, r.trace).c_str());
  return r.success ? 0 : 1;
}

int cmd_grad_check(const Globals& g, int instances) {
  if (instances < 1) throw UsageError("--instances must be >= 1");
  RunConfig c = resolve(g);
  const fs::path dir = prepare_out(c);
  auto os = open_out(dir / "grad_check.csv");
  os << "instance,term,max_rel_error\n";
  double worst = 0.0;
  const char* names[] = {"total", "policy", "value", "entropy"};
  for (int i = 0; i < instances; ++i) {
    const GradInstance inst = random_grad_instance(stream_seed(c.seed, 5000 + i));
    for (int w = 0; w < 4; ++w) {
      const auto r = grad_check(inst.params, inst.batch, {}, static_cast<LossSelector>(w));
      worst = std::max(worst, r.max_rel_error);
      char buf[96];
      std::snprintf(buf, sizeof buf, "%d,%s,%.6e\n", i, names[w], r.max_rel_error);
      os << buf;
    }
  }
  std::printf("gradient check over %d instances: max relative error %.3e (%s 1e-4)\n", instances, worst,
              worst <= 1e-4 ? "within" : "EXCEEDS");
  return worst <= 1e-4 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"photobot: learned view matching for robot photography"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "run config file ([section] key = value)");
  app.add_option("--seed", g.seed, "run seed (overrides [run] seed)");
  app.add_option("--out", g.out, "output directory (overrides [run] out)");

  std::string ablation, params_path, mode = "greedy", controller = "oracle", start, template_path, scenario;
  int seeds = 5, episodes = -1, instances = 100;
  bool ascii = false, ppm = false;

  auto* train = app.add_subcommand("train", "train a policy, or run an ablation");
  train->add_option("--ablation", ablation, "memory | velocity")->check(CLI::IsMember({"memory", "velocity"}));
  train->add_option("--seeds", seeds, "seeds per ablation arm")->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("eval", "evaluate a controller over sampled starts");
  eval->add_option("--params", params_path, "params file from train");
  eval->add_option("--mode", mode, "greedy | sampled | oracle | random | greedy-baseline")
      ->check(CLI::IsMember({"greedy", "sampled", "oracle", "random", "greedy-baseline"}));
  eval->add_option("--episodes", episodes, "episode count (default: [run] episodes)");

  auto* match = app.add_subcommand("match", "run one matching episode and write its trace");
  match->add_option("--params", params_path, "params file (template and config come from it)");
  match->add_option("--controller", controller, "oracle | greedy | policy")
      ->check(CLI::IsMember({"oracle", "greedy", "policy"}));
  match->add_option("--start", start, "start pose ix,iy,yaw_index");
  match->add_option("--template", template_path, "template file (K W H / name x y)");

  auto* oracle = app.add_subcommand("oracle", "exhaustive best view, reward table and BFS path lengths");
  oracle->add_option("--template", template_path, "template file (default: fixture template)");

  auto* track = app.add_subcommand("track", "replay a tracker scenario");
  track->add_option("--scenario", scenario, "scenario CSV")->required();

  auto* compose = app.add_subcommand("compose", "select a template from the panorama and match it");
  compose->add_option("--controller", controller, "oracle | greedy | policy")
      ->check(CLI::IsMember({"oracle", "greedy", "policy"}));
  compose->add_option("--params", params_path, "params file for the policy controller");
  compose->add_flag("--ascii", ascii, "print the episode path on the grid");
  compose->add_flag("--ppm", ppm, "also write the selected crop as template.ppm");

  auto* gc = app.add_subcommand("grad-check", "finite-difference check of the loss gradients");
  gc->add_option("--instances", instances, "random (params, batch) instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*train) return cmd_train(g, ablation, seeds);
    if (*eval) {
      int n = episodes;
      if (n < 0) n = (params_path.empty() ? resolve(g) : load_params(params_path).config).episodes;
      return cmd_eval(g, params_path, mode, n);
    }
    if (*match) return cmd_match(g, params_path, controller, start, template_path);
    if (*oracle) return cmd_oracle(g, template_path);
    if (*track) return cmd_track(g, scenario);
    if (*compose) return cmd_compose(g, controller, params_path, ascii, ppm);
    if (*gc) return cmd_grad_check(g, instances);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
