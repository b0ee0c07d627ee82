// Command-line front end: train, generate, simulate, render, eval, probe.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "causalaf/errors.hpp"
#include "causalaf/experiments.hpp"
#include "causalaf/generator.hpp"
#include "causalaf/render.hpp"
#include "causalaf/simulator.hpp"
#include "causalaf/trainer.hpp"

namespace fs = std::filesystem;
using namespace causalaf;

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open " + path);
  try {
    nlohmann::json doc;
    in >> doc;
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path);
  out << text;
}

BehavioralGraph read_bg(const std::string& path, std::size_t index, const CausalGraph& cg) {
  const nlohmann::json doc = read_json(path);
  if (doc.contains("graphs")) {
    const auto& g = doc["graphs"];
    if (index >= g.size())
      throw Error(ErrorCode::IndexOutOfRange, "graph index " + std::to_string(index) + " out of range");
    return bg_from_json(g[index], cg);
  }
  return bg_from_json(doc, cg);
}

struct Common {
  std::string scenario = "pedestrian";
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::optional<std::size_t> episodes;
  std::optional<double> temperature;
  std::string out;
  std::string checkpoint;
  std::string mode;
};

void add_common(CLI::App* cmd, Common& c, bool many_seeds = false) {
  cmd->add_option("--scenario", c.scenario, "builtin scenario name or spec file");
  cmd->add_option("--config", c.config, "JSON configuration file");
  if (many_seeds)
    cmd->add_option("--seed", c.seeds, "seed (repeatable)");
  else
    cmd->add_option("--seed", c.seeds, "seed")->expected(1);
  cmd->add_option("--episodes", c.episodes, "training episodes");
  cmd->add_option("--temperature", c.temperature, "sampling temperature");
  cmd->add_option("--out", c.out, "output file or directory");
  cmd->add_option("--checkpoint", c.checkpoint, "checkpoint file (directory for eval)");
}

TrainConfig train_config(const Common& c) {
  TrainConfig cfg;
  if (!c.config.empty()) {
    const auto doc = read_json(c.config);
    cfg = train_config_from_json(doc.contains("train") ? doc["train"] : doc);
  }
  if (!c.seeds.empty()) cfg.seed = c.seeds.front();
  if (c.episodes) cfg.episodes = *c.episodes;
  if (c.temperature) {
    cfg.temperature = *c.temperature;
    cfg.temperature_schedule.clear();
  }
  if (!c.mode.empty()) cfg.mode = mask_mode_from_string(c.mode);
  cfg.validate();
  return cfg;
}

int cmd_train(const Common& c) {
  const ScenarioSpec spec = load_scenario(c.scenario);
  TrainConfig cfg = train_config(c);
  const fs::path dir = c.out.empty() ? fs::path("run") : fs::path(c.out);
  fs::create_directories(dir);
  cfg.metrics_path = (dir / "metrics.tsv").string();
  if (cfg.checkpoint_every > 0) cfg.checkpoint_dir = dir.string();

  TrainState st = c.checkpoint.empty() ? initial_state(spec, cfg) : state_from_checkpoint(load_checkpoint(c.checkpoint));
  TrainState last = st;
  const TrainResult r = train_from(st, spec, cfg, [&](const TrainState& s, const UpdateMetrics&) {
    if (s.episode >= cfg.episodes || (cfg.stop_on_convergence && s.metrics.converged)) last = s;
    return true;
  });
  last.params = r.params;
  last.metrics = r.metrics;
  last.episode = r.metrics.objectives.size();
  save_checkpoint((dir / "final.json").string(), make_checkpoint(last, cfg));

  nlohmann::json man = {{"format", "causalaf-manifest"},
                        {"version", kVersion},
                        {"command", "train"},
                        {"scenario", to_json(spec)},
                        {"train", to_json(cfg)},
                        {"resumed_from", c.checkpoint},
                        {"outputs", {"final.json", "metrics.tsv"}}};
  write_text((dir / "manifest.json").string(), man.dump(2) + "\n");
  std::cout << "episodes " << r.metrics.objectives.size() << "  final-100 mean " << r.metrics.final_mean(100)
            << (r.metrics.converged ? "  converged at " + std::to_string(r.metrics.converged_at) : std::string())
            << "\ncheckpoint " << (dir / "final.json").string() << "\n";
  return 0;
}

int cmd_generate(const Common& c, std::size_t count) {
  const ScenarioSpec spec = load_scenario(c.scenario);
  if (c.checkpoint.empty()) throw Error(ErrorCode::MissingCheckpoint, "generate needs --checkpoint");
  const Checkpoint ckpt = load_checkpoint(c.checkpoint);
  if (ckpt.params.dims() != scenario_dims(spec))
    throw Error(ErrorCode::ShapeMismatch, "checkpoint does not fit scenario " + c.scenario);
  SamplerConfig sc;
  sc.cg = spec.cg;
  sc.mode = c.mode.empty() ? MaskMode::CausalAF : mask_mode_from_string(c.mode);
  sc.temperature = c.temperature.value_or(1.0);
  const std::uint64_t seed = c.seeds.empty() ? 0 : c.seeds.front();
  nlohmann::json graphs = nlohmann::json::array();
  int hits = 0;
  for (std::size_t k = 0; k < count; ++k) {
    Rng rng = Rng::derive(seed, k);
    const Sample s = sample_bg(ckpt.params, sc, rng);
    nlohmann::json g = bg_to_json(s.graph, spec.cg);
    g["log_likelihood"] = s.record.log_likelihood;
    hits += objective(execute(s.graph, spec), spec.epsilon);
    graphs.push_back(std::move(g));
  }
  write_text(c.out, nlohmann::json{{"format", "causalaf-bg-set"}, {"graphs", graphs}}.dump(2) + "\n");
  std::cerr << count << " graphs, " << hits << " collisions\n";
  return 0;
}

BehavioralGraph input_graph(const Common& c, const ScenarioSpec& spec, const std::string& input, std::size_t index) {
  if (!input.empty()) return read_bg(input, index, spec.cg);
  // Without a checkpoint, sample from an untrained flow.
  TrainConfig tc;
  tc.seed = c.seeds.empty() ? 0 : c.seeds.front();
  const FlowParameters params =
      c.checkpoint.empty() ? initial_state(spec, tc).params : load_checkpoint(c.checkpoint).params;
  SamplerConfig sc;
  sc.cg = spec.cg;
  sc.mode = c.mode.empty() ? MaskMode::CausalAF : mask_mode_from_string(c.mode);
  sc.temperature = c.temperature.value_or(1.0);
  Rng rng = Rng::derive(c.seeds.empty() ? 0 : c.seeds.front(), index);
  return sample_bg(params, sc, rng).graph;
}

int cmd_simulate(const Common& c, const std::string& input, std::size_t index, bool strict,
                 const std::string& format) {
  const ScenarioSpec spec = load_scenario(c.scenario);
  const BehavioralGraph bg = input_graph(c, spec, input, index);
  const ScenarioTrace trace = execute(bg, spec, strict);
  if (!c.out.empty()) write_text(c.out, render_trace(trace, render_format_from_string(format), &spec.layout));
  nlohmann::json summary = {{"collided", trace.collided},
                            {"objective", objective(trace, spec.epsilon)},
                            {"step_count", trace.step_count},
                            {"closest_object", trace.closest_object},
                            {"warnings", trace.warnings}};
  summary["min_distance"] = std::isfinite(trace.min_distance) ? nlohmann::json(trace.min_distance) : nlohmann::json(nullptr);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_render(const Common& c, const std::string& input, std::size_t index, const std::string& what,
               const std::string& format, std::optional<std::size_t> step) {
  const RenderFormat f = render_format_from_string(format);
  const ScenarioSpec spec = load_scenario(c.scenario);
  const BehavioralGraph bg = input_graph(c, spec, input, index);
  if (what == "graph") {
    write_text(c.out, render_bg(bg, spec.cg, f));
  } else if (what == "trace") {
    write_text(c.out, render_trace(execute(bg, spec), f, &spec.layout, step));
  } else {
    throw Error(ErrorCode::UnknownFormat, "render target must be 'trace' or 'graph'");
  }
  return 0;
}

ExperimentPlan plan_from(const Common& c, const std::vector<std::string>& scenarios, const std::string& kind) {
  ExperimentPlan plan;
  if (!c.config.empty()) plan = experiment_plan_from_json(read_json(c.config));
  if (!kind.empty()) plan.kind = experiment_kind_from_string(kind);
  if (!scenarios.empty()) plan.scenarios = scenarios;
  if (plan.scenarios.empty()) plan.scenarios = {c.scenario};
  if (!c.seeds.empty()) plan.seeds = c.seeds;
  if (plan.seeds.empty()) plan.seeds = {0};
  if (c.episodes) plan.train.episodes = *c.episodes;
  if (c.temperature) plan.train.temperature = *c.temperature;
  if (!c.out.empty()) plan.output_dir = c.out;
  if (!c.checkpoint.empty()) plan.checkpoint_dir = c.checkpoint;
  return plan;
}

int cmd_eval(const ExperimentPlan& plan) {
  for (const auto& f : run_experiment(plan)) std::cout << f << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causally constrained generation of safety-critical driving scenarios"};
  app.require_subcommand(1);

  Common c;
  std::size_t count = 1, index = 0;
  std::string input, format = "tsv", render_format = "svg", what = "trace", kind;
  std::vector<std::string> scenarios;
  bool strict = false;
  std::optional<std::size_t> step;
  std::optional<std::size_t> samples;

  auto* train = app.add_subcommand("train", "train a generator against the simulator");
  add_common(train, c);
  train->add_option("--mode", c.mode, "baseline, baseline+com or causalaf");

  auto* generate = app.add_subcommand("generate", "sample behavioral graphs from a checkpoint");
  add_common(generate, c);
  generate->add_option("--count", count, "number of graphs");
  generate->add_option("--mode", c.mode, "mask mode used for sampling");

  auto* simulate = app.add_subcommand("simulate", "execute one behavioral graph");
  add_common(simulate, c);
  simulate->add_option("--input", input, "behavioral graph file (single or set)");
  simulate->add_option("--index", index, "graph index within a set, or sample index");
  simulate->add_flag("--strict", strict, "reject objects outside the road layout");
  simulate->add_option("--format", format, "trace export format: tsv, csv or svg");

  auto* render = app.add_subcommand("render", "render a graph or its simulated trace");
  add_common(render, c);
  render->add_option("--input", input, "behavioral graph file (single or set)");
  render->add_option("--index", index, "graph index within a set, or sample index");
  render->add_option("--what", what, "trace or graph");
  render->add_option("--format", render_format, "svg, tsv or csv");
  render->add_option("--step", step, "render one recorded state");

  auto* eval = app.add_subcommand("eval", "run an experiment plan");
  add_common(eval, c, true);
  eval->add_option("--kind", kind, "ablation, temperature-sweep, node-sweep, robustness or probe");
  eval->add_option("--scenarios", scenarios, "scenario list (overrides --scenario)");

  auto* probe = app.add_subcommand("probe", "compare collision likelihood under the true and an edge-deleted graph");
  add_common(probe, c, true);
  probe->add_option("--samples", samples, "draws per trained model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train) return cmd_train(c);
    if (*generate) return cmd_generate(c, count);
    if (*simulate) return cmd_simulate(c, input, index, strict, format);
    if (*render) return cmd_render(c, input, index, what, render_format, step);
    if (*eval) return cmd_eval(plan_from(c, scenarios, kind));
    if (*probe) {
      ExperimentPlan plan = plan_from(c, {}, "probe");
      if (samples) plan.probe_samples = *samples;
      return cmd_eval(plan);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
