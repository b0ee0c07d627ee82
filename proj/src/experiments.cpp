#include "causalaf/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "causalaf/errors.hpp"
#include "causalaf/render.hpp"

namespace causalaf {

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Ablation: return "ablation";
    case ExperimentKind::TemperatureSweep: return "temperature-sweep";
    case ExperimentKind::NodeSweep: return "node-sweep";
    case ExperimentKind::Robustness: return "robustness";
    case ExperimentKind::Probe: return "probe";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
  for (auto k : {ExperimentKind::Ablation, ExperimentKind::TemperatureSweep, ExperimentKind::NodeSweep,
                 ExperimentKind::Robustness, ExperimentKind::Probe})
    if (to_string(k) == name) return k;
  throw Error(ErrorCode::InvalidConfig, "unknown experiment kind '" + std::string(name) + "'");
}

void ExperimentPlan::validate() const {
  if (seeds.empty()) throw Error(ErrorCode::InvalidConfig, "experiment needs at least one seed");
  if (scenarios.empty()) throw Error(ErrorCode::InvalidConfig, "experiment needs at least one scenario");
  if (modes.empty()) throw Error(ErrorCode::InvalidConfig, "experiment needs at least one mask mode");
  for (int c : irrelevant_counts)
    if (c < 0) throw Error(ErrorCode::InvalidConfig, "irrelevant-node counts must be >= 0");
  if (kind == ExperimentKind::NodeSweep && irrelevant_counts.empty())
    throw Error(ErrorCode::InvalidConfig, "node sweep needs at least one count");
  if (kind == ExperimentKind::TemperatureSweep && temperatures.size() < 2)
    throw Error(ErrorCode::TooFewTemperatures, "temperature sweep needs at least two temperatures");
  for (double t : temperatures)
    if (!(t > 0.0)) throw Error(ErrorCode::NonPositiveTemperature, "temperatures must be > 0");
  train.validate();
  agent.validate();
}

nlohmann::json to_json(const ExperimentPlan& p) {
  nlohmann::json modes = nlohmann::json::array();
  for (auto m : p.modes) modes.push_back(to_string(m));
  return {{"kind", to_string(p.kind)},
          {"scenarios", p.scenarios},
          {"seeds", p.seeds},
          {"train", to_json(p.train)},
          {"modes", modes},
          {"temperatures", p.temperatures},
          {"irrelevant_counts", p.irrelevant_counts},
          {"agent", to_json(p.agent)},
          {"eval_scenarios", p.eval_scenarios},
          {"probe_samples", p.probe_samples},
          {"checkpoint_dir", p.checkpoint_dir},
          {"output_dir", p.output_dir}};
}

ExperimentPlan experiment_plan_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "experiment plan must be an object");
  ExperimentPlan p;
  try {
    if (doc.contains("kind")) p.kind = experiment_kind_from_string(doc["kind"].get<std::string>());
    if (doc.contains("scenarios")) p.scenarios = doc["scenarios"].get<std::vector<std::string>>();
    if (doc.contains("seeds")) p.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
    if (doc.contains("train")) p.train = train_config_from_json(doc["train"]);
    if (doc.contains("modes")) {
      p.modes.clear();
      for (const auto& m : doc["modes"]) p.modes.push_back(mask_mode_from_string(m.get<std::string>()));
    }
    if (doc.contains("temperatures")) p.temperatures = doc["temperatures"].get<std::vector<double>>();
    if (doc.contains("irrelevant_counts")) p.irrelevant_counts = doc["irrelevant_counts"].get<std::vector<int>>();
    if (doc.contains("agent")) p.agent = agent_config_from_json(doc["agent"]);
    p.eval_scenarios = doc.value("eval_scenarios", p.eval_scenarios);
    p.probe_samples = doc.value("probe_samples", p.probe_samples);
    p.checkpoint_dir = doc.value("checkpoint_dir", p.checkpoint_dir);
    p.output_dir = doc.value("output_dir", p.output_dir);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("experiment plan: ") + e.what());
  }
  return p;
}

std::string checkpoint_path(const std::string& dir, const std::string& scenario, std::uint64_t seed) {
  const std::string stem = std::filesystem::path(scenario).stem().string();
  return (std::filesystem::path(dir) / (stem + "-seed" + std::to_string(seed) + ".json")).string();
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kEvalStream = 0xe7a1ULL;

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct TrainedRun {
  RunSummary summary;
  TrainState state;
};

// Trains one configuration. With zero episodes the summary reports the
// untrained collision rate.
TrainedRun train_run(const ScenarioSpec& spec, const std::string& scenario, TrainConfig cfg, MaskMode mode,
                     std::uint64_t seed) {
  cfg.mode = mode;
  cfg.seed = seed;
  cfg.metrics_path.clear();
  cfg.checkpoint_every = 0;
  cfg.validate();
  TrainedRun out;
  out.state = initial_state(spec, cfg);
  const TrainCallback keep = [&](const TrainState& st, const UpdateMetrics&) {
    if (st.episode >= cfg.episodes || (cfg.stop_on_convergence && st.metrics.converged)) out.state = st;
    return true;
  };
  const TrainResult r = train_from(out.state, spec, cfg, keep);
  out.state.params = r.params;
  out.state.metrics = r.metrics;
  out.state.episode = r.metrics.objectives.size();

  RunSummary& s = out.summary;
  s.scenario = scenario;
  s.mode = mode;
  s.seed = seed;
  s.temperature = cfg.temperature;
  s.irrelevant = spec.cg.find(kIrrelevantType) ? spec.cg.multiplicity_max(*spec.cg.find(kIrrelevantType)) : 0;
  s.episodes = r.metrics.objectives.size();
  s.converged = r.metrics.converged;
  if (s.episodes == 0) {
    s.final_mean = collision_rate(r.params, spec, mode, cfg.temperature, 100, seed ^ kEvalStream).rate;
  } else {
    const auto& obj = r.metrics.objectives;
    const std::size_t n = std::min<std::size_t>(100, obj.size());
    std::vector<double> tail(obj.end() - static_cast<std::ptrdiff_t>(n), obj.end());
    s.final_mean = mean(tail);
    const double m = s.final_mean;
    double v = 0.0;
    for (double x : tail) v += (x - m) * (x - m);
    s.final_std = std::sqrt(v / static_cast<double>(n));
  }
  return out;
}

std::vector<double> moving_average_curve(const std::vector<int>& xs, std::size_t window) {
  std::vector<double> out(xs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sum += xs[i];
    if (i >= window) sum -= xs[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

}  // namespace

std::vector<BehavioralGraph> random_scenarios(const ScenarioSpec& spec, std::size_t count, std::uint64_t seed) {
  std::vector<BehavioralGraph> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Rng rng = Rng::derive(seed, k);
    out.push_back(random_bg(spec, rng));
  }
  return out;
}

std::vector<BehavioralGraph> generated_scenarios(const FlowParameters& params, const ScenarioSpec& spec,
                                                 double temperature, std::size_t count, std::uint64_t seed) {
  SamplerConfig sc;
  sc.cg = spec.cg;
  sc.mode = MaskMode::CausalAF;
  sc.temperature = temperature;
  std::vector<BehavioralGraph> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Rng rng = Rng::derive(seed, k);
    out.push_back(sample_bg(params, sc, rng).graph);
  }
  return out;
}

AblationResult run_ablation(const ExperimentPlan& plan) {
  plan.validate();
  AblationResult out;
  for (const auto& name : plan.scenarios) {
    const ScenarioSpec spec = load_scenario(name);
    for (auto seed : plan.seeds)
      for (auto mode : plan.modes) {
        TrainedRun r = train_run(spec, name, plan.train, mode, seed);
        if (mode == MaskMode::CausalAF && !plan.checkpoint_dir.empty()) {
          std::filesystem::create_directories(plan.checkpoint_dir);
          TrainConfig cfg = plan.train;
          cfg.mode = mode;
          cfg.seed = seed;
          save_checkpoint(checkpoint_path(plan.checkpoint_dir, name, seed), make_checkpoint(r.state, cfg));
        }
        out.runs.push_back(r.summary);
      }
  }
  return out;
}

TemperatureSweepResult run_temperature_sweep(const ExperimentPlan& plan) {
  plan.validate();
  TemperatureSweepResult out;
  for (const auto& name : plan.scenarios) {
    const ScenarioSpec spec = load_scenario(name);
    for (double t : plan.temperatures)
      for (auto mode : plan.modes) {
        std::vector<double> finals, late, reach;
        for (auto seed : plan.seeds) {
          TrainConfig cfg = plan.train;
          cfg.temperature = t;
          cfg.temperature_schedule.clear();
          const TrainedRun r = train_run(spec, name, cfg, mode, seed);
          out.runs.push_back(r.summary);
          Curve c;
          c.scenario = name;
          c.mode = mode;
          c.seed = seed;
          c.temperature = t;
          c.moving_average = moving_average_curve(r.state.metrics.objectives, 100);
          finals.push_back(r.summary.final_mean);

          std::vector<double> batch_means;
          for (const auto& u : r.state.metrics.updates) batch_means.push_back(u.mean_objective);
          const std::vector<double> second(batch_means.begin() + static_cast<std::ptrdiff_t>(batch_means.size() / 2),
                                           batch_means.end());
          const double sd = stddev(second);
          late.push_back(sd * sd);
          std::size_t hit = c.moving_average.size();
          for (std::size_t i = 0; i < c.moving_average.size(); ++i)
            if (c.moving_average[i] >= 0.5) {
              hit = i + 1;
              break;
            }
          reach.push_back(static_cast<double>(hit));
          out.curves.push_back(std::move(c));
        }
        out.stats.push_back({t, mode, mean(finals), stddev(finals), mean(late), mean(reach)});
      }
  }
  return out;
}

NodeSweepResult run_node_sweep(const ExperimentPlan& plan) {
  plan.validate();
  NodeSweepResult out;
  const std::string& name = plan.scenarios.front();
  for (int count : plan.irrelevant_counts) {
    const ScenarioSpec spec = load_scenario(name, count);
    for (auto mode : plan.modes)
      for (auto seed : plan.seeds) {
        RunSummary s = train_run(spec, name, plan.train, mode, seed).summary;
        s.irrelevant = count;
        out.runs.push_back(s);
      }
  }
  return out;
}

RobustnessResult run_robustness(const ExperimentPlan& plan) {
  plan.validate();
  if (plan.eval_scenarios == 0) throw Error(ErrorCode::EmptyEvaluationSet, "robustness needs evaluation scenarios");
  if (plan.checkpoint_dir.empty()) throw Error(ErrorCode::MissingCheckpoint, "no checkpoint directory given");
  RobustnessResult out;
  for (const auto& name : plan.scenarios) {
    const ScenarioSpec spec = load_scenario(name);
    for (auto seed : plan.seeds) {
      const Checkpoint ckpt = load_checkpoint(checkpoint_path(plan.checkpoint_dir, name, seed));
      if (ckpt.params.dims() != scenario_dims(spec))
        throw Error(ErrorCode::ShapeMismatch, "checkpoint does not fit scenario " + name);
      const double t = plan.train.temperature;
      const auto eval = generated_scenarios(ckpt.params, spec, t, plan.eval_scenarios, seed ^ kEvalStream);

      AgentConfig ac = plan.agent;
      ac.seed = seed;
      SamplerConfig sc;
      sc.cg = spec.cg;
      sc.mode = MaskMode::CausalAF;
      sc.temperature = t;
      const auto gen = train_agent(
          spec, [&](Rng& rng) { return sample_bg(ckpt.params, sc, rng).graph; }, ac);
      const auto rnd = train_agent(spec, [&](Rng& rng) { return random_bg(spec, rng); }, ac);
      out.rows.push_back({name, seed, success_rate(gen.agent, eval, spec), success_rate(rnd.agent, eval, spec)});
    }
  }
  return out;
}

ProbeResult run_probe(const ExperimentPlan& plan) {
  plan.validate();
  ProbeResult out;
  out.scenario = plan.scenarios.front();
  const ScenarioSpec spec = load_scenario(out.scenario);
  const CausalGraph& cg = spec.cg;
  // First edge between two physical types.
  std::optional<std::pair<std::string, std::string>> edge;
  for (TypeId c = 0; c < cg.size() && !edge; ++c)
    for (TypeId p : cg.parents(c))
      if (cg.physical(p) && cg.physical(c)) {
        edge = {cg.name(p), cg.name(c)};
        break;
      }
  if (!edge) throw Error(ErrorCode::InvalidConfig, "causal graph has no edge between physical types");
  const CausalGraph perturbed = cg.without_edge(edge->first, edge->second);
  for (auto seed : plan.seeds) {
    TrainConfig cfg = plan.train;
    cfg.seed = seed;
    cfg.mode = MaskMode::CausalAF;
    cfg.metrics_path.clear();
    cfg.checkpoint_every = 0;
    const ProbeReport r = likelihood_probe(spec, {cg, perturbed}, cfg, plan.probe_samples);
    ProbeRow row;
    row.seed = seed;
    row.removed_edge = edge->first + "->" + edge->second;
    if (r.entries.size() == 2) {
      row.true_graph = r.entries[0].estimate;
      row.perturbed = r.entries[1].estimate;
    }
    out.rows.push_back(row);
  }
  return out;
}

NodeSweepCheck check_node_sweep(const NodeSweepResult& result) {
  std::map<int, std::vector<double>> caf, base;
  for (const auto& r : result.runs) {
    if (r.mode == MaskMode::CausalAF) caf[r.irrelevant].push_back(r.final_mean);
    if (r.mode == MaskMode::Baseline) base[r.irrelevant].push_back(r.final_mean);
  }
  NodeSweepCheck c;
  if (!caf.empty()) {
    const double first = mean(caf.begin()->second);
    for (const auto& [n, v] : caf) c.causalaf_spread = std::max(c.causalaf_spread, std::abs(mean(v) - first));
    c.consistent = c.causalaf_spread < 0.1;
  }
  std::vector<double> b;
  for (const auto& [n, v] : base) b.push_back(mean(v));
  for (std::size_t k = 1; k < b.size(); ++k)
    if (b[k] > b[k - 1]) ++c.baseline_inversions;
  c.baseline_drops = b.size() >= 2 && c.baseline_inversions <= 1 && b.back() < b.front();
  return c;
}

std::vector<std::pair<std::string, std::size_t>> ablation_ordering(const AblationResult& result) {
  std::map<std::pair<std::string, std::uint64_t>, std::map<MaskMode, double>> by;
  std::vector<std::string> order;
  for (const auto& r : result.runs) {
    if (std::find(order.begin(), order.end(), r.scenario) == order.end()) order.push_back(r.scenario);
    by[{r.scenario, r.seed}][r.mode] = r.final_mean;
  }
  std::vector<std::pair<std::string, std::size_t>> out;
  for (const auto& name : order) {
    std::size_t ok = 0;
    for (const auto& [key, m] : by) {
      if (key.first != name || m.size() < 3) continue;
      if (m.at(MaskMode::CausalAF) > m.at(MaskMode::BaselineCom) && m.at(MaskMode::BaselineCom) > m.at(MaskMode::Baseline))
        ++ok;
    }
    out.emplace_back(name, ok);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tables

namespace {

std::vector<std::string> scenarios_in(const std::vector<RunSummary>& runs) {
  std::vector<std::string> out;
  for (const auto& r : runs)
    if (std::find(out.begin(), out.end(), r.scenario) == out.end()) out.push_back(r.scenario);
  return out;
}

std::vector<MaskMode> modes_in(const std::vector<RunSummary>& runs) {
  std::vector<MaskMode> out;
  for (auto m : {MaskMode::Baseline, MaskMode::BaselineCom, MaskMode::CausalAF})
    for (const auto& r : runs)
      if (r.mode == m) {
        out.push_back(m);
        break;
      }
  return out;
}

}  // namespace

std::string ablation_table(const AblationResult& result) {
  const auto modes = modes_in(result.runs);
  std::ostringstream os;
  os << "| scenario |";
  for (auto m : modes) os << ' ' << to_string(m) << " |";
  os << "\n|---|";
  for (std::size_t k = 0; k < modes.size(); ++k) os << "---|";
  os << '\n';
  for (const auto& name : scenarios_in(result.runs)) {
    os << "| " << name << " |";
    for (auto m : modes) {
      std::vector<double> v;
      for (const auto& r : result.runs)
        if (r.scenario == name && r.mode == m) v.push_back(r.final_mean);
      os << ' ' << fmt(mean(v), 2) << " ± " << fmt(stddev(v), 2) << " |";
    }
    os << '\n';
  }
  os << "\nMean ± std across seeds of the final-100-episode mean objective.\n";
  return os.str();
}

std::string ablation_tsv(const AblationResult& result) {
  std::ostringstream os;
  os << "scenario\tmode\tseed\tepisodes\tfinal_mean\tfinal_std\tconverged\n";
  for (const auto& r : result.runs)
    os << r.scenario << '\t' << to_string(r.mode) << '\t' << r.seed << '\t' << r.episodes << '\t'
       << fmt(r.final_mean, 4) << '\t' << fmt(r.final_std, 4) << '\t' << (r.converged ? 1 : 0) << '\n';
  return os.str();
}

std::string temperature_table(const TemperatureSweepResult& result) {
  std::ostringstream os;
  os << "temperature\tmode\tfinal_mean\tseed_std\tlate_variance\tepisodes_to_half\n";
  for (const auto& s : result.stats)
    os << fmt(s.temperature, 3) << '\t' << to_string(s.mode) << '\t' << fmt(s.final_mean, 4) << '\t'
       << fmt(s.seed_std, 4) << '\t' << fmt(s.late_variance, 5) << '\t' << fmt(s.episodes_to_half, 1) << '\n';
  return os.str();
}

std::string curves_tsv(const std::vector<Curve>& curves) {
  std::ostringstream os;
  os << "scenario\tmode\tseed\ttemperature\tepisode\tmoving_average\n";
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.moving_average.size(); ++i)
      os << c.scenario << '\t' << to_string(c.mode) << '\t' << c.seed << '\t' << fmt(c.temperature, 3) << '\t'
         << i + 1 << '\t' << fmt(c.moving_average[i], 4) << '\n';
  return os.str();
}

std::string node_sweep_table(const NodeSweepResult& result) {
  std::map<std::pair<int, MaskMode>, std::vector<double>> cells;
  std::vector<int> counts;
  for (const auto& r : result.runs) {
    cells[{r.irrelevant, r.mode}].push_back(r.final_mean);
    if (std::find(counts.begin(), counts.end(), r.irrelevant) == counts.end()) counts.push_back(r.irrelevant);
  }
  const auto modes = modes_in(result.runs);
  std::ostringstream os;
  os << "irrelevant";
  for (auto m : modes) os << '\t' << to_string(m) << "_mean\t" << to_string(m) << "_std";
  os << '\n';
  for (int n : counts) {
    os << n;
    for (auto m : modes) {
      const auto& v = cells[{n, m}];
      os << '\t' << fmt(mean(v), 4) << '\t' << fmt(stddev(v), 4);
    }
    os << '\n';
  }
  return os.str();
}

std::string robustness_table(const RobustnessResult& result) {
  std::ostringstream os;
  os << "scenario\tseed\tgenerated_trained_success\trandom_trained_success\n";
  for (const auto& r : result.rows)
    os << r.scenario << '\t' << r.seed << '\t' << fmt(r.generated_trained, 4) << '\t' << fmt(r.random_trained, 4)
       << '\n';
  os << "# success = 1 - collision rate on scenarios generated by the trained flow\n";
  return os.str();
}

std::string probe_table(const ProbeResult& result) {
  std::ostringstream os;
  os << "scenario\tseed\tremoved_edge\ttrue_graph_rate\ttrue_graph_stderr\tperturbed_rate\tperturbed_stderr\n";
  for (const auto& r : result.rows)
    os << result.scenario << '\t' << r.seed << '\t' << r.removed_edge << '\t' << fmt(r.true_graph.rate, 4) << '\t'
       << fmt(r.true_graph.stderr_, 4) << '\t' << fmt(r.perturbed.rate, 4) << '\t' << fmt(r.perturbed.stderr_, 4)
       << '\n';
  return os.str();
}

nlohmann::json manifest(const ExperimentPlan& plan, const std::vector<std::string>& outputs) {
  nlohmann::json specs = nlohmann::json::object();
  for (const auto& name : plan.scenarios) specs[name] = to_json(load_scenario(name));
  return {{"format", "causalaf-manifest"},
          {"version", kVersion},
          {"plan", to_json(plan)},
          {"scenarios", specs},
          {"outputs", outputs}};
}

std::vector<std::string> run_experiment(const ExperimentPlan& plan) {
  plan.validate();
  const std::filesystem::path dir = plan.output_dir.empty() ? std::filesystem::path(".") : std::filesystem::path(plan.output_dir);
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  auto write = [&](const std::string& file, const std::string& text) {
    const auto p = dir / file;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + p.string());
    out << text;
    written.push_back(p.string());
  };

  switch (plan.kind) {
    case ExperimentKind::Ablation: {
      const auto r = run_ablation(plan);
      write("ablation.md", ablation_table(r));
      write("ablation.tsv", ablation_tsv(r));
      break;
    }
    case ExperimentKind::TemperatureSweep: {
      const auto r = run_temperature_sweep(plan);
      write("temperature.tsv", temperature_table(r));
      write("curves.tsv", curves_tsv(r.curves));
      std::vector<Series> series;
      for (const auto& s : r.stats) {
        // Mean curve over seeds for each (temperature, mode).
        Series line;
        line.label = std::string(to_string(s.mode)) + " T=" + fmt(s.temperature, 1);
        std::size_t n = 0;
        for (const auto& c : r.curves) {
          if (c.mode != s.mode || c.temperature != s.temperature) continue;
          if (line.y.size() < c.moving_average.size()) line.y.resize(c.moving_average.size(), 0.0);
          for (std::size_t i = 0; i < c.moving_average.size(); ++i) line.y[i] += c.moving_average[i];
          ++n;
        }
        for (double& y : line.y) y /= static_cast<double>(std::max<std::size_t>(n, 1));
        for (std::size_t i = 0; i < line.y.size(); ++i) line.x.push_back(static_cast<double>(i + 1));
        series.push_back(std::move(line));
      }
      write("curves.svg", line_plot_svg(series, "training objective", "episode", "moving average"));
      break;
    }
    case ExperimentKind::NodeSweep: {
      const auto r = run_node_sweep(plan);
      write("node_sweep.tsv", node_sweep_table(r));
      AblationResult flat{r.runs};
      write("node_sweep_runs.tsv", ablation_tsv(flat));
      break;
    }
    case ExperimentKind::Robustness: {
      write("robustness.tsv", robustness_table(run_robustness(plan)));
      break;
    }
    case ExperimentKind::Probe: {
      write("probe.tsv", probe_table(run_probe(plan)));
      break;
    }
  }
  std::vector<std::string> names;
  for (const auto& w : written) names.push_back(std::filesystem::path(w).filename().string());
  write("manifest.json", manifest(plan, names).dump(2) + "\n");
  return written;
}

}  // namespace causalaf
