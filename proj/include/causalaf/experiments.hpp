#pragma once

// Experiment harness: ablation over mask modes, temperature and
// irrelevant-node sweeps, agent robustness and the causal-graph probe.
// Every runner is sequential and deterministic in the plan.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "causalaf/agent.hpp"
#include "causalaf/trainer.hpp"

namespace causalaf {

inline constexpr std::string_view kVersion = "0.1.0";

enum class ExperimentKind { Ablation, TemperatureSweep, NodeSweep, Robustness, Probe };
std::string_view to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(std::string_view name);

struct ExperimentPlan {
  ExperimentKind kind = ExperimentKind::Ablation;
  std::vector<std::string> scenarios;
  std::vector<std::uint64_t> seeds;
  TrainConfig train;
  std::vector<MaskMode> modes{MaskMode::Baseline, MaskMode::BaselineCom, MaskMode::CausalAF};
  std::vector<double> temperatures;
  std::vector<int> irrelevant_counts{0, 1, 2, 3};
  AgentConfig agent;
  std::size_t eval_scenarios = 200;
  std::size_t probe_samples = 1000;
  /// Where robustness looks for <scenario>-seed<seed>.json; ablation writes
  /// its CausalAF checkpoints there when set.
  std::string checkpoint_dir;
  std::string output_dir;

  /// Throws InvalidConfig (or TooFewTemperatures for a sweep).
  void validate() const;
};

nlohmann::json to_json(const ExperimentPlan& plan);
ExperimentPlan experiment_plan_from_json(const nlohmann::json& doc);

/// Checkpoint path used by ablation and robustness.
std::string checkpoint_path(const std::string& dir, const std::string& scenario, std::uint64_t seed);

// ---------------------------------------------------------------------------

struct RunSummary {
  std::string scenario;
  MaskMode mode = MaskMode::CausalAF;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  int irrelevant = 1;
  double final_mean = 0.0;   // last 100 episodes (fewer if shorter)
  double final_std = 0.0;    // across those episodes
  std::size_t episodes = 0;  // episodes actually run
  bool converged = false;
};

struct AblationResult {
  std::vector<RunSummary> runs;
};

struct Curve {
  std::string scenario;
  MaskMode mode = MaskMode::CausalAF;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  std::vector<double> moving_average;  // one per episode, window 100
};

struct CurveStats {
  double temperature = 1.0;
  MaskMode mode = MaskMode::CausalAF;
  double final_mean = 0.0;      // across seeds
  double seed_std = 0.0;        // of final means across seeds
  double late_variance = 0.0;   // mean over seeds of batch-mean variance in the second half
  double episodes_to_half = 0.0;  // mean first episode where the moving average reaches 0.5; run length if never
};

struct TemperatureSweepResult {
  std::vector<RunSummary> runs;
  std::vector<Curve> curves;
  std::vector<CurveStats> stats;
};

struct NodeSweepResult {
  std::vector<RunSummary> runs;
};

struct NodeSweepCheck {
  double causalaf_spread = 0.0;   // max |mean(count) - mean(first count)|
  std::size_t baseline_inversions = 0;
  bool consistent = false;        // spread < 0.1
  bool baseline_drops = false;    // at most one inversion and last < first
};

struct RobustnessRow {
  std::string scenario;
  std::uint64_t seed = 0;
  double generated_trained = 0.0;  // no-collision rate on generated scenarios
  double random_trained = 0.0;
};

struct RobustnessResult {
  std::vector<RobustnessRow> rows;
};

struct ProbeRow {
  std::uint64_t seed = 0;
  std::string removed_edge;  // "parent->child"
  RateEstimate true_graph;
  RateEstimate perturbed;
};

struct ProbeResult {
  std::string scenario;
  std::vector<ProbeRow> rows;
};

AblationResult run_ablation(const ExperimentPlan& plan);
TemperatureSweepResult run_temperature_sweep(const ExperimentPlan& plan);
NodeSweepResult run_node_sweep(const ExperimentPlan& plan);
/// Throws MissingCheckpoint when a scenario/seed checkpoint is absent and
/// EmptyEvaluationSet when plan.eval_scenarios is 0.
RobustnessResult run_robustness(const ExperimentPlan& plan);
ProbeResult run_probe(const ExperimentPlan& plan);

/// Uniformly random scenarios under a fixed causal structure.
std::vector<BehavioralGraph> random_scenarios(const ScenarioSpec& spec, std::size_t count, std::uint64_t seed);
/// Draws from a trained flow.
std::vector<BehavioralGraph> generated_scenarios(const FlowParameters& params, const ScenarioSpec& spec,
                                                 double temperature, std::size_t count, std::uint64_t seed);

NodeSweepCheck check_node_sweep(const NodeSweepResult& result);
/// Number of seeds where CausalAF > Baseline+COM > Baseline, per scenario.
std::vector<std::pair<std::string, std::size_t>> ablation_ordering(const AblationResult& result);

// Table emitters: pure functions of the result records.
std::string ablation_table(const AblationResult& result);
std::string ablation_tsv(const AblationResult& result);
std::string temperature_table(const TemperatureSweepResult& result);
std::string curves_tsv(const std::vector<Curve>& curves);
std::string node_sweep_table(const NodeSweepResult& result);
std::string robustness_table(const RobustnessResult& result);
std::string probe_table(const ProbeResult& result);

/// Plan, resolved configs, seeds, version and the list of outputs written.
nlohmann::json manifest(const ExperimentPlan& plan, const std::vector<std::string>& outputs);

/// Runs the plan and writes tables, curves and a manifest into
/// plan.output_dir (created if needed). Returns the files written.
std::vector<std::string> run_experiment(const ExperimentPlan& plan);

}  // namespace causalaf
