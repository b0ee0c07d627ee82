#pragma once

// Score-function training of the flow against the simulator objective.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "causalaf/flow_model.hpp"
#include "causalaf/generator.hpp"
#include "causalaf/simulator.hpp"

namespace causalaf {

enum class BaselineMode { None, MovingAverage };
std::string_view to_string(BaselineMode mode);
BaselineMode baseline_mode_from_string(std::string_view name);

struct TrainConfig {
  double learning_rate = 0.002;
  std::size_t batch_size = 16;
  std::size_t episodes = 2000;
  double temperature = 1.0;
  /// Piecewise-constant override: (first episode, temperature), sorted by episode.
  std::vector<std::pair<std::size_t, double>> temperature_schedule;
  BaselineMode baseline = BaselineMode::MovingAverage;
  double baseline_decay = 0.99;
  std::uint64_t seed = 0;
  MaskMode mode = MaskMode::CausalAF;
  FlowConfig flow;
  std::size_t checkpoint_every = 0;  // episodes; 0 disables
  std::string checkpoint_dir;
  std::string metrics_path;          // per-episode TSV; empty disables
  bool stop_on_convergence = true;
  std::size_t convergence_window = 500;
  std::size_t convergence_patience = 1000;
  std::optional<double> epsilon;     // overrides the scenario's threshold

  double temperature_at(std::size_t episode) const;
  /// Throws InvalidConfig.
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& doc, TrainConfig base = {});

struct UpdateMetrics {
  std::size_t update = 0;
  std::size_t first_episode = 0;
  std::size_t episodes = 0;
  double mean_objective = 0.0;
  double moving_average = 0.0;  // over the last convergence_window episodes
  double grad_norm = 0.0;
  double success_log_likelihood = 0.0;  // mean over colliding samples; NaN if none
  double temperature = 1.0;
  double baseline = 0.0;
  double wall_seconds = 0.0;
};

struct TrainMetrics {
  std::vector<UpdateMetrics> updates;
  std::vector<int> objectives;  // one per episode
  bool converged = false;
  std::size_t converged_at = 0;

  /// Mean objective over the last `window` episodes (all if fewer).
  double final_mean(std::size_t window = 100) const;
};

/// First-order adaptive-moment optimizer, ascending the supplied direction.
struct Adam {
  double lr = 0.01, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<double> m, v;
  std::uint64_t t = 0;

  void step(std::span<double> params, std::span<const double> ascent);
  friend bool operator==(const Adam&, const Adam&) = default;
};

struct Rollout {
  SampleRecord record;
  double reward = 0.0;
};

/// Mean over the batch of (reward - baseline) * grad log p. Throws EmptyBatch.
std::vector<double> reinforce_gradient(const FlowParameters& params, const std::vector<Rollout>& batch,
                                       double baseline);

/// Plain ascent: params + lr * gradient. Returns the gradient used.
std::vector<double> reinforce_update(FlowParameters& params, const std::vector<Rollout>& batch, double baseline,
                                     double lr);

/// Everything needed to continue a run bit-for-bit.
struct TrainState {
  FlowParameters params;
  Adam adam;
  double baseline = 0.0;
  std::size_t episode = 0;
  TrainMetrics metrics;
};

struct TrainResult {
  FlowParameters params;
  TrainMetrics metrics;
};

/// Called after each update; return false to stop.
using TrainCallback = std::function<bool(const TrainState&, const UpdateMetrics&)>;

/// Rollout of one episode: sample under cfg, execute, score.
Rollout rollout(const FlowParameters& params, const ScenarioSpec& spec, const TrainConfig& cfg, std::size_t episode);

TrainState initial_state(const ScenarioSpec& spec, const TrainConfig& cfg);
TrainResult train(const ScenarioSpec& spec, const TrainConfig& cfg, const TrainCallback& callback = {});
/// Continues from a state (e.g. a loaded checkpoint) up to cfg.episodes.
TrainResult train_from(TrainState state, const ScenarioSpec& spec, const TrainConfig& cfg,
                       const TrainCallback& callback = {});

Checkpoint make_checkpoint(const TrainState& state, const TrainConfig& cfg);
TrainState state_from_checkpoint(const Checkpoint& ckpt);

/// Flow dimensions used for a scenario: m = number of physical instances
/// allowed by the causal graph, n = number of types, 3 edge types, 4 attributes.
FlowDims scenario_dims(const ScenarioSpec& spec);

/// Collision rate of n samples drawn from params (seeded per sample).
struct RateEstimate {
  double rate = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
};
RateEstimate collision_rate(const FlowParameters& params, const ScenarioSpec& spec, MaskMode mode,
                            double temperature, std::size_t n_samples, std::uint64_t seed);

struct ProbeEntry {
  std::string label;
  std::size_t shd = 0;
  RateEstimate estimate;
};

struct ProbeReport {
  std::vector<ProbeEntry> entries;
  /// True when estimates do not increase with SHD. Unset for fewer than two entries.
  std::optional<bool> ordered;
};

/// Trains one model per causal-graph variant (same scenario physics) and
/// estimates each model's collision likelihood from n_samples draws.
ProbeReport likelihood_probe(const ScenarioSpec& spec, const std::vector<CausalGraph>& variants,
                             const TrainConfig& cfg, std::size_t n_samples);

void write_metrics_tsv(const std::string& path, const TrainMetrics& metrics, const TrainConfig& cfg);

}  // namespace causalaf
