#pragma once

// Learned longitudinal controller for the AV, trained by policy gradient on a
// stream of scenarios. Steering stays with the route logic of the rule policy,
// and the AV never accelerates past its cruise speed.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <json.hpp>

#include "causalaf/rng.hpp"
#include "causalaf/scenario_graph.hpp"
#include "causalaf/simulator.hpp"

namespace causalaf {

struct AgentConfig {
  std::size_t sectors = 8;
  std::size_t hidden = 16;
  double action_std = 3.0;
  double learning_rate = 0.01;
  std::size_t batch_size = 8;
  std::size_t episodes = 3000;
  std::uint64_t seed = 0;
  double collision_penalty = 1.0;
  double progress_weight = 1.0;
  double reference_speed = 10.0;  // m/s; progress is measured against this
  double baseline_decay = 0.9;
  int decision_ticks = 10;  // simulator ticks an action is held for

  void validate() const;
};

nlohmann::json to_json(const AgentConfig& cfg);
AgentConfig agent_config_from_json(const nlohmann::json& doc, AgentConfig base = {});

/// One decision: features seen and the (unclamped) acceleration drawn.
struct AgentStep {
  std::vector<double> features;
  double action = 0.0;
  Vec2 position;  // AV position when the decision was taken
};

struct AgentEpisode {
  std::vector<AgentStep> steps;
  ScenarioTrace trace;
  double reward = 0.0;
};

/// Draws a scenario for one episode.
using ScenarioSource = std::function<BehavioralGraph(Rng&)>;

class DrivingAgent {
 public:
  DrivingAgent() = default;
  DrivingAgent(const AgentConfig& cfg, double a_max);

  std::size_t feature_size() const { return cfg_.sectors + 2; }
  const AgentConfig& config() const { return cfg_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  /// Nearest non-light return per angular sector as 1 - range / radar range,
  /// then ego speed / reference speed, then a stop-line urgency term that is
  /// nonzero only when the AV faces a non-green signal.
  std::vector<double> features(const AvInput& input, const RadarConfig& radar) const;

  /// Mean acceleration. Unbounded; the applied action is clipped to +-a_max.
  double mean_action(const std::vector<double>& features) const;
  /// Gradient of log N(action; mean_action, std^2) w.r.t. params.
  std::vector<double> grad_log_prob(const std::vector<double>& features, double action) const;

  /// Runs one episode. With `rng` the policy samples; without, it acts on the mean.
  AgentEpisode run(const BehavioralGraph& bg, const ScenarioSpec& spec, Rng* rng) const;

  friend bool operator==(const DrivingAgent&, const DrivingAgent&) = default;

 private:
  AgentConfig cfg_;
  double a_max_ = 6.0;
  std::vector<double> params_;

  double forward(const std::vector<double>& x, std::vector<double>* hidden) const;
};

/// Reward of each decision: distance covered until the next one relative to
/// the reference speed over the horizon, with the collision penalty on the last.
std::vector<double> step_rewards(const AgentEpisode& episode, const ScenarioSpec& spec, const AgentConfig& cfg);
/// Progress of the whole trace minus the collision penalty.
double agent_reward(const ScenarioTrace& trace, const ScenarioSpec& spec, const AgentConfig& cfg);

struct AgentTrainResult {
  DrivingAgent agent;
  std::vector<double> rewards;  // one per episode
  std::vector<int> collisions;  // one per episode
};

AgentTrainResult train_agent(const ScenarioSpec& spec, const ScenarioSource& source, const AgentConfig& cfg);

/// 1 - collision rate of the mean policy. Throws EmptyEvaluationSet.
double success_rate(const DrivingAgent& agent, const std::vector<BehavioralGraph>& scenarios,
                    const ScenarioSpec& spec);

/// One node per physical type instance in a fixed causal order, every node
/// with an independent-action self-loop and attributes uniform in the role
/// bounds. No interaction edges.
BehavioralGraph random_bg(const ScenarioSpec& spec, Rng& rng);

}  // namespace causalaf
