#pragma once

// Autoregressive affine flow over behavioral-graph rows and edge slices.
//
// Each generation step reads a zero-padded context built from the already
// generated part of the graph and maps it through a small conditioner network
// to per-coordinate (mu, log sigma). Sampling applies K stacked affine maps
// z_k = mu_k + sigma_k * z_{k-1} to a latent z_0 ~ N(0, T I), so the step
// density is log N(z_0; 0, T) - sum_k log sigma_k.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "causalaf/rng.hpp"
#include "causalaf/scenario_graph.hpp"

namespace causalaf {

struct FlowDims {
  std::size_t m = 0, n = 0, h1 = 0, h2 = 0;
  std::size_t edge_width() const { return h1 + h2; }
  friend bool operator==(const FlowDims&, const FlowDims&) = default;
};

struct FlowConfig {
  std::size_t hidden = 64;
  std::size_t layers = 1;  // K stacked affine layers per step
  friend bool operator==(const FlowConfig&, const FlowConfig&) = default;
};

/// log sigma is bounded to +-kLogSigmaBound, i.e. sigma in (1e-3, 1e3).
inline constexpr double kLogSigmaBound = 6.907755278982137;

/// Offsets of a 3-layer perceptron (in -> hidden -> hidden -> out) inside the
/// flat parameter buffer. Weights are row-major.
struct MlpLayout {
  std::size_t in = 0, hidden = 0, out = 0, offset = 0;
  std::size_t w1() const { return offset; }
  std::size_t b1() const { return w1() + hidden * in; }
  std::size_t w2() const { return b1() + hidden; }
  std::size_t b2() const { return w2() + hidden * hidden; }
  std::size_t w3() const { return b2() + hidden; }
  std::size_t b3() const { return w3() + out * hidden; }
  std::size_t end() const { return b3() + out; }
  friend bool operator==(const MlpLayout&, const MlpLayout&) = default;
};

enum class StepKind { Node, Edge };

class FlowParameters {
 public:
  FlowParameters() = default;

  /// Hidden layers get N(0, 1/fan_in) weights; the output layer starts at
  /// zero so a fresh flow is standard normal (mu = 0, sigma = 1).
  static FlowParameters create(const FlowDims& dims, const FlowConfig& cfg, std::uint64_t seed);

  const FlowDims& dims() const { return dims_; }
  const FlowConfig& config() const { return cfg_; }
  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  const MlpLayout& net(StepKind kind, std::size_t layer) const;
  std::size_t context_size(StepKind kind) const;
  std::size_t output_width(StepKind kind) const { return kind == StepKind::Node ? dims_.n : dims_.edge_width(); }

  friend bool operator==(const FlowParameters&, const FlowParameters&) = default;

 private:
  FlowDims dims_;
  FlowConfig cfg_;
  std::vector<MlpLayout> node_nets_;
  std::vector<MlpLayout> edge_nets_;
  std::vector<double> values_;

  friend FlowParameters flow_parameters_from_json(const nlohmann::json&);
};

/// Conditioner output for one step: one (mu, log sigma) pair per stacked layer.
struct StepConditioning {
  std::vector<std::vector<double>> mu;
  std::vector<std::vector<double>> log_sigma;
  std::vector<double> sigma(std::size_t layer) const;
  friend bool operator==(const StepConditioning&, const StepConditioning&) = default;
};

/// Context for node i: V rows 0..i-1, E rows 0..i-1 (all columns), one-hot(i).
std::vector<double> node_context(const BehavioralGraph& bg, std::size_t i);
/// Context for edge (i, j): V rows 0..i, E rows 0..i restricted to columns
/// 0..j-1, one-hot(i), one-hot(j).
std::vector<double> edge_context(const BehavioralGraph& bg, std::size_t i, std::size_t j);

StepConditioning condition(const FlowParameters& params, StepKind kind, std::span<const double> context);
StepConditioning condition_node(const FlowParameters& params, const BehavioralGraph& bg, std::size_t i);
StepConditioning condition_edge(const FlowParameters& params, const BehavioralGraph& bg, std::size_t i,
                                std::size_t j);

/// Latent draw eps ~ N(0, T) per coordinate.
std::vector<double> draw_latent(std::size_t width, double temperature, Rng& rng);
/// mu + sigma * eps.
std::vector<double> affine_transform(std::span<const double> mu, std::span<const double> sigma,
                                     std::span<const double> eps);
std::vector<double> affine_sample(std::span<const double> mu, std::span<const double> sigma, double temperature,
                                  Rng& rng);
/// Pushes a latent through all stacked layers of a step.
std::vector<double> flow_forward(const StepConditioning& cond, std::span<const double> latent);
/// Recovers the latent z_0 of a step from its output.
std::vector<double> flow_inverse(const StepConditioning& cond, std::span<const double> value);

/// Replaces the first onehot_width entries with onehot(argmax); ties go to the
/// lowest index. Remaining entries pass through.
std::vector<double> discretize(std::span<const double> v, std::size_t onehot_width);

/// Log density of the step output over the active coordinates.
double step_log_density(const StepConditioning& cond, std::span<const double> value, double temperature,
                        std::span<const std::uint8_t> active);

struct FlowStep {
  StepKind kind = StepKind::Node;
  std::size_t i = 0, j = 0;             // indices in the frame the conditioner saw
  std::vector<double> context;
  std::vector<std::uint8_t> active;     // coordinates that carry density
  std::vector<double> latent;           // z_0
  std::vector<double> value;            // pre-discretization output
  StepConditioning cond;
  double log_density = 0.0;
};

struct SampleRecord {
  FlowDims dims;
  double temperature = 1.0;
  std::size_t layers = 1;
  std::vector<FlowStep> steps;
  double log_likelihood = 0.0;
  bool complete = false;
};

/// Stored log-likelihood of a complete record. Throws IncompleteRecord.
double log_likelihood(const SampleRecord& record);
/// Log-likelihood of the record's values re-evaluated under `params`.
double log_likelihood(const FlowParameters& params, const SampleRecord& record);
/// Reverse-mode gradient of log_likelihood(params, record) w.r.t. all parameters.
std::vector<double> grad_log_likelihood(const FlowParameters& params, const SampleRecord& record);
/// Latents z_0 of every step under `params`.
std::vector<std::vector<double>> invert(const FlowParameters& params, const SampleRecord& record);

nlohmann::json to_json(const FlowParameters& params);
FlowParameters flow_parameters_from_json(const nlohmann::json& doc);

struct Checkpoint {
  FlowParameters params;
  std::string rng_state;
  nlohmann::json extra = nlohmann::json::object();
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
/// Throws MissingCheckpoint if the file does not exist.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace causalaf
