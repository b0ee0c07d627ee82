#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include <json.hpp>

#include "causalaf/flow_model.hpp"
#include "causalaf/rng.hpp"
#include "causalaf/scenario_graph.hpp"

namespace causalaf {

/// Which causal masks the sampler applies.
enum class MaskMode {
  Baseline,     // no masks; every predecessor visible
  BaselineCom,  // causal order mask only
  CausalAF,     // causal order mask + causal visibility mask
};

std::string_view to_string(MaskMode mode);
MaskMode mask_mode_from_string(std::string_view name);

/// Added to valid node-type values before argmax so a masked type can never win.
inline constexpr double kComShift = 1e12;

struct SamplerConfig {
  std::size_t max_nodes = 0;  // m; must equal the flow's m
  double temperature = 1.0;
  CausalGraph cg;
  std::optional<BehavioralGraph> condition;
  std::uint64_t seed = 0;
  MaskMode mode = MaskMode::CausalAF;
};

struct Sample {
  BehavioralGraph graph;
  SampleRecord record;
};

/// Draws one behavioral graph node by node: node row, discretize under the
/// order mask, then the edges of that node over its visible predecessors.
/// Uses an Rng seeded from cfg.seed.
Sample sample_bg(const FlowParameters& params, const SamplerConfig& cfg);
/// Same, drawing from a caller-owned stream (cfg.seed is ignored).
Sample sample_bg(const FlowParameters& params, const SamplerConfig& cfg, Rng& rng);

/// Resumes generation after the nodes of cfg.condition. Throws
/// InvalidCondition if the partial graph breaks the causal order.
Sample sample_conditional(const FlowParameters& params, const SamplerConfig& cfg);
Sample sample_conditional(const FlowParameters& params, const SamplerConfig& cfg, Rng& rng);

/// Versioned, lossless text form of a behavioral graph.
nlohmann::json bg_to_json(const BehavioralGraph& bg, const CausalGraph& cg);
BehavioralGraph bg_from_json(const nlohmann::json& doc, const CausalGraph& cg);

}  // namespace causalaf
