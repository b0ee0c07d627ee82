#include "causalaf/generator.hpp"

#include <algorithm>
#include <numeric>

#include "causalaf/errors.hpp"

namespace causalaf {

std::string_view to_string(MaskMode mode) {
  switch (mode) {
    case MaskMode::Baseline: return "baseline";
    case MaskMode::BaselineCom: return "baseline+com";
    case MaskMode::CausalAF: return "causalaf";
  }
  return "unknown";
}

MaskMode mask_mode_from_string(std::string_view name) {
  if (name == "baseline") return MaskMode::Baseline;
  if (name == "baseline+com" || name == "baseline-com") return MaskMode::BaselineCom;
  if (name == "causalaf") return MaskMode::CausalAF;
  throw Error(ErrorCode::InvalidConfig, "unknown mask mode '" + std::string(name) + "'");
}

namespace {

bool mandatory_types_placed(const CausalGraph& cg, const TypeCounts& counts) {
  for (TypeId t = 0; t < cg.size(); ++t)
    if (cg.mandatory(t) && cg.multiplicity_max(t) > 0 && counts[t] == 0) return false;
  return true;
}

FlowStep make_step(const FlowParameters& params, StepKind kind, std::size_t i, std::size_t j,
                   std::vector<double> context, std::vector<std::uint8_t> active, double temperature, Rng& rng) {
  FlowStep s;
  s.kind = kind;
  s.i = i;
  s.j = j;
  s.cond = condition(params, kind, context);
  s.context = std::move(context);
  s.latent = draw_latent(params.output_width(kind), temperature, rng);
  s.value = flow_forward(s.cond, s.latent);
  s.active = std::move(active);
  s.log_density = step_log_density(s.cond, s.value, temperature, s.active);
  return s;
}

}  // namespace

Sample sample_bg(const FlowParameters& params, const SamplerConfig& cfg, Rng& rng) {
  const FlowDims& dims = params.dims();
  if (cfg.max_nodes != 0 && cfg.max_nodes != dims.m)
    throw Error(ErrorCode::ShapeMismatch, "sampler m differs from flow m");
  if (dims.n != cfg.cg.size()) throw Error(ErrorCode::ShapeMismatch, "flow n differs from causal type count");
  if (!(cfg.temperature > 0.0)) throw Error(ErrorCode::NonPositiveTemperature, "temperature must be > 0");

  Sample out{BehavioralGraph(dims.m, dims.n, dims.h1, dims.h2), {}};
  BehavioralGraph& bg = out.graph;
  SampleRecord& rec = out.record;
  rec.dims = dims;
  rec.temperature = cfg.temperature;
  rec.layers = params.config().layers;

  std::size_t start = 0;
  if (cfg.condition) {
    const auto& c = *cfg.condition;
    if (!c.same_shape(bg)) throw Error(ErrorCode::InvalidCondition, "condition shape differs from flow dims");
    auto violations = validate_bg(c, cfg.cg);
    if (!violations.empty())
      throw Error(ErrorCode::InvalidCondition, "condition violates the causal graph: " + violations.front().message);
    bg = c;
    start = c.nodes();
  }

  const std::size_t n = dims.n, h1 = dims.h1;
  for (std::size_t i = start; i < dims.m; ++i) {
    std::vector<std::uint8_t> valid(n, 1);
    if (cfg.mode != MaskMode::Baseline) {
      const auto counts = bg.type_counts();
      const auto queue = valid_type_queue(cfg.cg, counts);
      if (queue.empty()) {
        if (mandatory_types_placed(cfg.cg, counts)) break;
        throw Error(ErrorCode::EmptyMask, "no valid type for node " + std::to_string(i));
      }
      valid = com_mask(cfg.cg, counts);
    }

    // Node row. The order mask acts on continuous values before argmax.
    FlowStep node = make_step(params, StepKind::Node, i, i, node_context(bg, i), valid, cfg.temperature, rng);
    std::vector<double> masked(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) masked[t] = valid[t] ? node.value[t] + kComShift : 0.0;
    const auto row = discretize(masked, n);
    std::copy(row.begin(), row.end(), bg.node(i).begin());
    bg.set_nodes(i + 1);
    rec.steps.push_back(std::move(node));

    // Edges of node i over the visible, compacted predecessors.
    std::vector<std::size_t> perm;
    BehavioralGraph view;
    if (cfg.mode == MaskMode::CausalAF) {
      const auto masks = cvm_masks(cfg.cg, bg, i);
      perm = masks.permutation;
      view = compact(apply_cvm(bg, masks), perm);
    } else {
      perm.resize(i + 1);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      view = bg;
    }
    const std::size_t p = perm.size() - 1;
    for (std::size_t b = 0; b <= p; ++b) {
      FlowStep edge = make_step(params, StepKind::Edge, p, b, edge_context(view, p, b), {}, cfg.temperature, rng);
      const auto slice = discretize(edge.value, h1);
      std::copy(slice.begin(), slice.end(), view.edge(p, b).begin());
      std::copy(slice.begin(), slice.end(), bg.edge(i, perm[b]).begin());
      rec.steps.push_back(std::move(edge));
    }
  }

  rec.log_likelihood = 0.0;
  for (const auto& s : rec.steps) rec.log_likelihood += s.log_density;
  rec.complete = true;
  return out;
}

Sample sample_bg(const FlowParameters& params, const SamplerConfig& cfg) {
  Rng rng(cfg.seed);
  return sample_bg(params, cfg, rng);
}

Sample sample_conditional(const FlowParameters& params, const SamplerConfig& cfg, Rng& rng) {
  return sample_bg(params, cfg, rng);
}

Sample sample_conditional(const FlowParameters& params, const SamplerConfig& cfg) {
  Rng rng(cfg.seed);
  return sample_bg(params, cfg, rng);
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json bg_to_json(const BehavioralGraph& bg, const CausalGraph& cg) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < bg.nodes(); ++i) {
    auto row = bg.node(i);
    auto t = bg.type_of(i);
    nodes.push_back({{"index", i},
                     {"type", t && *t < cg.size() ? cg.name(*t) : std::string()},
                     {"onehot", std::vector<double>(row.begin(), row.end())}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (std::size_t i = 0; i < bg.m(); ++i) {
    for (std::size_t j = 0; j < bg.m(); ++j) {
      auto e = bg.edge(i, j);
      if (std::all_of(e.begin(), e.end(), [](double x) { return x == 0.0; })) continue;
      auto kind = bg.edge_type(i, j);
      edges.push_back({{"i", i},
                       {"j", j},
                       {"type", kind ? static_cast<int>(*kind) : -1},
                       {"type_block", std::vector<double>(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(bg.h1()))},
                       {"attributes", std::vector<double>(e.begin() + static_cast<std::ptrdiff_t>(bg.h1()), e.end())}});
    }
  }
  return {{"format", "causalaf-bg"},
          {"version", 1},
          {"dims", {{"m", bg.m()}, {"n", bg.n()}, {"h1", bg.h1()}, {"h2", bg.h2()}}},
          {"type_names", cg.names()},
          {"nodes", nodes},
          {"edges", edges}};
}

BehavioralGraph bg_from_json(const nlohmann::json& doc, const CausalGraph& cg) {
  try {
    if (doc.at("format") != "causalaf-bg" || doc.at("version") != 1)
      throw Error(ErrorCode::ParseError, "not a version-1 behavioral graph");
    const auto& d = doc.at("dims");
    BehavioralGraph bg(d.at("m").get<std::size_t>(), d.at("n").get<std::size_t>(), d.at("h1").get<std::size_t>(),
                       d.at("h2").get<std::size_t>());
    if (doc.contains("type_names") && doc["type_names"].get<std::vector<std::string>>() != cg.names())
      throw Error(ErrorCode::ParseError, "type names differ from the causal graph");
    std::size_t count = 0;
    for (const auto& node : doc.at("nodes")) {
      const auto i = node.at("index").get<std::size_t>();
      const auto row = node.at("onehot").get<std::vector<double>>();
      if (row.size() != bg.n()) throw Error(ErrorCode::ParseError, "node row width");
      std::copy(row.begin(), row.end(), bg.node(i).begin());
      count = std::max(count, i + 1);
    }
    bg.set_nodes(count);
    for (const auto& edge : doc.at("edges")) {
      const auto i = edge.at("i").get<std::size_t>();
      const auto j = edge.at("j").get<std::size_t>();
      const auto block = edge.at("type_block").get<std::vector<double>>();
      const auto attrs = edge.at("attributes").get<std::vector<double>>();
      if (block.size() != bg.h1() || attrs.size() != bg.h2()) throw Error(ErrorCode::ParseError, "edge width");
      auto dst = bg.edge(i, j);
      std::copy(block.begin(), block.end(), dst.begin());
      std::copy(attrs.begin(), attrs.end(), dst.begin() + static_cast<std::ptrdiff_t>(bg.h1()));
    }
    return bg;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("behavioral graph: ") + e.what());
  }
}

}  // namespace causalaf
