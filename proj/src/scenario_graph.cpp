#include "causalaf/scenario_graph.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "causalaf/errors.hpp"

namespace causalaf {

// ---------------------------------------------------------------------------
// CausalGraph

CausalGraph CausalGraph::build(const std::vector<TypeDecl>& decls) {
  if (decls.empty()) throw Error(ErrorCode::InvalidConfig, "causal graph has no types");

  CausalGraph cg;
  std::map<std::string, TypeId, std::less<>> index;
  for (const auto& d : decls) {
    if (d.name.empty()) throw Error(ErrorCode::InvalidConfig, "empty type name");
    if (d.multiplicity_max < 0)
      throw Error(ErrorCode::InvalidConfig, "negative multiplicity for type " + d.name);
    if (!index.emplace(d.name, cg.names_.size()).second)
      throw Error(ErrorCode::InvalidConfig, "duplicate type " + d.name);
    cg.names_.push_back(d.name);
    cg.physical_.push_back(d.physical ? 1 : 0);
    cg.multiplicity_.push_back(d.multiplicity_max);
  }
  cg.parents_.resize(decls.size());
  for (std::size_t t = 0; t < decls.size(); ++t) {
    for (const auto& p : decls[t].parents) {
      auto it = index.find(p);
      if (it == index.end())
        throw Error(ErrorCode::UnknownType, "parent '" + p + "' of '" + decls[t].name + "' is not declared");
      if (std::find(cg.parents_[t].begin(), cg.parents_[t].end(), it->second) == cg.parents_[t].end())
        cg.parents_[t].push_back(it->second);
    }
    std::sort(cg.parents_[t].begin(), cg.parents_[t].end());
  }

  // Kahn's algorithm; leftover nodes lie on a cycle.
  const std::size_t n = decls.size();
  std::vector<std::size_t> indegree(n);
  std::vector<std::vector<TypeId>> children(n);
  for (TypeId t = 0; t < n; ++t) {
    indegree[t] = cg.parents_[t].size();
    for (TypeId p : cg.parents_[t]) children[p].push_back(t);
  }
  std::vector<TypeId> ready;
  for (TypeId t = 0; t < n; ++t)
    if (indegree[t] == 0) ready.push_back(t);
  std::size_t visited = 0;
  while (!ready.empty()) {
    TypeId t = ready.back();
    ready.pop_back();
    ++visited;
    for (TypeId c : children[t])
      if (--indegree[c] == 0) ready.push_back(c);
  }
  if (visited != n) throw Error(ErrorCode::CyclicGraph, "parent relation contains a directed cycle");
  return cg;
}

std::optional<TypeId> CausalGraph::find(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<TypeId>(it - names_.begin());
}

TypeId CausalGraph::index_of(std::string_view name) const {
  auto t = find(name);
  if (!t) throw Error(ErrorCode::UnknownType, "type '" + std::string(name) + "' is not declared");
  return *t;
}

bool CausalGraph::is_parent(TypeId parent, TypeId child) const {
  const auto& ps = parents_.at(child);
  return std::binary_search(ps.begin(), ps.end(), parent);
}

std::size_t CausalGraph::edge_count() const {
  std::size_t count = 0;
  for (const auto& ps : parents_) count += ps.size();
  return count;
}

std::size_t CausalGraph::shd(const CausalGraph& other) const {
  if (other.names_ != names_) throw Error(ErrorCode::ShapeMismatch, "SHD needs identical type sets");
  std::size_t d = 0;
  for (TypeId c = 0; c < size(); ++c)
    for (TypeId p = 0; p < size(); ++p)
      if (is_parent(p, c) != other.is_parent(p, c)) ++d;
  return d;
}

std::vector<TypeDecl> CausalGraph::declarations() const {
  std::vector<TypeDecl> out;
  for (TypeId t = 0; t < size(); ++t) {
    TypeDecl d{names_[t], {}, physical(t), multiplicity_[t]};
    for (TypeId p : parents_[t]) d.parents.push_back(names_[p]);
    out.push_back(std::move(d));
  }
  return out;
}

CausalGraph CausalGraph::without_edge(std::string_view parent, std::string_view child) const {
  auto decls = declarations();
  auto& ps = decls.at(index_of(child)).parents;
  index_of(parent);
  ps.erase(std::remove(ps.begin(), ps.end(), parent), ps.end());
  return build(decls);
}

CausalGraph CausalGraph::with_multiplicity(std::string_view type, int multiplicity) const {
  auto decls = declarations();
  decls.at(index_of(type)).multiplicity_max = multiplicity;
  return build(decls);
}

std::size_t CausalGraph::max_physical_nodes() const {
  std::size_t total = 0;
  for (TypeId t = 0; t < size(); ++t)
    if (physical(t)) total += static_cast<std::size_t>(multiplicity_[t]);
  return total;
}

nlohmann::json to_json(const CausalGraph& cg) {
  nlohmann::json types = nlohmann::json::array();
  for (const auto& d : cg.declarations()) {
    types.push_back({{"name", d.name},
                     {"parents", d.parents},
                     {"physical", d.physical},
                     {"multiplicity_max", d.multiplicity_max}});
  }
  return {{"format", "causalaf-causal-graph"}, {"version", 1}, {"types", types}};
}

CausalGraph causal_graph_from_json(const nlohmann::json& doc) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ParseError, "causal graph: " + msg); };
  if (!doc.is_object()) fail("document must be an object");
  if (doc.contains("version") && (!doc["version"].is_number_integer() || doc["version"].get<int>() != 1))
    fail("unsupported version");
  if (!doc.contains("types") || !doc["types"].is_array()) fail("'types' must be an array");
  std::vector<TypeDecl> decls;
  for (const auto& t : doc["types"]) {
    if (!t.is_object()) fail("type entries must be objects");
    if (!t.contains("name") || !t["name"].is_string()) fail("type entry needs a string 'name'");
    TypeDecl d;
    d.name = t["name"].get<std::string>();
    if (t.contains("parents")) {
      if (!t["parents"].is_array()) fail("'parents' of " + d.name + " must be an array");
      for (const auto& p : t["parents"]) {
        if (!p.is_string()) fail("parent labels must be strings");
        d.parents.push_back(p.get<std::string>());
      }
    }
    if (t.contains("physical")) {
      if (!t["physical"].is_boolean()) fail("'physical' of " + d.name + " must be boolean");
      d.physical = t["physical"].get<bool>();
    }
    if (t.contains("multiplicity_max")) {
      if (!t["multiplicity_max"].is_number_integer()) fail("'multiplicity_max' must be an integer");
      d.multiplicity_max = t["multiplicity_max"].get<int>();
    }
    decls.push_back(std::move(d));
  }
  return CausalGraph::build(decls);
}

CausalGraph load_causal_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  return causal_graph_from_json(doc);
}

// ---------------------------------------------------------------------------
// Masks

std::vector<TypeId> valid_type_queue(const CausalGraph& cg, const TypeCounts& generated) {
  if (generated.size() != cg.size()) throw Error(ErrorCode::ShapeMismatch, "type count vector size");
  std::vector<TypeId> out;
  for (TypeId t = 0; t < cg.size(); ++t) {
    if (!cg.physical(t) || generated[t] >= cg.multiplicity_max(t)) continue;
    const auto& ps = cg.parents(t);
    if (std::all_of(ps.begin(), ps.end(), [&](TypeId p) { return generated[p] > 0; })) out.push_back(t);
  }
  return out;
}

std::vector<std::uint8_t> com_mask(const CausalGraph& cg, const TypeCounts& generated) {
  std::vector<std::uint8_t> mask(cg.size(), 0);
  auto q = valid_type_queue(cg, generated);
  if (q.empty()) throw Error(ErrorCode::EmptyMask, "no node type is valid");
  for (TypeId t : q) mask[t] = 1;
  return mask;
}

// ---------------------------------------------------------------------------
// BehavioralGraph

BehavioralGraph::BehavioralGraph(std::size_t m, std::size_t n, std::size_t h1, std::size_t h2)
    : m_(m), n_(n), h1_(h1), h2_(h2), v_(m * n, 0.0), e_(m * m * (h1 + h2), 0.0) {}

void BehavioralGraph::set_nodes(std::size_t count) {
  if (count > m_) throw Error(ErrorCode::IndexOutOfRange, "node count exceeds m");
  nodes_ = count;
}

std::span<double> BehavioralGraph::node(std::size_t i) {
  if (i >= m_) throw Error(ErrorCode::IndexOutOfRange, "node index");
  return {v_.data() + i * n_, n_};
}

std::span<const double> BehavioralGraph::node(std::size_t i) const {
  if (i >= m_) throw Error(ErrorCode::IndexOutOfRange, "node index");
  return {v_.data() + i * n_, n_};
}

std::span<double> BehavioralGraph::edge(std::size_t i, std::size_t j) {
  if (i >= m_ || j >= m_) throw Error(ErrorCode::IndexOutOfRange, "edge index");
  const std::size_t w = edge_width();
  return {e_.data() + (i * m_ + j) * w, w};
}

std::span<const double> BehavioralGraph::edge(std::size_t i, std::size_t j) const {
  if (i >= m_ || j >= m_) throw Error(ErrorCode::IndexOutOfRange, "edge index");
  const std::size_t w = edge_width();
  return {e_.data() + (i * m_ + j) * w, w};
}

std::optional<TypeId> BehavioralGraph::type_of(std::size_t i) const {
  auto row = node(i);
  if (std::all_of(row.begin(), row.end(), [](double x) { return x == 0.0; })) return std::nullopt;
  return static_cast<TypeId>(std::max_element(row.begin(), row.end()) - row.begin());
}

std::optional<std::size_t> BehavioralGraph::edge_type(std::size_t i, std::size_t j) const {
  auto e = edge(i, j);
  auto block = e.first(h1_);
  if (std::all_of(e.begin(), e.end(), [](double x) { return x == 0.0; })) return std::nullopt;
  if (block.empty()) return std::nullopt;
  return static_cast<std::size_t>(std::max_element(block.begin(), block.end()) - block.begin());
}

std::span<const double> BehavioralGraph::edge_attributes(std::size_t i, std::size_t j) const {
  return edge(i, j).subspan(h1_);
}

TypeCounts BehavioralGraph::type_counts() const {
  TypeCounts counts(n_, 0);
  for (std::size_t i = 0; i < nodes_; ++i)
    if (auto t = type_of(i)) ++counts[*t];
  return counts;
}

bool BehavioralGraph::same_shape(const BehavioralGraph& o) const {
  return m_ == o.m_ && n_ == o.n_ && h1_ == o.h1_ && h2_ == o.h2_;
}

// ---------------------------------------------------------------------------
// CVM

GenerationMasks cvm_masks(const CausalGraph& cg, const BehavioralGraph& bg, std::size_t i) {
  const std::size_t m = bg.m(), n = bg.n(), w = bg.edge_width();
  if (i >= m) throw Error(ErrorCode::IndexOutOfRange, "cvm node index " + std::to_string(i));
  if (n != cg.size()) throw Error(ErrorCode::ShapeMismatch, "node width differs from type count");
  auto ti = bg.type_of(i);
  if (!ti) throw Error(ErrorCode::InvalidCondition, "node " + std::to_string(i) + " has no type yet");

  GenerationMasks masks;
  masks.com.assign(n, 1);
  masks.cvm_node.assign(m * n, 0);
  masks.cvm_edge.assign(m * m * w, 0);

  std::vector<std::uint8_t> visible(m, 0);
  for (std::size_t j = 0; j < i; ++j) {
    auto tj = bg.type_of(j);
    if (tj && cg.is_parent(*tj, *ti)) {
      visible[j] = 1;
      masks.permutation.push_back(j);
    }
  }
  visible[i] = 1;
  masks.permutation.push_back(i);

  for (std::size_t j = 0; j < m; ++j)
    if (visible[j]) std::fill_n(masks.cvm_node.begin() + static_cast<std::ptrdiff_t>(j * n), n, 1);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      if (visible[a] && visible[b])
        std::fill_n(masks.cvm_edge.begin() + static_cast<std::ptrdiff_t>((a * m + b) * w), w, 1);
  return masks;
}

BehavioralGraph apply_cvm(const BehavioralGraph& bg, const GenerationMasks& masks) {
  BehavioralGraph out = bg;
  auto& v = out.node_data();
  auto& e = out.edge_data();
  if (masks.cvm_node.size() != v.size() || masks.cvm_edge.size() != e.size())
    throw Error(ErrorCode::ShapeMismatch, "mask shape");
  for (std::size_t k = 0; k < v.size(); ++k) v[k] *= masks.cvm_node[k];
  for (std::size_t k = 0; k < e.size(); ++k) e[k] *= masks.cvm_edge[k];
  return out;
}

BehavioralGraph compact(const BehavioralGraph& bg, std::span<const std::size_t> permutation) {
  BehavioralGraph out(bg.m(), bg.n(), bg.h1(), bg.h2());
  for (std::size_t a = 0; a < permutation.size(); ++a) {
    auto src = bg.node(permutation[a]);
    std::copy(src.begin(), src.end(), out.node(a).begin());
    for (std::size_t b = 0; b < permutation.size(); ++b) {
      auto es = bg.edge(permutation[a], permutation[b]);
      std::copy(es.begin(), es.end(), out.edge(a, b).begin());
    }
  }
  out.set_nodes(permutation.size());
  return out;
}

BehavioralGraph expand(const BehavioralGraph& compacted, std::span<const std::size_t> permutation,
                       std::size_t m) {
  BehavioralGraph out(m, compacted.n(), compacted.h1(), compacted.h2());
  std::size_t top = 0;
  for (std::size_t a = 0; a < permutation.size(); ++a) {
    auto src = compacted.node(a);
    std::copy(src.begin(), src.end(), out.node(permutation[a]).begin());
    top = std::max(top, permutation[a] + 1);
    for (std::size_t b = 0; b < permutation.size(); ++b) {
      auto es = compacted.edge(a, b);
      std::copy(es.begin(), es.end(), out.edge(permutation[a], permutation[b]).begin());
    }
  }
  out.set_nodes(top);
  return out;
}

// ---------------------------------------------------------------------------
// Validation

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::MalformedNode: return "MalformedNode";
    case ViolationKind::NonPhysicalType: return "NonPhysicalType";
    case ViolationKind::MultiplicityExceeded: return "MultiplicityExceeded";
    case ViolationKind::OrderViolation: return "OrderViolation";
    case ViolationKind::MalformedEdge: return "MalformedEdge";
    case ViolationKind::EdgeOutsideLowerTriangle: return "EdgeOutsideLowerTriangle";
    case ViolationKind::DimensionMismatch: return "DimensionMismatch";
  }
  return "Unknown";
}

namespace {

bool is_one_hot(std::span<const double> block) {
  std::size_t ones = 0;
  for (double x : block) {
    if (x == 1.0)
      ++ones;
    else if (x != 0.0)
      return false;
  }
  return ones == 1;
}

bool all_zero(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return x == 0.0; });
}

}  // namespace

std::vector<Violation> validate_bg(const BehavioralGraph& bg, const CausalGraph& cg) {
  std::vector<Violation> out;
  if (bg.m() == 0) return out;
  if (bg.n() != cg.size()) {
    out.push_back({ViolationKind::DimensionMismatch, 0, 0, "node width differs from causal type count"});
    return out;
  }

  const std::size_t count = bg.nodes();
  TypeCounts seen(cg.size(), 0);
  for (std::size_t i = 0; i < bg.m(); ++i) {
    auto row = bg.node(i);
    if (i >= count) {
      if (!all_zero(row)) out.push_back({ViolationKind::MalformedNode, i, i, "row beyond generated prefix is nonzero"});
      continue;
    }
    if (!is_one_hot(row)) {
      out.push_back({ViolationKind::MalformedNode, i, i, "node row is not one-hot"});
      continue;
    }
    const TypeId t = *bg.type_of(i);
    if (!cg.physical(t))
      out.push_back({ViolationKind::NonPhysicalType, i, i, "type " + cg.name(t) + " is not physical"});
    for (TypeId p : cg.parents(t)) {
      if (cg.physical(p) && seen[p] == 0)
        out.push_back({ViolationKind::OrderViolation, i, p,
                       "type " + cg.name(t) + " placed before its parent " + cg.name(p)});
    }
    if (++seen[t] > cg.multiplicity_max(t))
      out.push_back({ViolationKind::MultiplicityExceeded, i, i, "too many instances of " + cg.name(t)});
  }

  for (std::size_t i = 0; i < bg.m(); ++i) {
    for (std::size_t j = 0; j < bg.m(); ++j) {
      auto e = bg.edge(i, j);
      if (all_zero(e)) continue;
      if (j > i || i >= count) {
        out.push_back({ViolationKind::EdgeOutsideLowerTriangle, i, j, "edge outside the generated lower triangle"});
        continue;
      }
      if (!is_one_hot(e.first(bg.h1())))
        out.push_back({ViolationKind::MalformedEdge, i, j, "edge type block is not one-hot"});
    }
  }
  return out;
}

}  // namespace causalaf
