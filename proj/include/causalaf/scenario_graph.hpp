#pragma once

// Behavioral and causal graph types plus the causal order / visibility masks
// applied while a behavioral graph is generated.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace causalaf {

using TypeId = std::size_t;

/// Label of the "irrelevant object" type. Generation may stop before such
/// objects are placed; every other physical type is mandatory.
inline constexpr std::string_view kIrrelevantType = "I";

struct TypeDecl {
  std::string name;
  std::vector<std::string> parents;
  bool physical = true;
  int multiplicity_max = 1;
};

/// Type-level DAG. Immutable after construction.
class CausalGraph {
 public:
  CausalGraph() = default;

  /// Validates and builds a graph. Throws Error(UnknownType) for unresolved
  /// parent labels and Error(CyclicGraph) if the parent relation has a cycle.
  static CausalGraph build(const std::vector<TypeDecl>& decls);

  std::size_t size() const { return names_.size(); }
  const std::string& name(TypeId t) const { return names_.at(t); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<TypeId> find(std::string_view name) const;
  TypeId index_of(std::string_view name) const;  // throws UnknownType

  const std::vector<TypeId>& parents(TypeId t) const { return parents_.at(t); }
  bool is_parent(TypeId parent, TypeId child) const;
  bool physical(TypeId t) const { return physical_.at(t) != 0; }
  int multiplicity_max(TypeId t) const { return multiplicity_.at(t); }
  bool mandatory(TypeId t) const { return physical(t) && names_[t] != kIrrelevantType; }

  /// Number of directed edges.
  std::size_t edge_count() const;
  /// Structural Hamming distance: count of ordered type pairs whose edge
  /// presence differs. Both graphs must declare the same type names.
  std::size_t shd(const CausalGraph& other) const;

  CausalGraph without_edge(std::string_view parent, std::string_view child) const;
  CausalGraph with_multiplicity(std::string_view type, int multiplicity) const;

  std::vector<TypeDecl> declarations() const;
  /// Sum of multiplicity caps over physical types.
  std::size_t max_physical_nodes() const;

  friend bool operator==(const CausalGraph&, const CausalGraph&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<TypeId>> parents_;
  std::vector<std::uint8_t> physical_;
  std::vector<int> multiplicity_;
};

nlohmann::json to_json(const CausalGraph& cg);
CausalGraph causal_graph_from_json(const nlohmann::json& doc);
CausalGraph load_causal_graph(const std::string& path);

/// Per-type instance counts; the multiset of generated types.
using TypeCounts = std::vector<int>;

/// Types whose parents are all generated, that are physical and below their
/// multiplicity cap. Sorted ascending.
std::vector<TypeId> valid_type_queue(const CausalGraph& cg, const TypeCounts& generated);

/// k-hot mask over types built from valid_type_queue. Throws EmptyMask when
/// no type is valid.
std::vector<std::uint8_t> com_mask(const CausalGraph& cg, const TypeCounts& generated);

/// Node matrix V (m x n) and edge tensor E (m x m x (h1 + h2)). Rows of
/// nodes not yet generated stay zero; `nodes` is the generated prefix length.
class BehavioralGraph {
 public:
  BehavioralGraph() = default;
  BehavioralGraph(std::size_t m, std::size_t n, std::size_t h1, std::size_t h2);

  std::size_t m() const { return m_; }
  std::size_t n() const { return n_; }
  std::size_t h1() const { return h1_; }
  std::size_t h2() const { return h2_; }
  std::size_t edge_width() const { return h1_ + h2_; }

  std::size_t nodes() const { return nodes_; }
  void set_nodes(std::size_t count);

  std::span<double> node(std::size_t i);
  std::span<const double> node(std::size_t i) const;
  std::span<double> edge(std::size_t i, std::size_t j);
  std::span<const double> edge(std::size_t i, std::size_t j) const;

  const std::vector<double>& node_data() const { return v_; }
  const std::vector<double>& edge_data() const { return e_; }
  std::vector<double>& node_data() { return v_; }
  std::vector<double>& edge_data() { return e_; }

  /// Argmax column of a one-hot row; nullopt for an all-zero row.
  std::optional<TypeId> type_of(std::size_t i) const;
  /// Index of the hot edge type; nullopt when the edge is absent (all zero).
  std::optional<std::size_t> edge_type(std::size_t i, std::size_t j) const;
  std::span<const double> edge_attributes(std::size_t i, std::size_t j) const;

  TypeCounts type_counts() const;
  bool same_shape(const BehavioralGraph& other) const;

  friend bool operator==(const BehavioralGraph&, const BehavioralGraph&) = default;

 private:
  std::size_t m_ = 0, n_ = 0, h1_ = 0, h2_ = 0;
  std::size_t nodes_ = 0;
  std::vector<double> v_;
  std::vector<double> e_;
};

/// Edge-type vocabulary used by the scenarios (h1 = 3).
enum class EdgeKind : std::size_t { NoInteraction = 0, IndependentAction = 1, DirectedInteraction = 2 };

struct GenerationMasks {
  std::vector<std::uint8_t> com;        // n
  std::vector<std::uint8_t> cvm_node;   // m x n
  std::vector<std::uint8_t> cvm_edge;   // m x m x (h1 + h2)
  /// permutation[k] = original index of the node placed at compacted slot k.
  /// Covers the surviving predecessors (in generation order) followed by i.
  std::vector<std::size_t> permutation;
};

/// Visibility masks for generating the edges of node i: predecessors whose
/// type is not a causal parent of type_of(i) are hidden, along with every
/// edge slice touching them. Throws IndexOutOfRange if i >= m.
GenerationMasks cvm_masks(const CausalGraph& cg, const BehavioralGraph& bg, std::size_t i);

/// Elementwise product of the graph with the CVM masks.
BehavioralGraph apply_cvm(const BehavioralGraph& bg, const GenerationMasks& masks);

/// Moves the listed nodes (and the edges among them) into a contiguous prefix.
BehavioralGraph compact(const BehavioralGraph& bg, std::span<const std::size_t> permutation);
/// Inverse of compact: scatters a compacted graph back onto original indices
/// of a graph with the given shape.
BehavioralGraph expand(const BehavioralGraph& compacted, std::span<const std::size_t> permutation,
                       std::size_t m);

enum class ViolationKind {
  MalformedNode,
  NonPhysicalType,
  MultiplicityExceeded,
  OrderViolation,
  MalformedEdge,
  EdgeOutsideLowerTriangle,
  DimensionMismatch,
};

struct Violation {
  ViolationKind kind;
  std::size_t i = 0;
  std::size_t j = 0;
  std::string message;
};

std::string_view to_string(ViolationKind kind);

/// Structural and causal checks on a discretized graph; empty iff valid.
std::vector<Violation> validate_bg(const BehavioralGraph& bg, const CausalGraph& cg);

}  // namespace causalaf
