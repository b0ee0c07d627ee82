#include <gtest/gtest.h>

#include "causalaf/scenario_graph.hpp"
#include "test_util.hpp"

using namespace causalaf;
using causalaf::testing::error_code_of;
using causalaf::testing::pedestrian_cg;

namespace {

std::vector<std::string> names_of(const CausalGraph& cg, const std::vector<TypeId>& ids) {
  std::vector<std::string> out;
  for (auto t : ids) out.push_back(cg.name(t));
  std::sort(out.begin(), out.end());
  return out;
}

void set_type(BehavioralGraph& bg, std::size_t i, TypeId t) {
  auto row = bg.node(i);
  std::fill(row.begin(), row.end(), 0.0);
  row[t] = 1.0;
}

void set_edge(BehavioralGraph& bg, std::size_t i, std::size_t j, EdgeKind kind, double attr) {
  auto e = bg.edge(i, j);
  std::fill(e.begin(), e.end(), attr);
  for (std::size_t k = 0; k < bg.h1(); ++k) e[k] = 0.0;
  e[static_cast<std::size_t>(kind)] = 1.0;
}

}  // namespace

TEST(CausalGraph, PedestrianBuilds) {
  const auto cg = pedestrian_cg();
  EXPECT_EQ(cg.size(), 5u);
  EXPECT_TRUE(cg.is_parent(cg.index_of("S"), cg.index_of("A")));
  EXPECT_TRUE(cg.is_parent(cg.index_of("A"), cg.index_of("C")));
  EXPECT_TRUE(cg.is_parent(cg.index_of("P"), cg.index_of("C")));
  EXPECT_FALSE(cg.physical(cg.index_of("C")));
  EXPECT_EQ(cg.edge_count(), 3u);
}

TEST(CausalGraph, SingleRoot) {
  const auto cg = CausalGraph::build({{"X", {}}});
  EXPECT_EQ(cg.size(), 1u);
  EXPECT_TRUE(cg.parents(0).empty());
}

TEST(CausalGraph, TwoCycleRejected) {
  EXPECT_EQ(error_code_of([] { CausalGraph::build({{"A", {"P"}}, {"P", {"A"}}}); }), ErrorCode::CyclicGraph);
}

TEST(CausalGraph, SelfLoopRejected) {
  EXPECT_EQ(error_code_of([] { CausalGraph::build({{"A", {"A"}}}); }), ErrorCode::CyclicGraph);
}

TEST(CausalGraph, UnknownParentRejected) {
  EXPECT_EQ(error_code_of([] { CausalGraph::build({{"A", {"Q"}}}); }), ErrorCode::UnknownType);
}

TEST(CausalGraph, JsonRoundTrip) {
  const auto cg = pedestrian_cg().with_multiplicity("I", 3);
  EXPECT_EQ(causal_graph_from_json(to_json(cg)), cg);
  EXPECT_EQ(cg.multiplicity_max(cg.index_of("I")), 3);
}

TEST(CausalGraph, EdgeDeletionHasShdOne) {
  const auto cg = pedestrian_cg();
  const auto cut = cg.without_edge("S", "A");
  EXPECT_EQ(cg.shd(cut), 1u);
  EXPECT_EQ(cut.shd(cg), 1u);
  EXPECT_EQ(cg.shd(cg), 0u);
  EXPECT_FALSE(cut.is_parent(cut.index_of("S"), cut.index_of("A")));
}

TEST(ValidTypeQueue, PedestrianEmpty) {
  const auto cg = pedestrian_cg();
  EXPECT_EQ(names_of(cg, valid_type_queue(cg, TypeCounts(5, 0))), (std::vector<std::string>{"I", "P", "S"}));
}

TEST(ValidTypeQueue, PedestrianAfterS) {
  const auto cg = pedestrian_cg();
  TypeCounts counts(5, 0);
  counts[cg.index_of("S")] = 1;
  EXPECT_EQ(names_of(cg, valid_type_queue(cg, counts)), (std::vector<std::string>{"A", "I", "P"}));
}

TEST(ValidTypeQueue, IsolatedTypesAllValid) {
  const auto cg = CausalGraph::build({{"X", {}}, {"Y", {}}, {"Z", {}}, {"N", {}, false}});
  EXPECT_EQ(names_of(cg, valid_type_queue(cg, TypeCounts(4, 0))), (std::vector<std::string>{"X", "Y", "Z"}));
}

TEST(ComMask, PedestrianEmpty) {
  const auto cg = pedestrian_cg();
  EXPECT_EQ(com_mask(cg, TypeCounts(5, 0)), (std::vector<std::uint8_t>{0, 1, 1, 1, 0}));
}

TEST(ComMask, IsolatedAllOnes) {
  const auto cg = CausalGraph::build({{"X", {}}, {"Y", {}}});
  EXPECT_EQ(com_mask(cg, TypeCounts(2, 0)), (std::vector<std::uint8_t>{1, 1}));
}

TEST(ComMask, SaturatedThrows) {
  const auto cg = pedestrian_cg();
  EXPECT_EQ(error_code_of([&] { com_mask(cg, TypeCounts{1, 1, 1, 1, 0}); }), ErrorCode::EmptyMask);
}

TEST(ComMask, ReachableOrdersEqualTopologicalOrders) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 5);
    const auto cg = causalaf::testing::random_dag(n, rng);
    std::set<std::vector<TypeId>> reachable;
    std::vector<TypeId> prefix;
    TypeCounts counts(n, 0);
    bool consistent = true;
    causalaf::testing::reachable_orders(cg, prefix, counts, reachable, consistent);
    EXPECT_TRUE(consistent);
    EXPECT_EQ(reachable, causalaf::testing::brute_force_orders(cg)) << "trial " << trial;
  }
}

TEST(Cvm, FirstNodeIsIdentity) {
  const auto cg = pedestrian_cg();
  BehavioralGraph bg(4, 5, 3, 4);
  set_type(bg, 0, cg.index_of("S"));
  bg.set_nodes(1);
  const auto masks = cvm_masks(cg, bg, 0);
  EXPECT_EQ(masks.permutation, (std::vector<std::size_t>{0}));
  EXPECT_EQ(apply_cvm(bg, masks), bg);
}

TEST(Cvm, AllParentsVisible) {
  const auto cg = CausalGraph::build({{"a", {}}, {"b", {}}, {"c", {"a", "b"}}});
  BehavioralGraph bg(3, 3, 3, 4);
  for (std::size_t i = 0; i < 3; ++i) set_type(bg, i, i);
  bg.set_nodes(3);
  set_edge(bg, 0, 0, EdgeKind::IndependentAction, 0.25);
  set_edge(bg, 1, 0, EdgeKind::DirectedInteraction, -0.5);
  const auto masks = cvm_masks(cg, bg, 2);
  EXPECT_EQ(masks.permutation, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_TRUE(std::all_of(masks.cvm_node.begin(), masks.cvm_node.end(), [](auto v) { return v == 1; }));
  EXPECT_TRUE(std::all_of(masks.cvm_edge.begin(), masks.cvm_edge.end(), [](auto v) { return v == 1; }));
  EXPECT_EQ(compact(apply_cvm(bg, masks), masks.permutation), bg);
}

TEST(Cvm, IrrelevantNodeMaskedAndCompacted) {
  // a -> c, b unrelated to c.
  const auto cg = CausalGraph::build({{"a", {}}, {"b", {}}, {"c", {"a"}}});
  BehavioralGraph bg(3, 3, 3, 4);
  for (std::size_t i = 0; i < 3; ++i) set_type(bg, i, i);
  bg.set_nodes(3);
  set_edge(bg, 0, 0, EdgeKind::IndependentAction, 0.1);
  set_edge(bg, 1, 1, EdgeKind::IndependentAction, 0.2);
  set_edge(bg, 1, 0, EdgeKind::DirectedInteraction, 0.3);
  set_edge(bg, 2, 1, EdgeKind::DirectedInteraction, 0.4);

  const auto masks = cvm_masks(cg, bg, 2);
  EXPECT_EQ(masks.permutation, (std::vector<std::size_t>{0, 2}));
  const auto masked = apply_cvm(bg, masks);
  for (double v : masked.node(1)) EXPECT_EQ(v, 0.0);
  for (double v : masked.edge(2, 1)) EXPECT_EQ(v, 0.0);
  for (double v : masked.edge(1, 1)) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(masked.type_of(0), bg.type_of(0));

  const auto packed = compact(masked, masks.permutation);
  EXPECT_EQ(packed.type_of(1), bg.type_of(2));
  EXPECT_FALSE(packed.type_of(2));
  EXPECT_TRUE(std::equal(packed.edge(0, 0).begin(), packed.edge(0, 0).end(), bg.edge(0, 0).begin()));

  // Compaction followed by expansion is the identity on surviving nodes.
  const auto back = expand(packed, masks.permutation, 3);
  EXPECT_EQ(back, masked);
}

TEST(Cvm, Idempotent) {
  const auto cg = CausalGraph::build({{"a", {}}, {"b", {}}, {"c", {"a"}}});
  BehavioralGraph bg(3, 3, 3, 4);
  for (std::size_t i = 0; i < 3; ++i) set_type(bg, i, i);
  bg.set_nodes(3);
  set_edge(bg, 1, 0, EdgeKind::DirectedInteraction, 0.7);
  const auto masks = cvm_masks(cg, bg, 2);
  const auto once = apply_cvm(bg, masks);
  EXPECT_EQ(apply_cvm(once, masks), once);
}

TEST(Cvm, IndexOutOfRange) {
  const auto cg = pedestrian_cg();
  BehavioralGraph bg(2, 5, 3, 4);
  EXPECT_EQ(error_code_of([&] { cvm_masks(cg, bg, 2); }), ErrorCode::IndexOutOfRange);
}

TEST(ValidateBg, OrderViolationFound) {
  const auto cg = pedestrian_cg();
  BehavioralGraph bg(4, 5, 3, 4);
  set_type(bg, 0, cg.index_of("A"));
  set_type(bg, 1, cg.index_of("S"));
  bg.set_nodes(2);
  const auto v = validate_bg(bg, cg);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, ViolationKind::OrderViolation);

  // Oracle: the type sequence (A, S) is no prefix of any topological order.
  bool prefix_of_some = false;
  for (const auto& order : causalaf::testing::brute_force_orders(cg))
    if (order[0] == cg.index_of("A")) prefix_of_some = true;
  EXPECT_FALSE(prefix_of_some);
}

TEST(ValidateBg, ValidOrderClean) {
  const auto cg = pedestrian_cg();
  BehavioralGraph bg(4, 5, 3, 4);
  set_type(bg, 0, cg.index_of("S"));
  set_type(bg, 1, cg.index_of("A"));
  set_edge(bg, 1, 0, EdgeKind::NoInteraction, 0.0);
  bg.set_nodes(2);
  EXPECT_TRUE(validate_bg(bg, cg).empty());
}

TEST(ValidateBg, EmptyGraph) {
  EXPECT_TRUE(validate_bg(BehavioralGraph(0, 5, 3, 4), pedestrian_cg()).empty());
}

TEST(ValidateBg, StructuralViolations) {
  const auto cg = pedestrian_cg();
  BehavioralGraph bg(4, 5, 3, 4);
  set_type(bg, 0, cg.index_of("S"));
  set_type(bg, 1, cg.index_of("S"));
  bg.set_nodes(2);
  bg.edge(0, 1)[0] = 1.0;
  const auto v = validate_bg(bg, cg);
  std::set<ViolationKind> kinds;
  for (const auto& x : v) kinds.insert(x.kind);
  EXPECT_TRUE(kinds.count(ViolationKind::MultiplicityExceeded));
  EXPECT_TRUE(kinds.count(ViolationKind::EdgeOutsideLowerTriangle));
}
