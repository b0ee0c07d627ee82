#pragma once

#include <algorithm>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "causalaf/errors.hpp"
#include "causalaf/rng.hpp"
#include "causalaf/scenario_graph.hpp"

namespace causalaf::testing {

// Pedestrian graph with types declared in the order A, P, S, I, C.
inline CausalGraph pedestrian_cg() {
  return CausalGraph::build({{"A", {"S"}}, {"P", {}}, {"S", {}}, {"I", {}}, {"C", {"A", "P"}, false}});
}

template <class F>
ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(-1);
}

// Random DAG over n types named T0..T{n-1}, edges from earlier to later
// positions of a random permutation.
inline CausalGraph random_dag(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng.engine());
  std::vector<TypeDecl> decls(n);
  for (std::size_t k = 0; k < n; ++k) decls[k].name = "T" + std::to_string(k);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (rng.uniform() < 0.5) decls[order[b]].parents.push_back(decls[order[a]].name);
  return CausalGraph::build(decls);
}

// Every permutation of the types in which each type follows all its parents.
inline std::set<std::vector<TypeId>> brute_force_orders(const CausalGraph& cg) {
  std::vector<TypeId> perm(cg.size());
  std::iota(perm.begin(), perm.end(), TypeId{0});
  std::set<std::vector<TypeId>> out;
  do {
    bool ok = true;
    for (std::size_t k = 0; k < perm.size() && ok; ++k)
      for (TypeId p : cg.parents(perm[k]))
        if (std::find(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k), p) ==
            perm.begin() + static_cast<std::ptrdiff_t>(k))
          ok = false;
    if (ok) out.insert(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

// Complete sequences reachable by always picking a type the order mask allows.
// Also checks at each prefix that the mask marks exactly the queue members.
inline void reachable_orders(const CausalGraph& cg, std::vector<TypeId>& prefix, TypeCounts& counts,
                             std::set<std::vector<TypeId>>& out, bool& mask_consistent) {
  const auto queue = valid_type_queue(cg, counts);
  if (queue.empty()) {
    out.insert(prefix);
    return;
  }
  const auto mask = com_mask(cg, counts);
  for (TypeId t = 0; t < cg.size(); ++t) {
    const bool in_queue = std::find(queue.begin(), queue.end(), t) != queue.end();
    if ((mask[t] != 0) != in_queue) mask_consistent = false;
  }
  for (TypeId t : queue) {
    prefix.push_back(t);
    ++counts[t];
    reachable_orders(cg, prefix, counts, out, mask_consistent);
    --counts[t];
    prefix.pop_back();
  }
}

}  // namespace causalaf::testing
