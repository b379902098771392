#pragma once

#include <functional>
#include <optional>
#include <set>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "varscope/model.hpp"

namespace varscope::enumeration {

using BigCount = boost::multiprecision::cpp_int;

struct ScopeQuery {
  int K = 1;
  std::optional<int> M;
  std::optional<int> u;
};

// Stirling number of the second kind via S(M,u) = u S(M-1,u) + S(M-1,u-1),
// S(0,0) = 1. Out-of-range arguments count zero partitions.
BigCount stirling2(int M, int u);

BigCount binomial(int n, int k);

// With M and u fixed: u! C(K,M) S(M,u). With only K: the double sum over all
// admissible (M,u).
BigCount count_expansions(const ScopeQuery& q);

// Visits every ordered sequence of disjoint non-empty blocks over every
// non-empty subset of {1..K}, as plans over variables named V1..VK. Order is
// deterministic and part of the interface: by manifest size M, then manifest
// subset lexicographically, then block count u, then block sequences
// lexicographically (blocks compared as sorted index lists).
// K > 12 is rejected unless allow_large is set.
void for_each_plan(int K, const std::function<void(const ExpansionPlan&)>& visit,
                   const std::optional<std::set<int>>& manifest_filter = std::nullopt,
                   bool allow_large = false);

std::vector<ExpansionPlan> enumerate_plans(
    int K, const std::optional<std::set<int>>& manifest_filter = std::nullopt,
    bool allow_large = false);

// The V1..VK universe the enumerator emits plans over.
HierarchySpec generic_hierarchy(int K);

}  // namespace varscope::enumeration
