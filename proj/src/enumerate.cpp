#include "varscope/enumerate.hpp"

#include <algorithm>

#include "varscope/errors.hpp"

namespace varscope::enumeration {

namespace {

constexpr int kMaxEnumerateK = 12;

BigCount factorial(int n) {
  BigCount f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Emits ordered partitions of `remaining` (sorted) into exactly `blocks_left`
// non-empty blocks, in lexicographic order of the block sequence.
void emit_ordered_partitions(const std::vector<int>& remaining, int blocks_left,
                             std::vector<std::vector<int>>& prefix,
                             const std::function<void(const std::vector<std::vector<int>>&)>& out) {
  if (blocks_left == 0) {
    if (remaining.empty()) out(prefix);
    return;
  }
  const int max_take = static_cast<int>(remaining.size()) - (blocks_left - 1);
  if (max_take <= 0) return;

  // First blocks in lex order: subsets of `remaining` as sorted lists, where
  // {a} < {a,b} < {a,c} < {b} for a < b < c.
  std::vector<int> chosen;
  std::function<void(std::size_t)> grow = [&](std::size_t start) {
    for (std::size_t i = start; i < remaining.size(); ++i) {
      chosen.push_back(remaining[i]);
      if (static_cast<int>(chosen.size()) <= max_take) {
        std::vector<int> rest;
        rest.reserve(remaining.size() - chosen.size());
        std::set_difference(remaining.begin(), remaining.end(), chosen.begin(), chosen.end(),
                            std::back_inserter(rest));
        prefix.push_back(chosen);
        emit_ordered_partitions(rest, blocks_left - 1, prefix, out);
        prefix.pop_back();
        grow(i + 1);
      }
      chosen.pop_back();
    }
  };
  grow(0);
}

ExpansionPlan plan_from_indices(int K, const std::vector<std::vector<int>>& blocks) {
  ExpansionPlan plan;
  std::vector<bool> manifest(static_cast<std::size_t>(K) + 1, false);
  for (const auto& b : blocks) {
    std::vector<std::string> names;
    for (int v : b) {
      names.push_back("V" + std::to_string(v));
      manifest[static_cast<std::size_t>(v)] = true;
    }
    plan.blocks.push_back(std::move(names));
  }
  for (int v = 1; v <= K; ++v) {
    if (!manifest[static_cast<std::size_t>(v)]) plan.latent.push_back("V" + std::to_string(v));
  }
  return plan;
}

}  // namespace

BigCount stirling2(int M, int u) {
  if (M < 0 || u < 0) return 0;
  if (M == 0 && u == 0) return 1;
  if (M == 0 || u == 0 || u > M) return 0;
  std::vector<std::vector<BigCount>> table(static_cast<std::size_t>(M) + 1,
                                           std::vector<BigCount>(static_cast<std::size_t>(u) + 1, 0));
  table[0][0] = 1;
  for (int m = 1; m <= M; ++m) {
    for (int j = 1; j <= std::min(m, u); ++j) {
      table[m][j] = BigCount(j) * table[m - 1][j] + table[m - 1][j - 1];
    }
  }
  return table[static_cast<std::size_t>(M)][static_cast<std::size_t>(u)];
}

BigCount binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  BigCount num = 1;
  for (int i = 0; i < k; ++i) {
    num *= (n - i);
    num /= (i + 1);
  }
  return num;
}

BigCount count_expansions(const ScopeQuery& q) {
  if (q.K < 1) throw DomainError("count_expansions: K must be >= 1");
  if (q.M && (*q.M < 1 || *q.M > q.K)) throw DomainError("count_expansions: need 1 <= M <= K");
  if (q.u && *q.u < 1) throw DomainError("count_expansions: need u >= 1");
  if (q.M && q.u && *q.u > *q.M) throw DomainError("count_expansions: need u <= M");
  if (q.u && !q.M && *q.u > q.K) throw DomainError("count_expansions: need u <= K");

  const auto one = [&](int M, int u) {
    return factorial(u) * binomial(q.K, M) * stirling2(M, u);
  };
  if (q.M && q.u) return one(*q.M, *q.u);

  BigCount total = 0;
  for (int u = q.u.value_or(1); u <= q.u.value_or(q.K); ++u) {
    for (int M = std::max(u, q.M.value_or(u)); M <= q.M.value_or(q.K); ++M) {
      total += one(M, u);
    }
  }
  return total;
}

void for_each_plan(int K, const std::function<void(const ExpansionPlan&)>& visit,
                   const std::optional<std::set<int>>& manifest_filter, bool allow_large) {
  if (K < 1) throw DomainError("enumerate_plans: K must be >= 1");
  if (K > kMaxEnumerateK && !allow_large) {
    throw DomainError("enumerate_plans: K > 12 rejected (combinatorial explosion); "
                      "pass the override flag to proceed");
  }
  if (manifest_filter) {
    for (int v : *manifest_filter) {
      if (v < 1 || v > K) throw DomainError("enumerate_plans: manifest filter outside 1..K");
    }
  }

  // Manifest subsets by size, then lexicographically.
  for (int M = 1; M <= K; ++M) {
    std::vector<int> subset(static_cast<std::size_t>(M));
    std::function<void(int, int)> choose = [&](int start, int depth) {
      if (depth == M) {
        if (manifest_filter &&
            !std::equal(subset.begin(), subset.end(), manifest_filter->begin(),
                        manifest_filter->end())) {
          return;
        }
        for (int u = 1; u <= M; ++u) {
          std::vector<std::vector<int>> prefix;
          emit_ordered_partitions(subset, u, prefix,
                                  [&](const std::vector<std::vector<int>>& blocks) {
                                    visit(plan_from_indices(K, blocks));
                                  });
        }
        return;
      }
      for (int v = start; v <= K - (M - depth - 1); ++v) {
        subset[static_cast<std::size_t>(depth)] = v;
        choose(v + 1, depth + 1);
      }
    };
    if (manifest_filter && static_cast<int>(manifest_filter->size()) != M) {
      continue;
    }
    choose(1, 0);
  }
}

std::vector<ExpansionPlan> enumerate_plans(int K, const std::optional<std::set<int>>& manifest_filter,
                                           bool allow_large) {
  std::vector<ExpansionPlan> out;
  for_each_plan(K, [&](const ExpansionPlan& p) { out.push_back(p); }, manifest_filter, allow_large);
  return out;
}

HierarchySpec generic_hierarchy(int K) {
  HierarchySpec spec;
  spec.K = K;
  for (int v = 1; v <= K; ++v) {
    spec.levels.push_back({"V" + std::to_string(v), "generic", nlohmann::json::object()});
  }
  spec.likelihood = {"generic", nlohmann::json::object()};
  return spec;
}

}  // namespace varscope::enumeration
