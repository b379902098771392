#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "varscope/model.hpp"

namespace varscope::indep {

// A conditional-independence statement left ⫫ right | given over the
// variables V_1..V_K plus the special atoms Y (= Y_{n+1}) and the data D.
// The right side holds variables only; D may appear on the left or in the
// conditioning set.
struct CiSide {
  std::set<int> vars;
  bool has_y = false;
  bool has_data = false;

  auto operator<=>(const CiSide&) const = default;
};

struct CIStatement {
  CiSide left;
  std::set<int> right;
  CiSide given;  // has_y must stay false

  auto operator<=>(const CIStatement&) const = default;
};

CIStatement make_ci(CiSide left, std::set<int> right, CiSide given);

// Closure of `base` under exactly three rules:
//  (a) split:        (Y,D) ⫫ R | G  ⇒  Y ⫫ R | (G,D)  and  D ⫫ R | G
//  (b) ordering lemma: V_i ⫫ V_{¬i} | D  ⇒  V_i ⫫ V_u | ({D,V_1..V_{u-1}}\{V_i})
//  (c) decomposition: A ⫫ B∪C | G  ⇒  A ⫫ B | G
// No other graphoid rules; entailment checks are membership in this closure
// (sound but deliberately incomplete). K = 0 infers the universe from the
// statements themselves.
std::set<CIStatement> derive_ci(const std::set<CIStatement>& base, int K = 0);

bool entails(const std::set<CIStatement>& closure, const CIStatement& query);

// A zero-valued term of a single-variable-block full-manifest plan:
// T^{ordering}_k = 0, where `ordering` is a permutation of 1..K and the
// variance acts on the k-th conditioned variable.
struct TermRef {
  std::vector<int> ordering;
  int k = 0;  // 1-based; the leading k = 0 term is never zero

  auto operator<=>(const TermRef&) const = default;
  std::string label() const;
};

enum class Provenance { asserted, derived };

struct ZeroFact {
  TermRef term;
  Provenance provenance = Provenance::asserted;
  std::string rule;  // "clause1", "clause2", "structural-reduction"

  auto operator<=>(const ZeroFact&) const = default;
};

enum class EdgeKind { two_sided, one_sided };

struct ImplicationEdge {
  TermRef from;
  TermRef to;
  EdgeKind kind = EdgeKind::two_sided;
  int licensed_by = 0;  // variable whose posterior independence enables a one_sided edge

  auto operator<=>(const ImplicationEdge&) const = default;
};

struct ImplicationGraph {
  int K = 0;
  std::vector<TermRef> nodes;          // all K! * K term references
  std::vector<ImplicationEdge> edges;  // two_sided edges stored once, from < to
  std::vector<ZeroFact> zeros;         // asserted + derived facts after propagation
};

// Clause-1 edges need no assumptions; clause-2 edges from (A,i) to (B,j)
// additionally require V_{A[i]} ⫫ V_{¬A[i]} | D to be entailed by `ci`.
ImplicationGraph build_implication_graph(int K, const std::set<CIStatement>& ci);

// Propagates the asserted zero facts across the graph to a fixpoint
// (clause-1 edges both ways, clause-2 edges forward).
ImplicationGraph propagate_zero_terms(const std::vector<ZeroFact>& facts,
                                      const std::set<CIStatement>& ci, int K);

struct ReductionResult {
  ExpansionPlan plan;
  std::vector<ZeroFact> dropped;  // term ids (by block position) forced to zero
  std::size_t kept_blocks = 0;
};

// Structural reduction: if ci entails (Y,D) ⫫ blocks m+1..u | blocks 1..m,
// truncates the plan at the smallest such m and moves the tail to latent.
ReductionResult reduce_plan(const HierarchySpec& spec, const ExpansionPlan& plan,
                            const std::set<CIStatement>& ci);

// JSON array of {"left":[...],"right":[...],"given":[...]} with variables as
// "V<i>" or declared names resolved against `spec`, plus atoms "Y" and "D".
std::set<CIStatement> ci_from_json(const nlohmann::json& doc, const HierarchySpec* spec = nullptr);
nlohmann::json to_json(const std::set<CIStatement>& set);
nlohmann::json to_json(const ImplicationGraph& graph);

// DOT rendering; one-sided edges are styled solid/dashed/dotted by licensing
// variable (V_K plain down to V_1 dotted for K = 3).
std::string to_dot(const ImplicationGraph& graph);

TermRef parse_term_ref(const std::string& text);  // "123:3" -> ordering 1,2,3, k=3

}  // namespace varscope::indep
