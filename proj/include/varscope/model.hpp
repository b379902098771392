#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "varscope/errors.hpp"

namespace varscope {

// One level of a hierarchical model. `index` is the 1-based position in the
// fixed ordering Z_1..Z_K (top of the hierarchy first).
struct VariableId {
  std::string name;
  int index = 0;

  friend bool operator==(const VariableId&, const VariableId&) = default;
};

struct Level {
  std::string name;
  std::string dist;
  nlohmann::json params;
};

struct Likelihood {
  std::string dist;
  nlohmann::json params;
};

// Declarative description of a K-level hierarchy. Level k may reference only
// levels 1..k-1; the likelihood references only declared levels. The data
// handle is deliberately opaque (it may stand for y^n plus covariates).
struct HierarchySpec {
  int K = 0;
  std::vector<Level> levels;
  Likelihood likelihood;
  std::string data_symbol = "D";

  std::vector<VariableId> variables() const;
  bool has_variable(const std::string& name) const;
};

// An ordered partition of the manifest variables into blocks B_1..B_u; the
// remaining variables are latent. Block order is conditioning order: B_1 is
// conditioned first, so the term whose variance acts on B_1 is the outermost
// (last-displayed) term of the expansion.
struct ExpansionPlan {
  std::vector<std::vector<std::string>> blocks;
  std::vector<std::string> latent;

  std::size_t u() const { return blocks.size(); }
  std::size_t manifest_count() const;
};

struct TermId {
  std::size_t k = 0;  // 0 = leading EVar term, k >= 1 = variance over B_k
};

enum class Method { closed_form, monte_carlo, empirical_draws };

struct TermDiagnostics {
  std::size_t n_outer = 0;
  std::size_t n_inner = 0;
  std::uint64_t seed = 0;
  std::vector<double> term_se;  // indexed like terms
  double total_se = 0.0;
  std::vector<std::string> notes;
};

// Term values of one expansion, indexed by TermId.k. `total` is stored
// redundantly from an independent route so conservation is a real check.
struct TermReport {
  std::vector<std::string> block_labels;  // label of B_k at position k-1
  std::vector<double> terms;              // size u+1, index = TermId.k
  double total = 0.0;
  Method method = Method::closed_form;
  std::string model_id;
  std::optional<TermDiagnostics> diagnostics;

  std::size_t block_count() const { return terms.empty() ? 0 : terms.size() - 1; }
  double term_sum() const;
  // Paper display order: T_0, T_u, T_{u-1}, ..., T_1.
  std::vector<double> display_terms() const;
  std::vector<std::string> display_labels() const;
};

// Enforces the manifest/latent rules: blocks disjoint and non-empty, every
// variable of `spec` in exactly one of {blocks, latent}, all names declared.
// Returns the plan unchanged if the invariants hold.
ExpansionPlan validate_plan(const HierarchySpec& spec, const ExpansionPlan& plan);

// JSON document layout (field names are part of the interface):
// {"K":int,"levels":[{"name":str,"dist":str,"params":{...}}],
//  "likelihood":{"dist":str,"params":{...}},
//  "plan":{"blocks":[[names]],"latent":[names]}}
nlohmann::json to_json(const HierarchySpec& spec, const ExpansionPlan* plan = nullptr);
HierarchySpec hierarchy_from_json(const nlohmann::json& doc);
std::optional<ExpansionPlan> plan_from_json(const nlohmann::json& doc);

// Plan text form used by the CLI: blocks separated by '|', variables within a
// block by ','. "mu|lambda2" is [{mu},{lambda2}].
ExpansionPlan parse_plan_string(const std::string& text);

nlohmann::json to_json(const TermReport& report);

}  // namespace varscope
