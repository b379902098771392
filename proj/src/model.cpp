#include "varscope/model.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace varscope {

std::vector<VariableId> HierarchySpec::variables() const {
  std::vector<VariableId> out;
  out.reserve(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    out.push_back({levels[i].name, static_cast<int>(i) + 1});
  }
  return out;
}

bool HierarchySpec::has_variable(const std::string& name) const {
  return std::any_of(levels.begin(), levels.end(),
                     [&](const Level& l) { return l.name == name; });
}

std::size_t ExpansionPlan::manifest_count() const {
  std::size_t m = 0;
  for (const auto& b : blocks) m += b.size();
  return m;
}

double TermReport::term_sum() const {
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

std::vector<double> TermReport::display_terms() const {
  std::vector<double> out;
  if (terms.empty()) return out;
  out.push_back(terms[0]);
  for (std::size_t k = terms.size() - 1; k >= 1; --k) out.push_back(terms[k]);
  return out;
}

std::vector<std::string> TermReport::display_labels() const {
  std::vector<std::string> out;
  if (terms.empty()) return out;
  out.push_back("EVar");
  for (std::size_t k = terms.size() - 1; k >= 1; --k) {
    out.push_back(k - 1 < block_labels.size() ? block_labels[k - 1] : "B" + std::to_string(k));
  }
  return out;
}

ExpansionPlan validate_plan(const HierarchySpec& spec, const ExpansionPlan& plan) {
  std::set<std::string> declared;
  for (const auto& l : spec.levels) declared.insert(l.name);

  std::set<std::string> seen;
  for (const auto& block : plan.blocks) {
    if (block.empty()) throw DomainError("plan has an empty block");
    for (const auto& name : block) {
      if (!declared.count(name)) throw DomainError("unknown variable in plan: " + name);
      if (!seen.insert(name).second) throw DomainError("duplicate variable in plan: " + name);
    }
  }
  for (const auto& name : plan.latent) {
    if (!declared.count(name)) throw DomainError("unknown variable in plan: " + name);
    if (!seen.insert(name).second) throw DomainError("duplicate variable in plan: " + name);
  }
  if (seen.size() != declared.size()) {
    for (const auto& name : declared) {
      if (!seen.count(name)) {
        throw DomainError("variable neither manifest nor latent in plan: " + name);
      }
    }
  }
  return plan;
}

nlohmann::json to_json(const HierarchySpec& spec, const ExpansionPlan* plan) {
  nlohmann::json doc;
  doc["K"] = spec.K;
  doc["levels"] = nlohmann::json::array();
  for (const auto& l : spec.levels) {
    doc["levels"].push_back({{"name", l.name}, {"dist", l.dist}, {"params", l.params}});
  }
  doc["likelihood"] = {{"dist", spec.likelihood.dist}, {"params", spec.likelihood.params}};
  if (plan != nullptr) {
    doc["plan"] = {{"blocks", plan->blocks}, {"latent", plan->latent}};
  }
  return doc;
}

HierarchySpec hierarchy_from_json(const nlohmann::json& doc) {
  HierarchySpec spec;
  try {
    spec.K = doc.at("K").get<int>();
    for (const auto& l : doc.at("levels")) {
      Level level;
      level.name = l.at("name").get<std::string>();
      level.dist = l.at("dist").get<std::string>();
      level.params = l.value("params", nlohmann::json::object());
      spec.levels.push_back(std::move(level));
    }
    spec.likelihood.dist = doc.at("likelihood").at("dist").get<std::string>();
    spec.likelihood.params = doc.at("likelihood").value("params", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed model document: ") + e.what());
  }
  if (spec.K != static_cast<int>(spec.levels.size())) {
    throw DomainError("model document: K does not match the number of levels");
  }
  std::set<std::string> names;
  for (const auto& l : spec.levels) {
    if (!names.insert(l.name).second) throw DomainError("duplicate level name: " + l.name);
  }
  return spec;
}

std::optional<ExpansionPlan> plan_from_json(const nlohmann::json& doc) {
  if (!doc.contains("plan")) return std::nullopt;
  ExpansionPlan plan;
  try {
    const auto& p = doc.at("plan");
    plan.blocks = p.at("blocks").get<std::vector<std::vector<std::string>>>();
    plan.latent = p.value("latent", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed plan document: ") + e.what());
  }
  return plan;
}

ExpansionPlan parse_plan_string(const std::string& text) {
  ExpansionPlan plan;
  std::stringstream ss(text);
  std::string block;
  while (std::getline(ss, block, '|')) {
    std::vector<std::string> names;
    std::stringstream bs(block);
    std::string name;
    while (std::getline(bs, name, ',')) {
      if (!name.empty()) names.push_back(name);
    }
    if (names.empty()) throw DomainError("plan string has an empty block: " + text);
    plan.blocks.push_back(std::move(names));
  }
  if (plan.blocks.empty()) throw DomainError("empty plan string");
  return plan;
}

nlohmann::json to_json(const TermReport& report) {
  nlohmann::json doc;
  doc["blocks"] = report.block_labels;
  nlohmann::json terms = nlohmann::json::array();
  for (std::size_t k = 0; k < report.terms.size(); ++k) {
    nlohmann::json t;
    t["k"] = k;
    t["label"] = k == 0 ? "EVar" : report.block_labels.at(k - 1);
    t["value"] = report.terms[k];
    if (report.diagnostics && k < report.diagnostics->term_se.size()) {
      t["se"] = report.diagnostics->term_se[k];
    }
    terms.push_back(std::move(t));
  }
  doc["terms"] = std::move(terms);
  doc["display"] = report.display_terms();
  doc["total"] = report.total;
  switch (report.method) {
    case Method::closed_form: doc["method"] = "closed_form"; break;
    case Method::monte_carlo: doc["method"] = "monte_carlo"; break;
    case Method::empirical_draws: doc["method"] = "empirical_draws"; break;
  }
  if (!report.model_id.empty()) doc["model"] = report.model_id;
  if (report.diagnostics) {
    const auto& d = *report.diagnostics;
    doc["diagnostics"] = {{"n_outer", d.n_outer}, {"n_inner", d.n_inner},
                          {"seed", d.seed},       {"total_se", d.total_se}};
    if (!d.notes.empty()) doc["diagnostics"]["notes"] = d.notes;
  }
  return doc;
}

}  // namespace varscope
