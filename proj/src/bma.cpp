#include "varscope/bma.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <sstream>

#include "varscope/errors.hpp"

namespace varscope::bma {

TermReport bma_two_term(const ModelWeightTable& tbl) {
  if (tbl.entries.empty()) throw DomainError("bma_two_term: empty table");
  double wsum = 0.0;
  for (const auto& e : tbl.entries) {
    if (e.weight < 0.0) throw DomainError("bma_two_term: negative weight");
    if (e.pred_var < 0.0) throw DomainError("bma_two_term: negative predictive variance");
    wsum += e.weight;
  }
  if (std::fabs(wsum - 1.0) > 1e-9) {
    throw DomainError("bma_two_term: weights sum to " + std::to_string(wsum) + ", expected 1");
  }

  double within = 0.0, mean = 0.0;
  for (const auto& e : tbl.entries) {
    within += e.weight * e.pred_var;
    mean += e.weight * e.pred_mean;
  }
  double between = 0.0;
  for (const auto& e : tbl.entries) {
    const double d = e.pred_mean - mean;
    between += e.weight * d * d;
  }

  TermReport r;
  r.block_labels = {"model"};
  r.terms = {within, between};
  r.total = within + between;
  r.method = Method::empirical_draws;
  r.model_id = "bma";
  return r;
}

TermReport decompose_labeled_draws(const LabeledDraws& draws, DrawOrder order) {
  if (draws.rows.empty()) throw DomainError("decompose_labeled_draws: no rows");

  struct Acc {
    double w = 0.0, mean = 0.0, m2 = 0.0, var = 0.0;
    void add(double weight, double x, double v) {
      w += weight;
      mean += weight * x;
      m2 += weight * x * x;
      var += weight * v;
    }
  };

  const auto outer_of = [&](const LabeledRow& r) { return order == DrawOrder::v1_then_v2 ? r.v1 : r.v2; };
  const auto inner_of = [&](const LabeledRow& r) { return order == DrawOrder::v1_then_v2 ? r.v2 : r.v1; };

  std::map<std::string, Acc> outer;
  std::map<std::pair<std::string, std::string>, Acc> cells;
  Acc all;
  for (const auto& r : draws.rows) {
    if (r.pred_var < 0.0) throw DomainError("decompose_labeled_draws: negative predictive variance");
    if (r.weight <= 0.0) throw DomainError("decompose_labeled_draws: weights must be positive");
    outer[outer_of(r)].add(r.weight, r.pred_mean, r.pred_var);
    cells[{outer_of(r), inner_of(r)}].add(r.weight, r.pred_mean, r.pred_var);
    all.add(r.weight, r.pred_mean, r.pred_var);
  }
  const double w_total = all.w;

  // Population moments per cell / outer label / overall.
  const auto mean_of = [](const Acc& a) { return a.mean / a.w; };
  const auto var_of = [&](const Acc& a) {
    const double m = mean_of(a);
    return std::max(0.0, a.m2 / a.w - m * m);
  };

  // term 0: mean pred_var plus the draw-level spread of pred_mean inside each
  // (outer, inner) cell.
  double term0 = all.var / w_total;
  for (const auto& [key, acc] : cells) term0 += acc.w / w_total * var_of(acc);

  // middle term: E over outer labels of the variance across inner labels of
  // the cell-conditional mean of pred_mean.
  double middle = 0.0;
  for (const auto& [name, oacc] : outer) {
    const double om = mean_of(oacc);
    double v = 0.0;
    for (const auto& [key, acc] : cells) {
      if (key.first != name) continue;
      const double d = mean_of(acc) - om;
      v += acc.w / oacc.w * d * d;
    }
    middle += oacc.w / w_total * v;
  }

  // last term: variance across outer labels of the outer-conditional mean.
  const double grand_mean = mean_of(all);
  double last = 0.0;
  for (const auto& [name, oacc] : outer) {
    const double d = mean_of(oacc) - grand_mean;
    last += oacc.w / w_total * d * d;
  }

  TermReport r;
  r.block_labels = order == DrawOrder::v1_then_v2 ? std::vector<std::string>{"v1", "v2"}
                                                  : std::vector<std::string>{"v2", "v1"};
  r.terms = {term0, last, middle};  // k=1 acts on the outer label block
  r.total = all.var / w_total + var_of(all);
  r.method = Method::empirical_draws;
  r.model_id = "labeled-draws";
  if (outer.size() == 1) {
    TermDiagnostics diag;
    diag.notes.push_back("single outer label: outer-variance term is zero");
    r.diagnostics = std::move(diag);
  }
  return r;
}

LabeledDraws labeled_draws_from_csv(std::istream& in) {
  LabeledDraws out;
  std::string line;
  if (!std::getline(in, line)) throw DomainError("labeled draws csv: empty file");

  std::vector<std::string> header;
  {
    std::stringstream hs(line);
    std::string col;
    while (std::getline(hs, col, ',')) header.push_back(col);
  }
  if (header.size() < 4 || header[0] != "v1_label" || header[1] != "v2_label" ||
      header[2] != "pred_mean" || header[3] != "pred_var") {
    throw DomainError("labeled draws csv: expected header v1_label,v2_label,pred_mean,pred_var");
  }
  int weight_col = -1;
  for (std::size_t i = 4; i < header.size(); ++i) {
    if (header[i] == "weight") weight_col = static_cast<int>(i);
    // y_draw is accepted and ignored; no operation consumes it.
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> fields;
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() < 4) {
      throw DomainError("labeled draws csv: bad row at line " + std::to_string(line_no));
    }
    LabeledRow row;
    try {
      row.v1 = fields[0];
      row.v2 = fields[1];
      row.pred_mean = std::stod(fields[2]);
      row.pred_var = std::stod(fields[3]);
      if (weight_col >= 0 && static_cast<std::size_t>(weight_col) < fields.size()) {
        row.weight = std::stod(fields[static_cast<std::size_t>(weight_col)]);
      }
    } catch (const std::exception&) {
      throw DomainError("labeled draws csv: bad row at line " + std::to_string(line_no));
    }
    out.rows.push_back(std::move(row));
  }
  if (out.rows.empty()) throw DomainError("labeled draws csv: no data rows");
  return out;
}

}  // namespace varscope::bma
