#include "varscope/anova.hpp"

#include <cmath>

#include "varscope/errors.hpp"

namespace varscope::anova {

namespace {

void validate(const AnovaParams& p) {
  if (p.T < 1 || p.B < 1) throw DomainError("anova: T and B must be >= 1");
  if (p.sigma_eps_sq <= 0.0 || p.sigma_tau_sq <= 0.0 || p.sigma_beta_sq <= 0.0) {
    throw DomainError("anova: variance components must be > 0");
  }
}

AnovaParams swapped(const AnovaParams& p) {
  AnovaParams q = p;
  std::swap(q.T, q.B);
  std::swap(q.sigma_tau_sq, q.sigma_beta_sq);
  return q;
}

}  // namespace

AnovaTermBreakdown anova_decompose(const AnovaParams& p, AnovaOrder order) {
  validate(p);
  if (order == AnovaOrder::beta_outer) {
    // Interchanging the tau's and beta's swaps (T, s2tau) with (B, s2beta).
    auto out = anova_decompose(swapped(p), AnovaOrder::tau_outer);
    return out;
  }

  const double T = static_cast<double>(p.T);
  const double B = static_cast<double>(p.B);
  const double s2e = p.sigma_eps_sq;

  const double d = T / s2e + 1.0 / p.sigma_beta_sq;
  const double a = B / s2e + 1.0 / p.sigma_tau_sq;
  const double b = -1.0 / (s2e * s2e * d);
  const double denom = a + B * b * T;  // strictly positive for valid params

  AnovaTermBreakdown out;
  out.a = a;
  out.b = b;
  out.post_var_tau = (1.0 / a) * (1.0 - B * b / denom);
  out.post_cov_tau = -B * b / (a * denom);

  out.term1 = s2e;
  out.term2 = 1.0 / d;

  // Var_tau(E_beta E(Y_11 | y, tau, beta)) = Var of a linear combination of
  // the tau's: coefficient 1 - 1/(s2e d) on tau_1 and -1/(s2e d) on each of
  // the other T-1. Grouped through (V - C) and C to control cancellation.
  const double e = 1.0 / (s2e * d);
  const double sum_sq = (1.0 - e) * (1.0 - e) + (T - 1.0) * e * e;
  const double sum_coef = 1.0 - T * e;
  out.term3 = (out.post_var_tau - out.post_cov_tau) * sum_sq +
              out.post_cov_tau * sum_coef * sum_coef;

  out.total = out.term1 + out.term2 + out.term3;
  return out;
}

TermReport to_term_report(const AnovaTermBreakdown& b, AnovaOrder order) {
  TermReport r;
  const bool tau = order == AnovaOrder::tau_outer;
  r.block_labels = tau ? std::vector<std::string>{"tau", "beta"}
                       : std::vector<std::string>{"beta", "tau"};
  r.terms = {b.term1, b.term3, b.term2};
  r.total = b.total;
  r.method = Method::closed_form;
  r.model_id = "anova";
  return r;
}

std::vector<SweepRow> anova_sweep(const AnovaParams& p, SweepAxis axis,
                                  const std::vector<double>& grid, AnovaOrder order) {
  if (grid.empty()) throw DomainError("anova_sweep: empty grid");
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (double v : grid) {
    AnovaParams q = p;
    switch (axis) {
      case SweepAxis::T:
        if (v < 1.0 || v != std::floor(v)) throw DomainError("anova_sweep: T grid must be integer >= 1");
        q.T = static_cast<long>(v);
        break;
      case SweepAxis::B:
        if (v < 1.0 || v != std::floor(v)) throw DomainError("anova_sweep: B grid must be integer >= 1");
        q.B = static_cast<long>(v);
        break;
      case SweepAxis::sigma_beta_sq:
        q.sigma_beta_sq = v;
        break;
      case SweepAxis::sigma_tau_sq:
        q.sigma_tau_sq = v;
        break;
    }
    const auto t = anova_decompose(q, order);
    SweepRow row;
    row.axis_value = v;
    row.term1 = t.term1;
    row.term2 = t.term2;
    row.term3 = t.term3;
    row.total = t.total;
    row.prop1 = t.term1 / t.total;
    row.prop2 = t.term2 / t.total;
    row.prop3 = t.term3 / t.total;
    rows.push_back(row);
  }
  return rows;
}

SweepAxis parse_axis(const std::string& name) {
  if (name == "T") return SweepAxis::T;
  if (name == "B") return SweepAxis::B;
  if (name == "s2b" || name == "sigma_beta_sq") return SweepAxis::sigma_beta_sq;
  if (name == "s2t" || name == "sigma_tau_sq") return SweepAxis::sigma_tau_sq;
  throw DomainError("anova_sweep: unknown axis " + name);
}

std::string axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::T: return "T";
    case SweepAxis::B: return "B";
    case SweepAxis::sigma_beta_sq: return "s2b";
    case SweepAxis::sigma_tau_sq: return "s2t";
  }
  return "?";
}

}  // namespace varscope::anova
