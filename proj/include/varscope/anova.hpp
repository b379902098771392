#pragma once

#include <string>
#include <vector>

#include "varscope/anova_params.hpp"
#include "varscope/model.hpp"

namespace varscope::anova {

enum class AnovaOrder { tau_outer, beta_outer };

// Closed-form three-term breakdown. term1 is the fresh-noise variance, term2
// the inner variance over the beta_j level, term3 the outer variance over the
// tau_i level (roles swap under beta_outer). a, b and the posterior moments
// are the Sherman-Morrison quantities of the outer level.
struct AnovaTermBreakdown {
  double term1 = 0.0;
  double term2 = 0.0;
  double term3 = 0.0;
  double total = 0.0;
  double a = 0.0;              // B/s2e + 1/s2tau
  double b = 0.0;              // -1 / (s2e^2 (T/s2e + 1/s2beta))
  double post_var_tau = 0.0;   // Var(tau_i | y)
  double post_cov_tau = 0.0;   // Cov(tau_i, tau_j | y)
};

AnovaTermBreakdown anova_decompose(const AnovaParams& p, AnovaOrder order = AnovaOrder::tau_outer);

// TermReport over plan [tau],[beta] (or swapped); term index 1 is the outer
// variance, matching gaussian_term_decompose on the joint normal.
TermReport to_term_report(const AnovaTermBreakdown& b, AnovaOrder order);

enum class SweepAxis { T, B, sigma_beta_sq, sigma_tau_sq };

struct SweepRow {
  double axis_value = 0.0;
  double term1 = 0.0, term2 = 0.0, term3 = 0.0, total = 0.0;
  double prop1 = 0.0, prop2 = 0.0, prop3 = 0.0;
};

std::vector<SweepRow> anova_sweep(const AnovaParams& p, SweepAxis axis,
                                  const std::vector<double>& grid,
                                  AnovaOrder order = AnovaOrder::tau_outer);

SweepAxis parse_axis(const std::string& name);
std::string axis_name(SweepAxis axis);

}  // namespace varscope::anova
