#pragma once

namespace varscope::anova {

// Two-way random coefficient model Y_ij = tau_i + beta_j + eps_ij with
// independent N(tau0, s2_tau), N(beta0, s2_beta), N(0, s2_eps) draws.
// Location hyperparameters do not enter the variance terms.
struct AnovaParams {
  long T = 1;
  long B = 1;
  double sigma_eps_sq = 1.0;
  double sigma_tau_sq = 1.0;
  double sigma_beta_sq = 1.0;
};

}  // namespace varscope::anova
