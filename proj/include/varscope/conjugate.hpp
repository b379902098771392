#pragma once

#include <span>
#include <string>
#include <vector>

#include "varscope/model.hpp"

namespace varscope::conjugate {

// Normal likelihood N(mu, sigma0_sq) with conjugate prior mu ~ N(mu0, tau0_sq).
// tau0_sq = 0 is the point-mass prior and is handled exactly.
struct NormalKnownVarParams {
  double mu0 = 0.0;
  double tau0_sq = 1.0;
  double sigma0_sq = 1.0;
  long n = 0;
};

// Y_i ~ Bin(m_i, p), p ~ Beta(alpha, beta); S = sum y_i over trials_total =
// sum m_i trials. m_next is the future trial count m_{n+1}.
struct BetaBinomialParams {
  double alpha = 1.0;
  double beta = 1.0;
  long successes = 0;
  long trials_total = 0;
  long m_next = 1;
};

// Poisson likelihood with conjugate Gamma prior; s = sum y_i.
struct PoissonConjugateParams {
  double alpha = 1.0;
  double beta = 1.0;
  double s = 0.0;
  long n = 0;
};

// Y_i ~ N(mu, 1/lambda2) with mu | lambda2 ~ N(mu0, 1/(kappa0 lambda2)) and
// precision lambda2 ~ Gamma(alpha0, beta0). Sufficient statistics only.
struct NNGParams {
  double mu0 = 0.0;
  double kappa0 = 1.0;
  double alpha0 = 2.0;
  double beta0 = 1.0;
  long n = 0;
  double ybar = 0.0;
  double sum_sq = 0.0;

  static NNGParams from_data(double mu0, double kappa0, double alpha0, double beta0,
                             std::span<const double> y);

  double kappa_n() const { return kappa0 + static_cast<double>(n); }
  double alpha_n() const { return alpha0 + static_cast<double>(n) / 2.0; }
  double mu_n() const { return (static_cast<double>(n) * ybar + kappa0 * mu0) / kappa_n(); }
  // Grouped as beta0 + (sum y^2 + kappa0 mu0^2 - kappa_n mu_n^2)/2.
  double beta_n() const;
};

// Y_i ~ Bin(N_i, p) with N_i ~ Poisson(lambda), lambda ~ Gamma(a, b).
struct BPGParams {
  double p = 0.5;
  double a = 1.0;
  double b = 1.0;
  double s = 0.0;
  long n = 0;
};

// Y_i ~ N(mu, sigma0_sq), mu ~ N(nu, tau0_sq), nu ~ N(a, b_sq). b_sq = 0 is
// the point-mass hyperprior and collapses the third term exactly.
struct ThreeLevelNormalParams {
  double sigma0_sq = 1.0;
  double tau0_sq = 1.0;
  double a = 0.0;
  double b_sq = 1.0;
  long n = 1;
  double ybar = 0.0;
};

enum class NngOrder { mu_first, lambda_first };
enum class BpgOrder { N_first, lambda_first };

TermReport normal_known_var_decompose(const NormalKnownVarParams& p);
TermReport beta_binomial_decompose(const BetaBinomialParams& p);
TermReport poisson_conjugate_decompose(const PoissonConjugateParams& p);
TermReport nng_decompose(const NNGParams& p, NngOrder order);
// N_first keeps three terms; lambda_first reduces to the two-term
// Poisson-Gamma form with the trailing pair grouped.
TermReport bpg_decompose(const BPGParams& p, BpgOrder order);

struct ThreeLevelNormalResult {
  TermReport report;
  double var_given_mu = 0.0;  // Var(Y_{n+1} | y, mu)
  double var_given_nu = 0.0;  // Var(Y_{n+1} | y, nu)
};
ThreeLevelNormalResult three_level_normal_decompose(const ThreeLevelNormalParams& p);

std::string model_id(const NormalKnownVarParams& p);
std::string model_id(const BetaBinomialParams& p);
std::string model_id(const PoissonConjugateParams& p);
std::string model_id(const NNGParams& p);
std::string model_id(const BPGParams& p);
std::string model_id(const ThreeLevelNormalParams& p);

}  // namespace varscope::conjugate
