#include "varscope/conjugate.hpp"

#include <cmath>
#include <cstdio>

#include "varscope/errors.hpp"

namespace varscope::conjugate {

namespace {

std::string fmt(const char* pattern, std::initializer_list<double> vals) {
  std::string out = pattern;
  for (double v : vals) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    const auto pos = out.find("{}");
    out.replace(pos, 2, buf);
  }
  return out;
}

}  // namespace

NNGParams NNGParams::from_data(double mu0, double kappa0, double alpha0, double beta0,
                               std::span<const double> y) {
  NNGParams p;
  p.mu0 = mu0;
  p.kappa0 = kappa0;
  p.alpha0 = alpha0;
  p.beta0 = beta0;
  p.n = static_cast<long>(y.size());
  double sum = 0.0, sum_sq = 0.0;
  for (double v : y) {
    sum += v;
    sum_sq += v * v;
  }
  p.ybar = y.empty() ? 0.0 : sum / static_cast<double>(y.size());
  p.sum_sq = sum_sq;
  return p;
}

double NNGParams::beta_n() const {
  return beta0 + 0.5 * (sum_sq + kappa0 * mu0 * mu0 - kappa_n() * mu_n() * mu_n());
}

TermReport normal_known_var_decompose(const NormalKnownVarParams& p) {
  if (p.sigma0_sq <= 0.0) throw DomainError("normal-known-var: sigma0_sq must be > 0");
  if (p.tau0_sq < 0.0) throw DomainError("normal-known-var: tau0_sq must be >= 0");
  if (p.n < 0) throw DomainError("normal-known-var: n must be >= 0");

  const double nn = static_cast<double>(p.n);
  const double evar = p.sigma0_sq;
  const double vare = p.sigma0_sq * p.tau0_sq / (p.sigma0_sq + nn * p.tau0_sq);

  TermReport r;
  r.block_labels = {"mu"};
  r.terms = {evar, vare};
  r.total = p.sigma0_sq + p.sigma0_sq * p.tau0_sq / (p.sigma0_sq + nn * p.tau0_sq);
  r.method = Method::closed_form;
  r.model_id = model_id(p);
  return r;
}

TermReport beta_binomial_decompose(const BetaBinomialParams& p) {
  if (p.alpha <= 0.0 || p.beta <= 0.0) throw DomainError("beta-binomial: alpha, beta must be > 0");
  if (p.successes < 0 || p.m_next < 0) throw DomainError("beta-binomial: counts must be >= 0");
  if (p.successes > p.trials_total) {
    throw DomainError("beta-binomial: successes exceed trials_total");
  }

  const double an = p.alpha + static_cast<double>(p.successes);
  const double bn = p.beta + static_cast<double>(p.trials_total - p.successes);
  const double m = static_cast<double>(p.m_next);
  const double ab = an + bn;

  // E[m p(1-p) | y]; the (an+bn) factor in the denominator is required for
  // the two terms to sum to the Beta-Binomial variance.
  const double evar = m * an * bn / (ab * (ab + 1.0));
  const double vare = m * m * an * bn / (ab * ab * (ab + 1.0));

  TermReport r;
  r.block_labels = {"p"};
  r.terms = {evar, vare};
  r.total = m * (an * bn / (ab * ab)) * ((ab + m) / (ab + 1.0));
  r.method = Method::closed_form;
  r.model_id = model_id(p);
  return r;
}

TermReport poisson_conjugate_decompose(const PoissonConjugateParams& p) {
  if (p.alpha <= 0.0 || p.beta <= 0.0) throw DomainError("poisson-gamma: alpha, beta must be > 0");
  if (p.s < 0.0 || p.n < 0) throw DomainError("poisson-gamma: s and n must be >= 0");
  const double denom = p.beta + static_cast<double>(p.n);
  if (denom == 0.0) throw DomainError("poisson-gamma: beta + n must be > 0");

  const double lead = (p.alpha + p.s) / denom;

  TermReport r;
  r.block_labels = {"lambda"};
  r.terms = {lead, lead / denom};
  r.total = lead * (1.0 + 1.0 / denom);
  r.method = Method::closed_form;
  r.model_id = model_id(p);
  return r;
}

TermReport nng_decompose(const NNGParams& p, NngOrder order) {
  if (p.kappa0 <= 0.0) throw DomainError("nng: kappa0 must be > 0");
  if (p.alpha0 <= 0.0 || p.beta0 <= 0.0) throw DomainError("nng: alpha0, beta0 must be > 0");
  if (p.n < 0) throw DomainError("nng: n must be >= 0");
  const double an = p.alpha_n();
  if (an <= 1.0) throw DomainError("nng: alpha_n <= 1, mean of 1/lambda2 undefined");
  const double bn = p.beta_n();
  if (bn <= 0.0) throw DomainError("nng: beta_n must be > 0");
  const double kn = p.kappa_n();

  const double lead = bn / (an - 1.0);     // E[1/lambda2 | y]
  const double mu_term = lead / kn;        // E[1/(kappa_n lambda2) | y] = Var(mu | y)

  TermReport r;
  r.method = Method::closed_form;
  r.model_id = model_id(p);
  r.total = (kn + 1.0) / kn * lead;
  if (order == NngOrder::mu_first) {
    // Conditioning sequence (lambda2, mu): the outer VarEE term over lambda2
    // vanishes because E(Y_{n+1} | y, lambda2) = mu_n.
    r.block_labels = {"lambda2", "mu"};
    r.terms = {lead, 0.0, mu_term};
  } else {
    // Conditioning sequence (mu, lambda2): the middle EVarE term over lambda2
    // vanishes and Var(mu | y) moves to the outer slot.
    r.block_labels = {"mu", "lambda2"};
    r.terms = {lead, mu_term, 0.0};
  }
  return r;
}

TermReport bpg_decompose(const BPGParams& p, BpgOrder order) {
  if (p.p < 0.0 || p.p > 1.0) throw DomainError("bpg: p must lie in [0,1]");
  if (p.a <= 0.0 || p.b <= 0.0) throw DomainError("bpg: a, b must be > 0");
  if (p.s < 0.0 || p.n < 0) throw DomainError("bpg: s and n must be >= 0");

  const double denom = p.b + p.p * static_cast<double>(p.n);
  const double rate = (p.s + p.a) / denom;  // E[lambda | y]

  const double binom_term = p.p * (1.0 - p.p) * rate;
  const double poisson_term = p.p * p.p * rate;
  const double gamma_term = p.p * p.p * rate / denom;

  TermReport r;
  r.method = Method::closed_form;
  r.model_id = model_id(p);
  r.total = p.p * rate * (1.0 + p.p / denom);
  if (order == BpgOrder::N_first) {
    r.block_labels = {"lambda", "N"};
    r.terms = {binom_term, gamma_term, poisson_term};
  } else {
    // Integrating the N's out leaves the Poisson-Gamma two-term expansion;
    // the Poisson and Gamma pieces merge into Var(E(Y | y, N)).
    r.block_labels = {"N"};
    r.terms = {binom_term, poisson_term + gamma_term};
  }
  return r;
}

ThreeLevelNormalResult three_level_normal_decompose(const ThreeLevelNormalParams& p) {
  if (p.sigma0_sq <= 0.0 || p.tau0_sq <= 0.0) {
    throw DomainError("normal-3level: sigma0_sq and tau0_sq must be > 0");
  }
  if (p.b_sq < 0.0) throw DomainError("normal-3level: b_sq must be >= 0");
  if (p.n < 1) throw DomainError("normal-3level: n must be >= 1");

  const double nn = static_cast<double>(p.n);
  const double q = 1.0 / (nn / p.sigma0_sq + 1.0 / p.tau0_sq);
  double nu_term = 0.0;
  if (p.b_sq > 0.0) {
    const double shrink = 1.0 / p.b_sq + 1.0 / (p.tau0_sq + p.sigma0_sq / nn);
    nu_term = q * q / (p.tau0_sq * p.tau0_sq * shrink);
  }

  ThreeLevelNormalResult out;
  out.report.block_labels = {"nu", "mu"};
  out.report.terms = {p.sigma0_sq, nu_term, q};
  out.report.total = p.sigma0_sq + 1.0 / (nn / p.sigma0_sq + 1.0 / (p.tau0_sq + p.b_sq));
  out.report.method = Method::closed_form;
  out.report.model_id = model_id(p);
  out.var_given_mu = p.sigma0_sq;
  out.var_given_nu = p.sigma0_sq + q;
  return out;
}

std::string model_id(const NormalKnownVarParams& p) {
  return fmt("normal-known-var(mu0={},t2={},s2e={},n={})",
             {p.mu0, p.tau0_sq, p.sigma0_sq, static_cast<double>(p.n)});
}
std::string model_id(const BetaBinomialParams& p) {
  return fmt("beta-binomial(a={},b={},S={},M={},m={})",
             {p.alpha, p.beta, static_cast<double>(p.successes),
              static_cast<double>(p.trials_total), static_cast<double>(p.m_next)});
}
std::string model_id(const PoissonConjugateParams& p) {
  return fmt("poisson-gamma(a={},b={},s={},n={})", {p.alpha, p.beta, p.s, static_cast<double>(p.n)});
}
std::string model_id(const NNGParams& p) {
  return fmt("nng(mu0={},k0={},a0={},b0={},n={},ybar={},ss={})",
             {p.mu0, p.kappa0, p.alpha0, p.beta0, static_cast<double>(p.n), p.ybar, p.sum_sq});
}
std::string model_id(const BPGParams& p) {
  return fmt("bpg(p={},a={},b={},s={},n={})", {p.p, p.a, p.b, p.s, static_cast<double>(p.n)});
}
std::string model_id(const ThreeLevelNormalParams& p) {
  return fmt("normal-3level(s02={},t02={},a={},b2={},n={})",
             {p.sigma0_sq, p.tau0_sq, p.a, p.b_sq, static_cast<double>(p.n)});
}

}  // namespace varscope::conjugate
