#include "varscope/adapters.hpp"

#include <cmath>

#include "varscope/errors.hpp"

namespace varscope::mc {

namespace {

using conjugate::BPGParams;
using conjugate::BetaBinomialParams;
using conjugate::NNGParams;
using conjugate::NormalKnownVarParams;
using conjugate::PoissonConjugateParams;

std::string joined_labels(const ExpansionPlan& plan) {
  std::string out;
  for (const auto& b : plan.blocks) {
    std::string blk;
    for (const auto& n : b) blk += (blk.empty() ? "" : ",") + n;
    out += (out.empty() ? "" : "|") + blk;
  }
  return out;
}

class NormalKnownVarAdapter final : public ModelAdapter {
 public:
  explicit NormalKnownVarAdapter(const NormalKnownVarParams& p) : p_(p) {
    const double nn = static_cast<double>(p.n);
    post_var_ = p.sigma0_sq * p.tau0_sq / (p.sigma0_sq + nn * p.tau0_sq);
    const double prec = p.tau0_sq > 0.0 ? 1.0 / p.tau0_sq : 0.0;
    post_mean_ = p.tau0_sq > 0.0
                     ? post_var_ * (nn * data_mean_ / p.sigma0_sq + p.mu0 * prec)
                     : p.mu0;
  }
  std::size_t block_count() const override { return 1; }
  std::vector<std::string> block_labels() const override { return {"mu"}; }
  BlockValue sample_block(std::size_t, std::span<const BlockValue>, RngStream& rng) const override {
    return {rng.normal(post_mean_, std::sqrt(post_var_))};
  }
  double predictive_mean(std::span<const BlockValue> v) const override { return v[0][0]; }
  double predictive_var(std::span<const BlockValue>) const override { return p_.sigma0_sq; }
  std::string model_id() const override { return conjugate::model_id(p_); }

 private:
  NormalKnownVarParams p_;
  double data_mean_ = 0.0;  // ybar enters only the posterior mean; zero by convention
  double post_mean_ = 0.0;
  double post_var_ = 0.0;
};

class PoissonGammaAdapter final : public ModelAdapter {
 public:
  explicit PoissonGammaAdapter(const PoissonConjugateParams& p) : p_(p) {}
  std::size_t block_count() const override { return 1; }
  std::vector<std::string> block_labels() const override { return {"lambda"}; }
  BlockValue sample_block(std::size_t, std::span<const BlockValue>, RngStream& rng) const override {
    return {rng.gamma(p_.alpha + p_.s, p_.beta + static_cast<double>(p_.n))};
  }
  double predictive_mean(std::span<const BlockValue> v) const override { return v[0][0]; }
  double predictive_var(std::span<const BlockValue> v) const override { return v[0][0]; }
  std::string model_id() const override { return conjugate::model_id(p_); }

 private:
  PoissonConjugateParams p_;
};

class BetaBinomialAdapter final : public ModelAdapter {
 public:
  explicit BetaBinomialAdapter(const BetaBinomialParams& p) : p_(p) {}
  std::size_t block_count() const override { return 1; }
  std::vector<std::string> block_labels() const override { return {"p"}; }
  BlockValue sample_block(std::size_t, std::span<const BlockValue>, RngStream& rng) const override {
    const double an = p_.alpha + static_cast<double>(p_.successes);
    const double bn = p_.beta + static_cast<double>(p_.trials_total - p_.successes);
    return {rng.beta(an, bn)};
  }
  double predictive_mean(std::span<const BlockValue> v) const override {
    return static_cast<double>(p_.m_next) * v[0][0];
  }
  double predictive_var(std::span<const BlockValue> v) const override {
    return static_cast<double>(p_.m_next) * v[0][0] * (1.0 - v[0][0]);
  }
  std::string model_id() const override { return conjugate::model_id(p_); }

 private:
  BetaBinomialParams p_;
};

// Blocks over (mu, lambda2) in any of the three supported layouts. lambda2 is
// the precision of the observation noise.
class NngAdapter final : public ModelAdapter {
 public:
  enum class Layout { mu_then_lambda, lambda_then_mu, joint };

  NngAdapter(const NNGParams& p, Layout layout) : p_(p), layout_(layout) {
    an_ = p.alpha_n();
    bn_ = p.beta_n();
    kn_ = p.kappa_n();
    mun_ = p.mu_n();
    if (an_ <= 1.0) throw DomainError("nng adapter: alpha_n <= 1");
  }
  std::size_t block_count() const override { return layout_ == Layout::joint ? 1 : 2; }
  std::vector<std::string> block_labels() const override {
    switch (layout_) {
      case Layout::mu_then_lambda: return {"mu", "lambda2"};
      case Layout::lambda_then_mu: return {"lambda2", "mu"};
      case Layout::joint: return {"mu,lambda2"};
    }
    return {};
  }
  BlockValue sample_block(std::size_t k, std::span<const BlockValue> prefix,
                          RngStream& rng) const override {
    switch (layout_) {
      case Layout::joint: {
        const double g = rng.gamma(an_, bn_);
        return {rng.normal(mun_, 1.0 / std::sqrt(kn_ * g)), g};
      }
      case Layout::lambda_then_mu:
        if (k == 1) return {rng.gamma(an_, bn_)};
        return {rng.normal(mun_, 1.0 / std::sqrt(kn_ * prefix[0][0]))};
      case Layout::mu_then_lambda:
        if (k == 1) {
          // Marginal posterior of mu by compounding through an auxiliary
          // precision draw.
          const double g = rng.gamma(an_, bn_);
          return {rng.normal(mun_, 1.0 / std::sqrt(kn_ * g))};
        } else {
          const double mu = prefix[0][0];
          const double dev = mu - mun_;
          return {rng.gamma(an_ + 0.5, bn_ + 0.5 * kn_ * dev * dev)};
        }
    }
    return {};
  }
  double predictive_mean(std::span<const BlockValue> v) const override { return mu_of(v); }
  double predictive_var(std::span<const BlockValue> v) const override {
    return 1.0 / lambda_of(v);
  }
  std::string model_id() const override { return conjugate::model_id(p_); }

 private:
  double mu_of(std::span<const BlockValue> v) const {
    switch (layout_) {
      case Layout::joint: return v[0][0];
      case Layout::lambda_then_mu: return v[1][0];
      case Layout::mu_then_lambda: return v[0][0];
    }
    return 0.0;
  }
  double lambda_of(std::span<const BlockValue> v) const {
    switch (layout_) {
      case Layout::joint: return v[0][1];
      case Layout::lambda_then_mu: return v[0][0];
      case Layout::mu_then_lambda: return v[1][0];
    }
    return 1.0;
  }

  NNGParams p_;
  Layout layout_;
  double an_ = 0.0, bn_ = 0.0, kn_ = 0.0, mun_ = 0.0;
};

// Blocks over (nu, mu) for the three-level normal chain. All conditionals
// are normal with the precisions from the closed-form module.
class ThreeLevelNormalAdapter final : public ModelAdapter {
 public:
  enum class Layout { nu_then_mu, mu_only, nu_only };

  ThreeLevelNormalAdapter(const conjugate::ThreeLevelNormalParams& p, Layout layout)
      : p_(p), layout_(layout) {
    const double nn = static_cast<double>(p.n);
    mu_given_data_var_ = 1.0 / (nn / p.sigma0_sq + 1.0 / (p.tau0_sq + p.b_sq));
    mu_given_data_mean_ = mu_given_data_var_ *
                          (nn * p.ybar / p.sigma0_sq + p.a / (p.tau0_sq + p.b_sq));
    nu_var_ = 1.0 / (1.0 / p.b_sq + 1.0 / (p.tau0_sq + p.sigma0_sq / nn));
    nu_mean_ = nu_var_ * (p.a / p.b_sq + p.ybar / (p.tau0_sq + p.sigma0_sq / nn));
    mu_given_nu_prec_ = nn / p.sigma0_sq + 1.0 / p.tau0_sq;
  }
  std::size_t block_count() const override { return layout_ == Layout::nu_then_mu ? 2 : 1; }
  std::vector<std::string> block_labels() const override {
    switch (layout_) {
      case Layout::nu_then_mu: return {"nu", "mu"};
      case Layout::mu_only: return {"mu"};
      case Layout::nu_only: return {"nu"};
    }
    return {};
  }
  BlockValue sample_block(std::size_t k, std::span<const BlockValue> prefix,
                          RngStream& rng) const override {
    const double nn = static_cast<double>(p_.n);
    switch (layout_) {
      case Layout::mu_only:
        return {rng.normal(mu_given_data_mean_, std::sqrt(mu_given_data_var_))};
      case Layout::nu_only:
        return {rng.normal(nu_mean_, std::sqrt(nu_var_))};
      case Layout::nu_then_mu:
        if (k == 1) return {rng.normal(nu_mean_, std::sqrt(nu_var_))};
        return {rng.normal((nn * p_.ybar / p_.sigma0_sq + prefix[0][0] / p_.tau0_sq) /
                               mu_given_nu_prec_,
                           std::sqrt(1.0 / mu_given_nu_prec_))};
    }
    return {};
  }
  double predictive_mean(std::span<const BlockValue> v) const override {
    if (layout_ == Layout::nu_only) {
      const double nn = static_cast<double>(p_.n);
      return (nn * p_.ybar / p_.sigma0_sq + v[0][0] / p_.tau0_sq) / mu_given_nu_prec_;
    }
    return layout_ == Layout::nu_then_mu ? v[1][0] : v[0][0];
  }
  double predictive_var(std::span<const BlockValue>) const override {
    if (layout_ == Layout::nu_only) return p_.sigma0_sq + 1.0 / mu_given_nu_prec_;
    return p_.sigma0_sq;
  }
  std::string model_id() const override { return conjugate::model_id(p_); }

 private:
  conjugate::ThreeLevelNormalParams p_;
  Layout layout_;
  double mu_given_data_mean_ = 0.0, mu_given_data_var_ = 1.0;
  double nu_mean_ = 0.0, nu_var_ = 1.0;
  double mu_given_nu_prec_ = 1.0;
};

// Blocks over (N_{n+1}, lambda). Marginalizing the latent counts of the
// observed rows thins the Poisson rate to p*lambda, so lambda | y is
// Gamma(a+s, b+pn) and lambda | y, N adds the future count as one more
// Poisson observation.
class BpgAdapter final : public ModelAdapter {
 public:
  enum class Layout { N_then_lambda, lambda_then_N, joint, N_only, lambda_only };

  BpgAdapter(const BPGParams& p, Layout layout) : p_(p), layout_(layout) {
    shape_ = p.a + p.s;
    rate_ = p.b + p.p * static_cast<double>(p.n);
  }
  std::size_t block_count() const override {
    return layout_ == Layout::N_then_lambda || layout_ == Layout::lambda_then_N ? 2 : 1;
  }
  std::vector<std::string> block_labels() const override {
    switch (layout_) {
      case Layout::N_then_lambda: return {"N", "lambda"};
      case Layout::lambda_then_N: return {"lambda", "N"};
      case Layout::joint: return {"N,lambda"};
      case Layout::N_only: return {"N"};
      case Layout::lambda_only: return {"lambda"};
    }
    return {};
  }
  BlockValue sample_block(std::size_t k, std::span<const BlockValue> prefix,
                          RngStream& rng) const override {
    switch (layout_) {
      case Layout::joint: {
        const double lam = rng.gamma(shape_, rate_);
        return {static_cast<double>(rng.poisson(lam)), lam};
      }
      case Layout::lambda_then_N:
        if (k == 1) return {rng.gamma(shape_, rate_)};
        return {static_cast<double>(rng.poisson(prefix[0][0]))};
      case Layout::N_then_lambda:
        if (k == 1) return {draw_marginal_count(rng)};
        return {rng.gamma(shape_ + prefix[0][0], rate_ + 1.0)};
      case Layout::N_only:
        return {draw_marginal_count(rng)};
      case Layout::lambda_only:
        return {rng.gamma(shape_, rate_)};
    }
    return {};
  }
  double predictive_mean(std::span<const BlockValue> v) const override {
    if (layout_ == Layout::lambda_only) return p_.p * v[0][0];  // E[pN | lambda] = p lambda
    return p_.p * count_of(v);
  }
  double predictive_var(std::span<const BlockValue> v) const override {
    if (layout_ == Layout::lambda_only) return p_.p * v[0][0];  // Poisson(p lambda) thinning
    return count_of(v) * p_.p * (1.0 - p_.p);
  }
  std::string model_id() const override { return conjugate::model_id(p_); }

 private:
  double draw_marginal_count(RngStream& rng) const {
    // Negative-binomial marginal via a compounding draw.
    const double lam = rng.gamma(shape_, rate_);
    return static_cast<double>(rng.poisson(lam));
  }
  double count_of(std::span<const BlockValue> v) const {
    switch (layout_) {
      case Layout::joint: return v[0][0];
      case Layout::lambda_then_N: return v[1][0];
      default: return v[0][0];
    }
  }

  BPGParams p_;
  Layout layout_;
  double shape_ = 0.0, rate_ = 0.0;
};

}  // namespace

std::unique_ptr<ModelAdapter> make_normal_known_var_adapter(const NormalKnownVarParams& p) {
  return std::make_unique<NormalKnownVarAdapter>(p);
}

std::unique_ptr<ModelAdapter> make_poisson_gamma_adapter(const PoissonConjugateParams& p) {
  return std::make_unique<PoissonGammaAdapter>(p);
}

std::unique_ptr<ModelAdapter> make_beta_binomial_adapter(const BetaBinomialParams& p) {
  return std::make_unique<BetaBinomialAdapter>(p);
}

std::unique_ptr<ModelAdapter> make_nng_adapter(const NNGParams& p, const ExpansionPlan& plan) {
  const std::string sig = joined_labels(plan);
  if (sig == "mu|lambda2") return std::make_unique<NngAdapter>(p, NngAdapter::Layout::mu_then_lambda);
  if (sig == "lambda2|mu") return std::make_unique<NngAdapter>(p, NngAdapter::Layout::lambda_then_mu);
  if (sig == "mu,lambda2") return std::make_unique<NngAdapter>(p, NngAdapter::Layout::joint);
  throw DomainError("nng adapter: unsupported plan '" + sig + "'");
}

std::unique_ptr<ModelAdapter> make_three_level_normal_adapter(
    const conjugate::ThreeLevelNormalParams& p, const ExpansionPlan& plan) {
  if (p.b_sq <= 0.0) throw DomainError("normal-3level adapter: b_sq must be > 0");
  const std::string sig = joined_labels(plan);
  if (sig == "nu|mu") {
    return std::make_unique<ThreeLevelNormalAdapter>(p, ThreeLevelNormalAdapter::Layout::nu_then_mu);
  }
  if (sig == "mu") {
    return std::make_unique<ThreeLevelNormalAdapter>(p, ThreeLevelNormalAdapter::Layout::mu_only);
  }
  if (sig == "nu") {
    return std::make_unique<ThreeLevelNormalAdapter>(p, ThreeLevelNormalAdapter::Layout::nu_only);
  }
  throw DomainError("normal-3level adapter: unsupported plan '" + sig + "'");
}

std::unique_ptr<ModelAdapter> make_bpg_adapter(const BPGParams& p, const ExpansionPlan& plan) {
  const std::string sig = joined_labels(plan);
  if (sig == "N|lambda") return std::make_unique<BpgAdapter>(p, BpgAdapter::Layout::N_then_lambda);
  if (sig == "lambda|N") return std::make_unique<BpgAdapter>(p, BpgAdapter::Layout::lambda_then_N);
  if (sig == "N,lambda") return std::make_unique<BpgAdapter>(p, BpgAdapter::Layout::joint);
  if (sig == "N") return std::make_unique<BpgAdapter>(p, BpgAdapter::Layout::N_only);
  if (sig == "lambda") return std::make_unique<BpgAdapter>(p, BpgAdapter::Layout::lambda_only);
  throw DomainError("bpg adapter: unsupported plan '" + sig + "'");
}

std::unique_ptr<ModelAdapter> make_adapter(const HierarchySpec& spec, const ExpansionPlan& plan) {
  const auto& lk = spec.likelihood;
  const auto num = [](const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw DomainError(std::string("model document: missing param ") + key);
    return j.at(key).get<double>();
  };
  const auto num_or = [](const nlohmann::json& j, const char* key, double fallback) {
    return j.contains(key) ? j.at(key).get<double>() : fallback;
  };

  if (lk.dist == "normal-known-var") {
    if (spec.K != 1) throw DomainError("normal-known-var expects one level");
    NormalKnownVarParams p;
    p.sigma0_sq = num(lk.params, "sigma0_sq");
    p.n = static_cast<long>(num(lk.params, "n"));
    p.mu0 = num_or(spec.levels[0].params, "mu0", 0.0);
    p.tau0_sq = num(spec.levels[0].params, "tau0_sq");
    return make_normal_known_var_adapter(p);
  }
  if (lk.dist == "poisson") {
    PoissonConjugateParams p;
    p.alpha = num(spec.levels[0].params, "alpha");
    p.beta = num(spec.levels[0].params, "beta");
    p.s = num(lk.params, "s");
    p.n = static_cast<long>(num(lk.params, "n"));
    return make_poisson_gamma_adapter(p);
  }
  if (lk.dist == "binomial") {
    BetaBinomialParams p;
    p.alpha = num(spec.levels[0].params, "alpha");
    p.beta = num(spec.levels[0].params, "beta");
    p.successes = static_cast<long>(num(lk.params, "S"));
    p.trials_total = static_cast<long>(num(lk.params, "trials_total"));
    p.m_next = static_cast<long>(num(lk.params, "m_next"));
    return make_beta_binomial_adapter(p);
  }
  if (lk.dist == "normal-precision") {
    NNGParams p;
    p.n = static_cast<long>(num(lk.params, "n"));
    p.ybar = num(lk.params, "ybar");
    p.sum_sq = num(lk.params, "sum_sq");
    for (const auto& level : spec.levels) {
      if (level.dist == "gamma") {
        p.alpha0 = num(level.params, "alpha0");
        p.beta0 = num(level.params, "beta0");
      } else if (level.dist == "normal-scaled") {
        p.mu0 = num_or(level.params, "mu0", 0.0);
        p.kappa0 = num(level.params, "kappa0");
      }
    }
    return make_nng_adapter(p, plan);
  }
  if (lk.dist == "binomial-known-p") {
    BPGParams p;
    p.p = num(lk.params, "p");
    p.s = num(lk.params, "s");
    p.n = static_cast<long>(num(lk.params, "n"));
    for (const auto& level : spec.levels) {
      if (level.dist == "gamma") {
        p.a = num(level.params, "a");
        p.b = num(level.params, "b");
      }
    }
    return make_bpg_adapter(p, plan);
  }
  if (lk.dist == "normal-3level") {
    conjugate::ThreeLevelNormalParams p;
    p.sigma0_sq = num(lk.params, "sigma0_sq");
    p.n = static_cast<long>(num(lk.params, "n"));
    p.ybar = num_or(lk.params, "ybar", 0.0);
    for (const auto& level : spec.levels) {
      if (level.name == "nu") {
        p.a = num_or(level.params, "a", 0.0);
        p.b_sq = num(level.params, "b_sq");
      } else if (level.name == "mu") {
        p.tau0_sq = num(level.params, "tau0_sq");
      }
    }
    return make_three_level_normal_adapter(p, plan);
  }
  throw DomainError("no built-in adapter for likelihood '" + lk.dist + "'");
}

}  // namespace varscope::mc
