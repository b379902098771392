#include <doctest.h>

#include <cmath>
#include <vector>

#include "varscope/conjugate.hpp"
#include "varscope/errors.hpp"
#include "varscope/rng.hpp"

using namespace varscope;
using namespace varscope::conjugate;

namespace {

double rel_gap(double a, double b) { return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)}); }

}  // namespace

TEST_CASE("normal known variance: point-mass prior kills parameter uncertainty") {
  NormalKnownVarParams p;
  p.sigma0_sq = 1.0;
  p.tau0_sq = 0.0;
  p.n = 7;
  const auto r = normal_known_var_decompose(p);
  CHECK(r.terms[0] == 1.0);
  CHECK(r.terms[1] == 0.0);
  CHECK(r.total == 1.0);
}

TEST_CASE("normal known variance: n=4 example with nested-MC oracle") {
  NormalKnownVarParams p;
  p.sigma0_sq = 1.0;
  p.tau0_sq = 1.0;
  p.n = 4;
  const auto r = normal_known_var_decompose(p);
  CHECK(r.terms[0] == doctest::Approx(1.0));
  CHECK(r.terms[1] == doctest::Approx(0.2));
  CHECK(r.total == doctest::Approx(1.2));

  // Oracle: a million draws from the exact posterior N(mu_n, tau_n^2);
  // the VarE term is the sample variance of the posterior mean parameter.
  RngStream rng(20240901);
  const std::size_t n_draws = 1'000'000;
  const double tau_n = std::sqrt(0.2);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 1; i <= n_draws; ++i) {
    const double mu = rng.normal(0.0, tau_n);
    const double d = mu - mean;
    mean += d / static_cast<double>(i);
    m2 += d * (mu - mean);
  }
  const double mc_vare = m2 / static_cast<double>(n_draws - 1);
  // SE of a variance estimate is about var * sqrt(2/n).
  CHECK(std::fabs(mc_vare - r.terms[1]) < 5.0 * 0.2 * std::sqrt(2.0 / n_draws));
}

TEST_CASE("normal known variance: VarE strictly decreasing in n") {
  NormalKnownVarParams p;
  p.sigma0_sq = 2.3;
  p.tau0_sq = 1.7;
  double prev = 1e300;
  for (long n = 0; n <= 100; ++n) {
    p.n = n;
    const double t1 = normal_known_var_decompose(p).terms[1];
    CHECK(t1 < prev);
    prev = t1;
  }
}

TEST_CASE("normal known variance domain errors") {
  NormalKnownVarParams p;
  p.sigma0_sq = 0.0;
  CHECK_THROWS_AS(normal_known_var_decompose(p), DomainError);
  p.sigma0_sq = 1.0;
  p.tau0_sq = -1.0;
  CHECK_THROWS_AS(normal_known_var_decompose(p), DomainError);
}

TEST_CASE("beta binomial: no future trials, zero report") {
  BetaBinomialParams p;
  p.m_next = 0;
  const auto r = beta_binomial_decompose(p);
  CHECK(r.terms[0] == 0.0);
  CHECK(r.terms[1] == 0.0);
  CHECK(r.total == 0.0);
}

TEST_CASE("beta binomial: uniform prior, single future trial vs quadrature") {
  BetaBinomialParams p;
  p.alpha = 1.0;
  p.beta = 1.0;
  p.successes = 0;
  p.trials_total = 0;
  p.m_next = 1;
  const auto r = beta_binomial_decompose(p);
  CHECK(r.terms[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(r.terms[1] == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
  CHECK(r.total == doctest::Approx(0.25).epsilon(1e-12));

  // Brute-force integrals of the binomial variance/mean over Beta(1,1).
  const int steps = 200000;
  double evar = 0.0, emean = 0.0, emean2 = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double u = (i + 0.5) / steps;
    evar += u * (1.0 - u);
    emean += u;
    emean2 += u * u;
  }
  evar /= steps;
  emean /= steps;
  emean2 /= steps;
  CHECK(r.terms[0] == doctest::Approx(evar).epsilon(1e-6));
  CHECK(r.terms[1] == doctest::Approx(emean2 - emean * emean).epsilon(1e-6));
}

TEST_CASE("beta binomial rejects impossible counts") {
  BetaBinomialParams p;
  p.successes = 3;
  p.trials_total = 2;
  CHECK_THROWS_AS(beta_binomial_decompose(p), DomainError);
}

TEST_CASE("poisson gamma: prior predictive matches negative binomial brute force") {
  PoissonConjugateParams p;  // alpha = beta = 1, s = 0, n = 0
  const auto r = poisson_conjugate_decompose(p);
  CHECK(r.terms[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.terms[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.total == doctest::Approx(2.0).epsilon(1e-12));

  // NB(r=1, q=1/2) pmf summed directly.
  double mean = 0.0, second = 0.0, mass = 0.0;
  double pmf = 0.5;  // P(Y=0) = q = beta/(beta+1)
  for (int y = 0; y < 400; ++y) {
    mass += pmf;
    mean += y * pmf;
    second += double(y) * y * pmf;
    pmf *= 0.5;  // ratio for alpha=1: (y+1) choose shift collapses to 1/2
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.total == doctest::Approx(second - mean * mean).epsilon(1e-9));
}

TEST_CASE("poisson gamma: scaling and the term ratio identity") {
  PoissonConjugateParams p;
  p.alpha = 0.7;
  p.beta = 2.0;
  p.s = 5.0;
  p.n = 3;
  const auto r = poisson_conjugate_decompose(p);
  CHECK(r.terms[1] == doctest::Approx(r.terms[0] / (p.beta + p.n)).epsilon(1e-15));

  PoissonConjugateParams doubled = p;
  doubled.alpha = 2.0 * p.alpha + p.s;  // doubles alpha + s
  doubled.s = p.s;
  const auto r2 = poisson_conjugate_decompose(doubled);
  CHECK(r2.terms[0] == doctest::Approx(2.0 * r.terms[0]).epsilon(1e-12));
  CHECK(r2.terms[1] == doctest::Approx(2.0 * r.terms[1]).epsilon(1e-12));
}

TEST_CASE("nng: paper example with both orders and the nested-MC oracle") {
  const std::vector<double> y = {1.0, -1.0};
  const auto p = NNGParams::from_data(0.0, 1.0, 3.0, 2.0, y);
  CHECK(p.kappa_n() == doctest::Approx(3.0));
  CHECK(p.alpha_n() == doctest::Approx(4.0));
  CHECK(p.beta_n() == doctest::Approx(3.0));

  const auto mu_first = nng_decompose(p, NngOrder::mu_first);
  const auto disp = mu_first.display_terms();
  CHECK(disp[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(disp[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(disp[2] == 0.0);
  CHECK(mu_first.total == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

  const auto lambda_first = nng_decompose(p, NngOrder::lambda_first);
  const auto disp2 = lambda_first.display_terms();
  CHECK(disp2[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(disp2[1] == 0.0);
  CHECK(disp2[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(lambda_first.total == doctest::Approx(mu_first.total).epsilon(1e-15));

  // The leading term is shared between the orders (Fubini).
  CHECK(mu_first.terms[0] == lambda_first.terms[0]);

  // Oracle: sample lambda2 | y then mu | lambda2, y, accumulate E[1/lambda2]
  // and E[1/(kappa_n lambda2)].
  RngStream rng(77);
  const std::size_t n_draws = 1'000'000;
  double lead = 0.0, mu_term = 0.0;
  for (std::size_t i = 0; i < n_draws; ++i) {
    const double g = rng.gamma(4.0, 3.0);
    lead += 1.0 / g;
    mu_term += 1.0 / (3.0 * g);
  }
  lead /= static_cast<double>(n_draws);
  mu_term /= static_cast<double>(n_draws);
  CHECK(disp[0] == doctest::Approx(lead).epsilon(5e-3));
  CHECK(disp[1] == doctest::Approx(mu_term).epsilon(5e-3));
}

TEST_CASE("nng rejects an undefined inverse-precision mean") {
  NNGParams p;
  p.alpha0 = 0.5;
  p.n = 0;
  CHECK_THROWS_WITH_AS(nng_decompose(p, NngOrder::mu_first), doctest::Contains("alpha_n"),
                       DomainError);
}

TEST_CASE("bpg: degenerate bernoulli and the plug-in example with MC oracle") {
  BPGParams zero;
  zero.p = 0.0;
  const auto rz = bpg_decompose(zero, BpgOrder::N_first);
  CHECK(rz.terms[0] == 0.0);
  CHECK(rz.terms[1] == 0.0);
  CHECK(rz.terms[2] == 0.0);
  CHECK(rz.total == 0.0);

  BPGParams p;
  p.p = 0.5;
  p.a = 1.0;
  p.b = 1.0;
  p.s = 3.0;
  p.n = 2;
  const auto r = bpg_decompose(p, BpgOrder::N_first);
  const auto disp = r.display_terms();
  CHECK(disp[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(disp[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(disp[2] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(r.total == doctest::Approx(1.25).epsilon(1e-12));

  const auto reduced = bpg_decompose(p, BpgOrder::lambda_first);
  REQUIRE(reduced.terms.size() == 2);  // reduces to a two-term expansion
  CHECK(reduced.terms[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(reduced.terms[1] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(reduced.total == doctest::Approx(r.total).epsilon(1e-15));
  CHECK(reduced.terms[0] == r.terms[0]);

  // Oracle over the generative chain (lambda, N, Y).
  RngStream rng(4242);
  const std::size_t n_draws = 1'000'000;
  double sum_y = 0.0, sum_y2 = 0.0, sum_binvar = 0.0, sum_lam = 0.0, sum_lam2 = 0.0;
  for (std::size_t i = 0; i < n_draws; ++i) {
    const double lam = rng.gamma(4.0, 2.0);  // s + a = 4, b + p n = 2
    const long count = rng.poisson(lam);
    long yy = 0;
    for (long j = 0; j < count; ++j) yy += rng.uniform() < 0.5 ? 1 : 0;
    sum_y += yy;
    sum_y2 += double(yy) * yy;
    sum_binvar += count * 0.25;
    sum_lam += 0.5 * lam;
    sum_lam2 += 0.25 * lam * lam;
  }
  const double n = static_cast<double>(n_draws);
  const double total_mc = sum_y2 / n - (sum_y / n) * (sum_y / n);
  const double evar_mc = sum_binvar / n;
  const double gamma_mc = sum_lam2 / n - (sum_lam / n) * (sum_lam / n);
  CHECK(r.total == doctest::Approx(total_mc).epsilon(2e-2));
  CHECK(disp[0] == doctest::Approx(evar_mc).epsilon(1e-2));
  CHECK(disp[2] == doctest::Approx(gamma_mc).epsilon(2e-2));

  BPGParams bad;
  bad.p = 1.5;
  CHECK_THROWS_AS(bpg_decompose(bad, BpgOrder::N_first), DomainError);
}

TEST_CASE("three-level normal: hyperprior point mass collapses the third term") {
  ThreeLevelNormalParams p;
  p.b_sq = 0.0;
  p.n = 5;
  const auto out = three_level_normal_decompose(p);
  CHECK(out.report.terms[1] == 0.0);  // nu term
  const double two_level = p.sigma0_sq + 1.0 / (5.0 / p.sigma0_sq + 1.0 / p.tau0_sq);
  CHECK(out.report.total == doctest::Approx(two_level).epsilon(1e-15));
}

TEST_CASE("three-level normal: unit example sums to 5/3") {
  ThreeLevelNormalParams p;  // all unit variances, n = 1
  const auto out = three_level_normal_decompose(p);
  const auto disp = out.report.display_terms();
  CHECK(disp[0] == doctest::Approx(1.0));
  CHECK(disp[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(disp[2] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(out.report.total == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
  CHECK(rel_gap(out.report.term_sum(), out.report.total) < 1e-12);
}

TEST_CASE("three-level normal: conditioning on the hyperparameter says less") {
  RngStream rng(99);
  for (int i = 0; i < 200; ++i) {
    ThreeLevelNormalParams p;
    p.sigma0_sq = 0.1 + 5.0 * rng.uniform();
    p.tau0_sq = 0.05 + 4.0 * rng.uniform();
    p.b_sq = 3.0 * rng.uniform();
    p.n = 1 + static_cast<long>(rng.uniform() * 50.0);
    const auto out = three_level_normal_decompose(p);
    CHECK(out.var_given_mu < out.var_given_nu);  // tau0_sq > 0 always here
    CHECK(out.var_given_mu == p.sigma0_sq);
  }
}

TEST_CASE("conservation: 1000 random draws per family at 1e-12 relative") {
  RngStream rng(123456);
  for (int i = 0; i < 1000; ++i) {
    NormalKnownVarParams nkv;
    nkv.mu0 = rng.normal(0.0, 3.0);
    nkv.tau0_sq = 5.0 * rng.uniform();
    nkv.sigma0_sq = 0.05 + 5.0 * rng.uniform();
    nkv.n = static_cast<long>(rng.uniform() * 200.0);
    const auto r1 = normal_known_var_decompose(nkv);
    CHECK(rel_gap(r1.term_sum(), r1.total) <= 1e-12);

    BetaBinomialParams bb;
    bb.alpha = 0.1 + 20.0 * rng.uniform();
    bb.beta = 0.1 + 20.0 * rng.uniform();
    bb.trials_total = static_cast<long>(rng.uniform() * 300.0);
    bb.successes = static_cast<long>(rng.uniform() * (bb.trials_total + 1.0));
    bb.m_next = static_cast<long>(rng.uniform() * 50.0);
    const auto r2 = beta_binomial_decompose(bb);
    CHECK(rel_gap(r2.term_sum(), r2.total) <= 1e-12);

    PoissonConjugateParams pg;
    pg.alpha = 0.1 + 10.0 * rng.uniform();
    pg.beta = 0.1 + 10.0 * rng.uniform();
    pg.s = std::floor(rng.uniform() * 100.0);
    pg.n = static_cast<long>(rng.uniform() * 100.0);
    const auto r3 = poisson_conjugate_decompose(pg);
    CHECK(rel_gap(r3.term_sum(), r3.total) <= 1e-12);

    NNGParams nng;
    nng.mu0 = rng.normal(0.0, 2.0);
    nng.kappa0 = 0.1 + 5.0 * rng.uniform();
    nng.alpha0 = 1.1 + 8.0 * rng.uniform();
    nng.beta0 = 0.1 + 5.0 * rng.uniform();
    nng.n = static_cast<long>(rng.uniform() * 50.0);
    nng.ybar = rng.normal(0.0, 2.0);
    nng.sum_sq = nng.n * (nng.ybar * nng.ybar + 4.0 * rng.uniform());
    for (const auto order : {NngOrder::mu_first, NngOrder::lambda_first}) {
      const auto r4 = nng_decompose(nng, order);
      CHECK(rel_gap(r4.term_sum(), r4.total) <= 1e-12);
    }

    BPGParams bpg;
    bpg.p = rng.uniform();
    bpg.a = 0.1 + 10.0 * rng.uniform();
    bpg.b = 0.1 + 10.0 * rng.uniform();
    bpg.s = std::floor(rng.uniform() * 100.0);
    bpg.n = static_cast<long>(rng.uniform() * 100.0);
    for (const auto order : {BpgOrder::N_first, BpgOrder::lambda_first}) {
      const auto r5 = bpg_decompose(bpg, order);
      CHECK(rel_gap(r5.term_sum(), r5.total) <= 1e-12);
    }

    ThreeLevelNormalParams tl;
    tl.sigma0_sq = 0.05 + 5.0 * rng.uniform();
    tl.tau0_sq = 0.05 + 5.0 * rng.uniform();
    tl.b_sq = 5.0 * rng.uniform();
    tl.n = 1 + static_cast<long>(rng.uniform() * 100.0);
    const auto r6 = three_level_normal_decompose(tl).report;
    CHECK(rel_gap(r6.term_sum(), r6.total) <= 1e-12);
  }
}

TEST_CASE("nng order invariance of the leading term over random parameters") {
  RngStream rng(31337);
  for (int i = 0; i < 200; ++i) {
    NNGParams p;
    p.kappa0 = 0.2 + 4.0 * rng.uniform();
    p.alpha0 = 1.2 + 6.0 * rng.uniform();
    p.beta0 = 0.2 + 6.0 * rng.uniform();
    p.n = static_cast<long>(rng.uniform() * 40.0);
    p.ybar = rng.normal();
    p.sum_sq = p.n * (p.ybar * p.ybar + 3.0 * rng.uniform());
    const auto a = nng_decompose(p, NngOrder::mu_first);
    const auto b = nng_decompose(p, NngOrder::lambda_first);
    CHECK(a.terms[0] == b.terms[0]);
    CHECK(a.total == doctest::Approx(b.total).epsilon(1e-15));
  }
}
