#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "varscope/anova.hpp"
#include "varscope/conjugate.hpp"
#include "varscope/errors.hpp"
#include "varscope/gaussian.hpp"
#include "varscope/rng.hpp"

using namespace varscope;
using namespace varscope::gauss;

namespace {

CovarianceModel random_model(std::uint64_t seed, const std::vector<BlockDef>& blocks) {
  RngStream rng(seed);
  int dim = 0;
  for (const auto& b : blocks) dim += b.dim;
  Eigen::MatrixXd g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) g(i, j) = rng.normal();
  }
  CovarianceModel m;
  m.blocks = blocks;
  m.sigma = g * g.transpose() + 0.1 * Eigen::MatrixXd::Identity(dim, dim);
  return m;
}

}  // namespace

TEST_CASE("diagonal covariance: conditioning changes nothing") {
  CovarianceModel m;
  m.blocks = {{"Y", 1}, {"V1", 1}, {"D", 2}};
  m.sigma = Eigen::MatrixXd::Zero(4, 4);
  m.sigma.diagonal() << 2.0, 3.0, 1.0, 1.5;
  CHECK(conditional_variance(m, "Y", {}) == doctest::Approx(2.0));
  CHECK(conditional_variance(m, "Y", {"V1"}) == doctest::Approx(2.0));
  CHECK(conditional_variance(m, "Y", {"V1", "D"}) == doctest::Approx(2.0));
}

TEST_CASE("three-level normal cast reproduces the conditional variances") {
  conjugate::ThreeLevelNormalParams p;
  p.sigma0_sq = 1.3;
  p.tau0_sq = 0.8;
  p.b_sq = 2.1;
  p.n = 6;
  const auto m = three_level_normal_covariance(p);
  validate_pd(m);
  const double nn = static_cast<double>(p.n);
  CHECK(conditional_variance(m, "Y", {"D", "mu"}) == doctest::Approx(p.sigma0_sq).epsilon(1e-12));
  CHECK(conditional_variance(m, "Y", {"D", "nu"}) ==
        doctest::Approx(p.sigma0_sq + 1.0 / (nn / p.sigma0_sq + 1.0 / p.tau0_sq)).epsilon(1e-12));
  CHECK(conditional_variance(m, "Y", {"D"}) ==
        doctest::Approx(p.sigma0_sq + 1.0 / (nn / p.sigma0_sq + 1.0 / (p.tau0_sq + p.b_sq)))
            .epsilon(1e-12));
}

TEST_CASE("schur route agrees with the dense-inverse oracle on random models") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto m = random_model(seed, {{"Y", 1}, {"V1", 2}, {"V2", 1}, {"D", 3}});
    const double schur = conditional_variance(m, "Y", {"V1", "V2", "D"});
    // Oracle: invert the full covariance; the conditional variance of the
    // first coordinate is the reciprocal of its precision entry.
    const Eigen::MatrixXd prec = m.sigma.inverse();
    CHECK(schur == doctest::Approx(1.0 / prec(0, 0)).epsilon(1e-9));
  }
}

TEST_CASE("conditional_moments rejects singular conditioning sets") {
  CovarianceModel m;
  m.blocks = {{"Y", 1}, {"V1", 2}};
  m.sigma = Eigen::MatrixXd::Zero(3, 3);
  m.sigma(0, 0) = 1.0;
  // V1 block singular: duplicated coordinate.
  m.sigma(1, 1) = m.sigma(2, 2) = m.sigma(1, 2) = m.sigma(2, 1) = 1.0;
  CHECK_THROWS_WITH_AS(conditional_moments(m, "Y", {"V1"}), doctest::Contains("condition number"),
                       DomainError);
  CHECK_THROWS_AS(conditional_moments(m, "Y", {"Y"}), DomainError);
}

TEST_CASE("build_ci_covariance satisfies its construction contract") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto m = build_ci_covariance({2, 2, 3}, seed);
    validate_pd(m);
    // Partial covariances of Y and D with V2 given V1 vanish.
    const auto part = [&](const std::string& blk) {
      const int off_b = m.block_offset(blk), dim_b = m.block_dim(blk);
      const int off_1 = m.block_offset("V1"), dim_1 = m.block_dim("V1");
      const int off_2 = m.block_offset("V2"), dim_2 = m.block_dim("V2");
      const Eigen::MatrixXd s11 = m.sigma.block(off_1, off_1, dim_1, dim_1);
      const Eigen::MatrixXd sb2 = m.sigma.block(off_b, off_2, dim_b, dim_2);
      const Eigen::MatrixXd sb1 = m.sigma.block(off_b, off_1, dim_b, dim_1);
      const Eigen::MatrixXd s12 = m.sigma.block(off_1, off_2, dim_1, dim_2);
      return (sb2 - sb1 * s11.llt().solve(s12)).cwiseAbs().maxCoeff();
    };
    CHECK(part("Y") < 1e-10);
    CHECK(part("D") < 1e-10);
  }
}

TEST_CASE("gaussian variance ordering theorem holds on 100 seeded CI models") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto m = build_ci_covariance({1, 1, 2}, seed);
    const double v2 = conditional_variance(m, "Y", {"V2", "D"});
    const double v1 = conditional_variance(m, "Y", {"V1", "D"});
    const double vd = conditional_variance(m, "Y", {"D"});
    CHECK(v2 >= v1 - 1e-12);                      // clause 1
    CHECK(vd - v1 >= vd - v2 - 1e-12);            // clause 2 as VarE ordering
    const double rho1 = partial_correlation_sq(m, "Y", "V1", {"D"});
    const double rho2 = partial_correlation_sq(m, "Y", "V2", {"D"});
    CHECK(rho2 <= rho1 + 1e-12);
  }
}

TEST_CASE("duplicated hyperparameter gives ordering with equality") {
  // V2 an exact copy of V1: the joint is singular, but each conditioning set
  // stays invertible.
  CovarianceModel base = random_model(5, {{"Y", 1}, {"V1", 1}, {"D", 2}});
  CovarianceModel m;
  m.blocks = {{"Y", 1}, {"V1", 1}, {"V2", 1}, {"D", 2}};
  m.sigma = Eigen::MatrixXd::Zero(5, 5);
  const auto src = [&](int i) { return i == 2 ? 1 : (i > 2 ? i - 1 : i); };
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) m.sigma(i, j) = base.sigma(src(i), src(j));
  }
  const double v2 = conditional_variance(m, "Y", {"V2", "D"});
  const double v1 = conditional_variance(m, "Y", {"V1", "D"});
  CHECK(v2 == doctest::Approx(v1).epsilon(1e-12));
}

TEST_CASE("gaussian_term_decompose telescopes exactly") {
  SUBCASE("empty plan is the bare posterior predictive variance") {
    const auto m = random_model(11, {{"Y", 1}, {"V1", 1}, {"D", 2}});
    const auto r = gaussian_term_decompose(m, {});
    REQUIRE(r.terms.size() == 1);
    CHECK(r.terms[0] == doctest::Approx(conditional_variance(m, "Y", {"D"})));
    CHECK(r.total == r.terms[0]);
  }
  SUBCASE("random plans conserve to 1e-12 relative") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      const auto m = random_model(seed, {{"Y", 1}, {"V1", 1}, {"V2", 2}, {"V3", 1}, {"D", 2}});
      const auto r = gaussian_term_decompose(m, {{"V2"}, {"V1", "V3"}});
      const double gap = std::fabs(r.term_sum() - r.total);
      CHECK(gap <= 1e-12 * std::max(1.0, std::fabs(r.total)));
      for (std::size_t k = 1; k < r.terms.size(); ++k) CHECK(r.terms[k] >= -1e-12);
    }
  }
}

TEST_CASE("three-level normal decomposition matches the gaussian oracle") {
  conjugate::ThreeLevelNormalParams p;
  p.sigma0_sq = 1.0;
  p.tau0_sq = 1.0;
  p.b_sq = 1.0;
  p.n = 1;
  const auto closed = conjugate::three_level_normal_decompose(p).report;
  const auto m = three_level_normal_covariance(p);
  const auto oracle = gaussian_term_decompose(m, {{"nu"}, {"mu"}});
  REQUIRE(oracle.terms.size() == closed.terms.size());
  for (std::size_t k = 0; k < closed.terms.size(); ++k) {
    CHECK(closed.terms[k] == doctest::Approx(oracle.terms[k]).epsilon(1e-9));
  }
  CHECK(closed.total == doctest::Approx(oracle.total).epsilon(1e-12));
}

TEST_CASE("anova joint normal matches anova_decompose") {
  anova::AnovaParams p;
  p.T = 3;
  p.B = 2;
  p.sigma_eps_sq = 1.0;
  p.sigma_tau_sq = 2.0;
  p.sigma_beta_sq = 2.0;
  const auto closed = anova::to_term_report(anova::anova_decompose(p), anova::AnovaOrder::tau_outer);
  const auto oracle = gaussian_term_decompose(anova_covariance(p), {{"tau"}, {"beta"}});
  for (std::size_t k = 0; k < closed.terms.size(); ++k) {
    CHECK(closed.terms[k] == doctest::Approx(oracle.terms[k]).epsilon(1e-9));
  }
  CHECK(closed.total == doctest::Approx(oracle.total).epsilon(1e-12));
}

TEST_CASE("covariance json io") {
  const auto m = random_model(3, {{"Y", 1}, {"V1", 1}, {"D", 2}});
  const auto doc = to_json(m);
  const auto back = covariance_from_json(doc);
  CHECK(back.sigma.isApprox(m.sigma));
  CHECK(back.blocks.size() == 3);

  auto broken = doc;
  broken["sigma"][0][0] = -100.0;
  CHECK_THROWS_AS(covariance_from_json(broken), DomainError);
}
