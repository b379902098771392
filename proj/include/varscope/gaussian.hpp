#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "varscope/anova_params.hpp"
#include "varscope/conjugate.hpp"
#include "varscope/model.hpp"

namespace varscope::gauss {

struct BlockDef {
  std::string name;
  int dim = 1;
};

// Jointly Gaussian view of (Y_{n+1}, V-blocks, D). Blocks are contiguous
// slices of `sigma` in declaration order.
struct CovarianceModel {
  std::vector<BlockDef> blocks;
  Eigen::MatrixXd sigma;
  Eigen::VectorXd mean;  // size 0 means all zeros

  int total_dim() const;
  int block_offset(const std::string& name) const;
  int block_dim(const std::string& name) const;
  bool has_block(const std::string& name) const;
};

CovarianceModel covariance_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const CovarianceModel& m);

// Whole-matrix positive-definiteness check (Cholesky); throws DomainError.
void validate_pd(const CovarianceModel& m);

struct ConditionalMoments {
  Eigen::MatrixXd cond_cov;  // Var(target | given)
  Eigen::MatrixXd coeffs;    // regression of target on given
};

// Schur complement: Var(t|g) = S_tt - S_tg S_gg^{-1} S_gt.
ConditionalMoments conditional_moments(const CovarianceModel& m, const std::string& target,
                                       const std::vector<std::string>& given);

double conditional_variance(const CovarianceModel& m, const std::string& target,
                            const std::vector<std::string>& given);

// Squared partial correlation rho^2_{target,var | given}; both target and var
// must be scalar blocks.
double partial_correlation_sq(const CovarianceModel& m, const std::string& target,
                              const std::string& var, const std::vector<std::string>& given);

struct CiDims {
  int v1 = 1;
  int v2 = 1;
  int d = 1;
};

// Random PD model over (Y, V1, V2, D) built so that (Y,D) and V2 have zero
// partial covariance given V1, i.e. the structural assumption holds. The
// construction is verified internally to 1e-12 and retried on PD failure.
CovarianceModel build_ci_covariance(const CiDims& dims, std::uint64_t seed);

// Exact LTV terms for a Gaussian model: conditional variances do not depend
// on the conditioning values, so term_k telescopes as
// Var(Y|D, B_1..B_{k-1}) - Var(Y|D, B_1..B_k). Plan blocks name V-blocks;
// D (when present) is always conditioned on.
TermReport gaussian_term_decompose(const CovarianceModel& m,
                                   const std::vector<std::vector<std::string>>& plan_blocks);

// Joint normal casts of the closed-form models (exact oracles).
CovarianceModel three_level_normal_covariance(const conjugate::ThreeLevelNormalParams& p);
CovarianceModel anova_covariance(const anova::AnovaParams& p);

}  // namespace varscope::gauss
