#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "varscope/bma.hpp"
#include "varscope/model.hpp"

namespace varscope::bma {

struct OringRow {
  int flight_id = 0;
  double temp_f = 0.0;
  double pressure_psi = 0.0;
  int n_failures = 0;
  int n_rings = 6;
  bool exclude = false;
};

// CSV columns: flight_id,temp_F,pressure_psi,n_failures,n_rings,exclude.
std::vector<OringRow> orings_from_csv(std::istream& in);

enum class CovariateScaling { standardize, scale_only, raw };

// Desk-scale Challenger pipeline: 3 link functions x 15 models, per-cell
// random-walk Metropolis with a N(0, prior_sd^2) coefficient prior, cell
// weights from Laplace-approximated marginal likelihoods under uniform priors
// over links and models. Covariates default to z-scores of {t, t^2, s}
// computed on the usable rows (the diffuse prior needs O(1) column scales to
// be meaningfully diffuse).
struct ChallengerConfig {
  std::string data_path;
  int n_rings = 6;
  double t_star = 31.0;
  double s_star = 200.0;
  std::vector<std::string> links = {"logit", "cloglog", "probit"};
  double prior_sd = 10.0;
  std::uint64_t seed = 1;
  std::size_t draws_per_model = 20000;
  std::size_t burn_in = 4000;
  CovariateScaling scaling = CovariateScaling::standardize;
  int threads = 1;
};

struct CellSummary {
  std::string link;
  std::string model;
  double log_marginal = 0.0;
  double weight = 0.0;
  double mean = 0.0;
  double var = 0.0;
  double acceptance = 0.0;
};

struct ChallengerResult {
  TermReport by_link_then_model;  // order v1,v2 with v1 = link
  TermReport by_model_then_link;
  double posterior_mean = 0.0;
  std::vector<CellSummary> cells;
  LabeledDraws draws;  // weighted rows, one per retained draw
  std::vector<std::string> warnings;
};

ChallengerResult run_challenger(const ChallengerConfig& cfg, const std::vector<OringRow>& data);

void write_labeled_draws_csv(const LabeledDraws& draws, std::ostream& out);

}  // namespace varscope::bma
