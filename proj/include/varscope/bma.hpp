#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "varscope/model.hpp"

namespace varscope::bma {

struct ModelWeightEntry {
  std::string label;
  double weight = 0.0;
  double pred_mean = 0.0;
  double pred_var = 0.0;
};

struct ModelWeightTable {
  std::vector<ModelWeightEntry> entries;
};

// Posterior draws labeled by two conditioning variables. `weight` defaults to
// one row = one draw; the Challenger pipeline passes unequal cell weights.
struct LabeledRow {
  std::string v1;
  std::string v2;
  double pred_mean = 0.0;
  double pred_var = 0.0;
  double weight = 1.0;
};

struct LabeledDraws {
  std::vector<LabeledRow> rows;
};

enum class DrawOrder { v1_then_v2, v2_then_v1 };

// Two-term BMA expansion: within-model variance plus across-model spread of
// the predictive means.
TermReport bma_two_term(const ModelWeightTable& tbl);

// Finite-population three-term LTV over the label cells. All moments use
// population weighting, so the terms conserve the empirical identity
// sum = mean(pred_var) + Var(pred_mean) exactly. The leading term carries the
// within-cell spread of pred_mean (the draw-level variability below both
// labels) on top of mean(pred_var).
TermReport decompose_labeled_draws(const LabeledDraws& draws, DrawOrder order);

// CSV with header v1_label,v2_label,pred_mean,pred_var and one row per draw.
LabeledDraws labeled_draws_from_csv(std::istream& in);

}  // namespace varscope::bma
