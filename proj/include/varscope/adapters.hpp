#pragma once

#include <memory>

#include "varscope/conjugate.hpp"
#include "varscope/mc.hpp"

namespace varscope::mc {

// Exact conditional-posterior samplers for the conjugate families, wired for
// one block order. Supported plans per family:
//   normal-known-var: [mu]
//   poisson-gamma:    [lambda]
//   beta-binomial:    [p]
//   nng:              [mu],[lambda2] / [lambda2],[mu] / [mu,lambda2]
//   bpg:              [N],[lambda] / [lambda],[N] / [N,lambda] / [N] / [lambda]
//   normal-3level:    [nu],[mu] / [mu] / [nu]
std::unique_ptr<ModelAdapter> make_normal_known_var_adapter(
    const conjugate::NormalKnownVarParams& p);
std::unique_ptr<ModelAdapter> make_poisson_gamma_adapter(const conjugate::PoissonConjugateParams& p);
std::unique_ptr<ModelAdapter> make_beta_binomial_adapter(const conjugate::BetaBinomialParams& p);
std::unique_ptr<ModelAdapter> make_nng_adapter(const conjugate::NNGParams& p,
                                               const ExpansionPlan& plan);
std::unique_ptr<ModelAdapter> make_bpg_adapter(const conjugate::BPGParams& p,
                                               const ExpansionPlan& plan);
std::unique_ptr<ModelAdapter> make_three_level_normal_adapter(
    const conjugate::ThreeLevelNormalParams& p, const ExpansionPlan& plan);

// Builds the adapter for a hierarchy document (see README for the family
// layouts) wired for `plan`.
std::unique_ptr<ModelAdapter> make_adapter(const HierarchySpec& spec, const ExpansionPlan& plan);

}  // namespace varscope::mc
