#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "varscope/model.hpp"
#include "varscope/rng.hpp"

namespace varscope::mc {

using BlockValue = std::vector<double>;

// Sampler view of a hierarchical model for one fixed block order. Block k
// may depend only on blocks 1..k-1 and the data baked into the adapter;
// predictive_mean/var take draws of all blocks.
class ModelAdapter {
 public:
  virtual ~ModelAdapter() = default;
  virtual std::size_t block_count() const = 0;
  virtual std::vector<std::string> block_labels() const = 0;
  // k is 1-based; prefix holds draws of blocks 1..k-1.
  virtual BlockValue sample_block(std::size_t k, std::span<const BlockValue> prefix,
                                  RngStream& rng) const = 0;
  virtual double predictive_mean(std::span<const BlockValue> values) const = 0;
  virtual double predictive_var(std::span<const BlockValue> values) const = 0;
  virtual std::string model_id() const = 0;
  virtual bool thread_safe() const { return true; }
};

struct McBudget {
  std::size_t n_outer = 10000;
  std::size_t n_inner = 64;
  std::uint64_t seed = 0;
};

// Nested estimator. term_0 averages predictive_var over n_outer full chains.
// term_k averages, over n_outer prefix draws, the Bessel sample variance of
// n_inner estimates of E[Y|D,V_{1:k}]; each estimate completes the chain with
// a fresh n_inner-ary tree of the remaining blocks (no draw reuse), so the
// residual bias of term_k is O(1/n_inner) and every term is a sample
// variance, hence non-negative. Cost per outer draw for term k is
// n_inner^(u-k+1) predictive_mean calls. Outer draw i owns the substream
// (seed, i); reduction is in draw-index order, so results are bit-identical
// for any worker count.
TermReport estimate_decomposition(const ModelAdapter& adapter, const ExpansionPlan& plan,
                                  const McBudget& budget, int threads = 1);

struct ConservationIssue {
  std::size_t i = 0, j = 0;
  double gap = 0.0;
  double allowed = 0.0;
};

struct ConservationResult {
  double max_gap = 0.0;
  bool pass = true;
  std::vector<ConservationIssue> failures;
};

// Pairwise total agreement: exact reports to 1e-12 relative, stochastic pairs
// to 3 combined standard errors. Reports must describe the same model.
ConservationResult conservation_check(std::span<const TermReport> reports);

}  // namespace varscope::mc
