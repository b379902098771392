#include "varscope/mc.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "varscope/errors.hpp"

namespace varscope::mc {

namespace {

// E[Y | D, V_{1:k}] estimate: exact at the deepest level, recursive
// n_inner-ary average below it.
double estimate_mean(const ModelAdapter& adapter, std::vector<BlockValue>& values, std::size_t k,
                     std::size_t u, std::size_t n_inner, RngStream& rng) {
  if (k == u) return adapter.predictive_mean(values);
  double acc = 0.0;
  for (std::size_t j = 0; j < n_inner; ++j) {
    values.push_back(adapter.sample_block(k + 1, std::span(values.data(), k), rng));
    acc += estimate_mean(adapter, values, k + 1, u, n_inner, rng);
    values.pop_back();
  }
  return acc / static_cast<double>(n_inner);
}

}  // namespace

TermReport estimate_decomposition(const ModelAdapter& adapter, const ExpansionPlan& plan,
                                  const McBudget& budget, int threads) {
  const std::size_t u = adapter.block_count();
  if (plan.blocks.size() != u) {
    throw DomainError("estimate_decomposition: plan block count does not match adapter");
  }
  const auto labels = adapter.block_labels();
  for (std::size_t k = 0; k < u; ++k) {
    std::string joined;
    for (const auto& n : plan.blocks[k]) joined += (joined.empty() ? "" : ",") + n;
    if (joined != labels[k]) {
      throw DomainError("estimate_decomposition: plan block " + std::to_string(k + 1) +
                        " is '" + joined + "' but adapter expects '" + labels[k] + "'");
    }
  }
  if (budget.n_outer < 2) throw DomainError("estimate_decomposition: n_outer must be >= 2");
  if (budget.n_inner < 2) throw DomainError("estimate_decomposition: n_inner must be >= 2");
  if (!adapter.thread_safe()) threads = 1;
  threads = std::max(1, threads);

  const std::size_t n_outer = budget.n_outer;
  const std::size_t n_inner = budget.n_inner;
  // Per-draw contributions, indexed [term k][outer draw].
  std::vector<std::vector<double>> draws(u + 1, std::vector<double>(n_outer, 0.0));

  const auto worker = [&](std::size_t begin, std::size_t end) {
    std::vector<BlockValue> chain;
    std::vector<BlockValue> values;
    std::vector<double> means(n_inner);
    for (std::size_t i = begin; i < end; ++i) {
      RngStream rng = RngStream::substream(budget.seed, i);

      chain.clear();
      for (std::size_t k = 1; k <= u; ++k) {
        chain.push_back(adapter.sample_block(k, std::span(chain.data(), k - 1), rng));
      }
      draws[0][i] = adapter.predictive_var(chain);

      for (std::size_t k = u; k >= 1; --k) {
        values.assign(chain.begin(), chain.begin() + static_cast<std::ptrdiff_t>(k - 1));
        double sum = 0.0;
        for (std::size_t j = 0; j < n_inner; ++j) {
          values.push_back(adapter.sample_block(k, std::span(values.data(), k - 1), rng));
          means[j] = estimate_mean(adapter, values, k, u, n_inner, rng);
          values.pop_back();
          sum += means[j];
        }
        const double mean = sum / static_cast<double>(n_inner);
        double ss = 0.0;
        for (std::size_t j = 0; j < n_inner; ++j) {
          const double d = means[j] - mean;
          ss += d * d;
        }
        draws[k][i] = ss / static_cast<double>(n_inner - 1);
      }
    }
  };

  if (threads == 1 || n_outer < 2 * static_cast<std::size_t>(threads)) {
    worker(0, n_outer);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_outer + static_cast<std::size_t>(threads) - 1) /
                              static_cast<std::size_t>(threads);
    for (int t = 0; t < threads; ++t) {
      const std::size_t begin = static_cast<std::size_t>(t) * chunk;
      const std::size_t end = std::min(n_outer, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  // Reduction in draw-index order.
  TermReport r;
  r.terms.assign(u + 1, 0.0);
  r.method = Method::monte_carlo;
  r.model_id = adapter.model_id();
  for (std::size_t k = 0; k < u; ++k) {
    std::string joined;
    for (const auto& n : plan.blocks[k]) joined += (joined.empty() ? "" : ",") + n;
    r.block_labels.push_back(joined);
  }

  TermDiagnostics diag;
  diag.n_outer = n_outer;
  diag.n_inner = n_inner;
  diag.seed = budget.seed;
  diag.term_se.assign(u + 1, 0.0);

  const double n = static_cast<double>(n_outer);
  std::vector<double> totals(n_outer, 0.0);
  for (std::size_t k = 0; k <= u; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n_outer; ++i) mean += draws[k][i];
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < n_outer; ++i) {
      const double d = draws[k][i] - mean;
      ss += d * d;
      totals[i] += draws[k][i];
    }
    r.terms[k] = mean;
    diag.term_se[k] = std::sqrt(ss / (n - 1.0) / n);
  }
  double total_mean = 0.0;
  for (double t : totals) total_mean += t;
  total_mean /= n;
  double total_ss = 0.0;
  for (double t : totals) {
    const double d = t - total_mean;
    total_ss += d * d;
  }
  r.total = total_mean;
  diag.total_se = std::sqrt(total_ss / (n - 1.0) / n);
  r.diagnostics = std::move(diag);
  return r;
}

ConservationResult conservation_check(std::span<const TermReport> reports) {
  if (reports.empty()) throw DomainError("conservation_check: no reports");
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (!reports[i].model_id.empty() && !reports[0].model_id.empty() &&
        reports[i].model_id != reports[0].model_id) {
      throw DomainError("conservation_check: reports describe different models: '" +
                        reports[0].model_id + "' vs '" + reports[i].model_id + "'");
    }
  }

  ConservationResult out;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    for (std::size_t j = i + 1; j < reports.size(); ++j) {
      const double gap = std::fabs(reports[i].total - reports[j].total);
      out.max_gap = std::max(out.max_gap, gap);
      const double se_i =
          reports[i].method == Method::closed_form || !reports[i].diagnostics
              ? 0.0
              : reports[i].diagnostics->total_se;
      const double se_j =
          reports[j].method == Method::closed_form || !reports[j].diagnostics
              ? 0.0
              : reports[j].diagnostics->total_se;
      double allowed;
      if (se_i == 0.0 && se_j == 0.0) {
        allowed = 1e-12 * std::max({1.0, std::fabs(reports[i].total), std::fabs(reports[j].total)});
      } else {
        allowed = 3.0 * std::sqrt(se_i * se_i + se_j * se_j);
      }
      if (gap > allowed) {
        out.pass = false;
        out.failures.push_back({i, j, gap, allowed});
      }
    }
  }
  return out;
}

}  // namespace varscope::mc
