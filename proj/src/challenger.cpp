#include "varscope/challenger.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "varscope/errors.hpp"
#include "varscope/rng.hpp"

namespace varscope::bma {

namespace {

constexpr double kPi = 3.14159265358979323846;

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double inverse_link(const std::string& link, double eta) {
  if (link == "logit") return 1.0 / (1.0 + std::exp(-std::clamp(eta, -700.0, 700.0)));
  if (link == "cloglog") return 1.0 - std::exp(-std::exp(std::clamp(eta, -700.0, 30.0)));
  if (link == "probit") return std_normal_cdf(eta);
  throw DomainError("challenger: unknown link " + link);
}

struct Cell {
  std::string link;
  std::vector<std::string> cols;  // subset of {1, t, t2, s}
  Eigen::MatrixXd x;              // usable rows by columns
  Eigen::VectorXd x_star;
};

struct Posterior {
  const Cell* cell;
  const std::vector<double>* y;
  const std::vector<double>* m;
  double prior_var;

  double log_post(const Eigen::VectorXd& beta) const {
    const Eigen::VectorXd eta = cell->x * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double p = std::clamp(inverse_link(cell->link, eta(i)), 1e-12, 1.0 - 1e-12);
      ll += (*y)[static_cast<std::size_t>(i)] * std::log(p) +
            ((*m)[static_cast<std::size_t>(i)] - (*y)[static_cast<std::size_t>(i)]) *
                std::log(1.0 - p);
    }
    const double d = static_cast<double>(beta.size());
    return ll - beta.squaredNorm() / (2.0 * prior_var) - 0.5 * d * std::log(2.0 * kPi * prior_var);
  }
};

Eigen::VectorXd numeric_gradient(const Posterior& post, const Eigen::VectorXd& x) {
  const Eigen::Index d = x.size();
  Eigen::VectorXd g(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double h = 1e-5 * (1.0 + std::fabs(x(i)));
    Eigen::VectorXd hi = x, lo = x;
    hi(i) += h;
    lo(i) -= h;
    g(i) = (post.log_post(hi) - post.log_post(lo)) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd numeric_neg_hessian(const Posterior& post, const Eigen::VectorXd& x) {
  const Eigen::Index d = x.size();
  Eigen::MatrixXd h(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      const double hi = 1e-4 * (1.0 + std::fabs(x(i)));
      const double hj = 1e-4 * (1.0 + std::fabs(x(j)));
      Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
      pp(i) += hi; pp(j) += hj;
      pm(i) += hi; pm(j) -= hj;
      mp(i) -= hi; mp(j) += hj;
      mm(i) -= hi; mm(j) -= hj;
      const double v = (post.log_post(pp) - post.log_post(pm) - post.log_post(mp) +
                        post.log_post(mm)) /
                       (4.0 * hi * hj);
      h(i, j) = h(j, i) = -v;
    }
  }
  return h;
}

Eigen::MatrixXd ensure_pd(Eigen::MatrixXd m) {
  double ridge = 1e-10 * std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
  for (;;) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) return m;
    m += ridge * Eigen::MatrixXd::Identity(m.rows(), m.cols());
    ridge *= 10.0;
  }
}

// Newton ascent with backtracking; numeric derivatives keep the three links
// on one code path (dims <= 4, cost negligible).
Eigen::VectorXd find_map(const Posterior& post, Eigen::Index dim) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  double fx = post.log_post(x);
  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::VectorXd g = numeric_gradient(post, x);
    if (g.norm() < 1e-9) break;
    const Eigen::MatrixXd h = ensure_pd(numeric_neg_hessian(post, x));
    Eigen::VectorXd step = h.llt().solve(g);
    double scale = 1.0;
    bool moved = false;
    for (int bt = 0; bt < 40; ++bt) {
      const Eigen::VectorXd cand = x + scale * step;
      const double fc = post.log_post(cand);
      if (fc > fx) {
        x = cand;
        fx = fc;
        moved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!moved) break;
  }
  return x;
}

struct CellRun {
  CellSummary summary;
  std::vector<double> draws;
};

CellRun run_cell(const Cell& cell, const std::vector<double>& y, const std::vector<double>& m,
                 const ChallengerConfig& cfg, std::uint64_t cell_index) {
  Posterior post{&cell, &y, &m, cfg.prior_sd * cfg.prior_sd};
  const Eigen::Index dim = cell.x.cols();

  const Eigen::VectorXd map = find_map(post, dim);
  const double lp_map = post.log_post(map);
  const Eigen::MatrixXd neg_hess = ensure_pd(numeric_neg_hessian(post, map));
  const double log_det = 2.0 * Eigen::MatrixXd(neg_hess.llt().matrixL())
                                   .diagonal()
                                   .array()
                                   .log()
                                   .sum();
  const double log_marginal =
      lp_map + 0.5 * static_cast<double>(dim) * std::log(2.0 * kPi) - 0.5 * log_det;

  // Proposal covariance from the Laplace curvature.
  const Eigen::MatrixXd prop_cov = ensure_pd(neg_hess.inverse());
  const Eigen::MatrixXd prop_root = Eigen::MatrixXd(prop_cov.llt().matrixL());

  RngStream rng = RngStream::substream(cfg.seed, cell_index);
  Eigen::VectorXd beta = map;
  double lp = lp_map;
  double scale = 2.38 / std::sqrt(static_cast<double>(dim));

  CellRun out;
  out.summary.link = cell.link;
  out.summary.model = [&] {
    std::string s;
    for (const auto& c : cell.cols) s += (s.empty() ? "" : "+") + c;
    return s;
  }();
  out.summary.log_marginal = log_marginal;
  out.draws.reserve(cfg.draws_per_model);

  std::size_t accepted_keep = 0;
  std::size_t window_accept = 0;
  const std::size_t total_iters = cfg.burn_in + cfg.draws_per_model;
  Eigen::VectorXd noise(dim);
  for (std::size_t it = 0; it < total_iters; ++it) {
    for (Eigen::Index i = 0; i < dim; ++i) noise(i) = rng.normal();
    const Eigen::VectorXd cand = beta + scale * (prop_root * noise);
    const double lp_cand = post.log_post(cand);
    const bool accept = std::log(rng.uniform()) < lp_cand - lp;
    if (accept) {
      beta = cand;
      lp = lp_cand;
    }
    if (it < cfg.burn_in) {
      window_accept += accept ? 1 : 0;
      if ((it + 1) % 100 == 0) {
        const double rate = static_cast<double>(window_accept) / 100.0;
        if (rate < 0.2) scale *= 0.8;
        if (rate > 0.4) scale *= 1.25;
        window_accept = 0;
      }
    } else {
      accepted_keep += accept ? 1 : 0;
      out.draws.push_back(inverse_link(cell.link, cell.x_star.dot(beta)));
    }
  }
  out.summary.acceptance =
      static_cast<double>(accepted_keep) / static_cast<double>(cfg.draws_per_model);

  double mean = 0.0;
  for (double v : out.draws) mean += v;
  mean /= static_cast<double>(out.draws.size());
  double var = 0.0;
  for (double v : out.draws) var += (v - mean) * (v - mean);
  var /= static_cast<double>(out.draws.size());
  out.summary.mean = mean;
  out.summary.var = var;
  return out;
}

}  // namespace

std::vector<OringRow> orings_from_csv(std::istream& in) {
  std::vector<OringRow> out;
  std::string line;
  if (!std::getline(in, line)) throw DomainError("orings csv: empty file");
  if (line.rfind("flight_id", 0) != 0) {
    throw DomainError(
        "orings csv: expected header flight_id,temp_F,pressure_psi,n_failures,n_rings,exclude");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> f;
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 6) throw DomainError("orings csv: bad row at line " + std::to_string(line_no));
    try {
      out.push_back({std::stoi(f[0]), std::stod(f[1]), std::stod(f[2]), std::stoi(f[3]),
                     std::stoi(f[4]), std::stoi(f[5]) != 0});
    } catch (const std::exception&) {
      throw DomainError("orings csv: bad row at line " + std::to_string(line_no));
    }
  }
  return out;
}

ChallengerResult run_challenger(const ChallengerConfig& cfg, const std::vector<OringRow>& data) {
  std::vector<OringRow> rows;
  for (const auto& r : data) {
    if (!r.exclude) rows.push_back(r);
  }
  if (rows.size() != 22) {
    throw DomainError("challenger: expected 22 usable rows after the outlier drop, got " +
                      std::to_string(rows.size()));
  }
  const std::size_t n = rows.size();

  std::vector<double> y(n), m(n);
  std::vector<double> t(n), t2(n), s(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = rows[i].n_failures;
    m[i] = rows[i].n_rings;
    t[i] = rows[i].temp_f;
    t2[i] = rows[i].temp_f * rows[i].temp_f;
    s[i] = rows[i].pressure_psi;
  }

  // Column transforms shared by data and prediction point.
  struct Column {
    std::vector<double> values;
    double star = 0.0;
  };
  const auto transformed = [&](const std::vector<double>& v, double star) {
    Column c{v, star};
    if (cfg.scaling == CovariateScaling::raw) return c;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double sd = 0.0;
    for (double x : v) sd += (x - mean) * (x - mean);
    sd = std::sqrt(sd / static_cast<double>(v.size()));
    const double shift = cfg.scaling == CovariateScaling::standardize ? mean : 0.0;
    for (double& x : c.values) x = (x - shift) / sd;
    c.star = (star - shift) / sd;
    return c;
  };
  std::vector<std::pair<std::string, Column>> columns;
  columns.emplace_back("1", Column{std::vector<double>(n, 1.0), 1.0});
  columns.emplace_back("t", transformed(t, cfg.t_star));
  columns.emplace_back("t2", transformed(t2, cfg.t_star * cfg.t_star));
  columns.emplace_back("s", transformed(s, cfg.s_star));

  // All 15 non-empty subsets of {1, t, t2, s}.
  std::vector<Cell> cells;
  for (const auto& link : cfg.links) {
    for (unsigned mask = 1; mask < 16; ++mask) {
      Cell cell;
      cell.link = link;
      std::vector<const Column*> used;
      for (unsigned b = 0; b < 4; ++b) {
        if (mask & (1u << b)) {
          cell.cols.push_back(columns[b].first);
          used.push_back(&columns[b].second);
        }
      }
      cell.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(used.size()));
      cell.x_star.resize(static_cast<Eigen::Index>(used.size()));
      for (std::size_t j = 0; j < used.size(); ++j) {
        for (std::size_t i = 0; i < n; ++i) {
          cell.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = used[j]->values[i];
        }
        cell.x_star(static_cast<Eigen::Index>(j)) = used[j]->star;
      }
      cells.push_back(std::move(cell));
    }
  }

  // Independent jobs, merged by cell index.
  std::vector<CellRun> runs(cells.size());
  const int threads = std::max(1, cfg.threads);
  const auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      runs[c] = run_cell(cells[c], y, m, cfg, static_cast<std::uint64_t>(c));
    }
  };
  if (threads == 1) {
    worker(0, cells.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk =
        (cells.size() + static_cast<std::size_t>(threads) - 1) / static_cast<std::size_t>(threads);
    for (int w = 0; w < threads; ++w) {
      const std::size_t begin = static_cast<std::size_t>(w) * chunk;
      const std::size_t end = std::min(cells.size(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  ChallengerResult out;
  double max_lm = -1e300;
  for (const auto& r : runs) max_lm = std::max(max_lm, r.summary.log_marginal);
  double wsum = 0.0;
  for (auto& r : runs) {
    r.summary.weight = std::exp(r.summary.log_marginal - max_lm);
    wsum += r.summary.weight;
  }
  for (auto& r : runs) {
    r.summary.weight /= wsum;
    if (r.summary.acceptance < 0.1 || r.summary.acceptance > 0.6) {
      out.warnings.push_back("cell " + r.summary.link + "/" + r.summary.model +
                             ": acceptance rate " + std::to_string(r.summary.acceptance) +
                             " outside [0.1, 0.6]");
    }
    out.cells.push_back(r.summary);
  }

  // Weighted draw rows: cell weight spread evenly over its retained draws.
  out.draws.rows.reserve(runs.size() * cfg.draws_per_model);
  for (const auto& r : runs) {
    const double w = r.summary.weight / static_cast<double>(r.draws.size());
    if (w <= 0.0) continue;
    for (double v : r.draws) {
      out.draws.rows.push_back({r.summary.link, r.summary.model, v, 0.0, w});
    }
  }

  out.by_link_then_model = decompose_labeled_draws(out.draws, DrawOrder::v1_then_v2);
  out.by_model_then_link = decompose_labeled_draws(out.draws, DrawOrder::v2_then_v1);
  double pbar = 0.0;
  for (const auto& r : runs) pbar += r.summary.weight * r.summary.mean;
  out.posterior_mean = pbar;
  return out;
}

void write_labeled_draws_csv(const LabeledDraws& draws, std::ostream& out) {
  out << "v1_label,v2_label,pred_mean,pred_var,weight\n";
  for (const auto& r : draws.rows) {
    out << r.v1 << ',' << r.v2 << ',' << r.pred_mean << ',' << r.pred_var << ',' << r.weight
        << '\n';
  }
}

}  // namespace varscope::bma
