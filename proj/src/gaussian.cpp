#include "varscope/gaussian.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "varscope/errors.hpp"
#include "varscope/rng.hpp"

namespace varscope::gauss {

namespace {

std::vector<int> gather_indices(const CovarianceModel& m, const std::vector<std::string>& names) {
  std::vector<int> idx;
  for (const auto& name : names) {
    const int off = m.block_offset(name);
    const int dim = m.block_dim(name);
    for (int i = 0; i < dim; ++i) idx.push_back(off + i);
  }
  return idx;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& s, const std::vector<int>& rows,
                          const std::vector<int>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          s(rows[i], cols[j]);
    }
  }
  return out;
}

}  // namespace

int CovarianceModel::total_dim() const {
  int d = 0;
  for (const auto& b : blocks) d += b.dim;
  return d;
}

int CovarianceModel::block_offset(const std::string& name) const {
  int off = 0;
  for (const auto& b : blocks) {
    if (b.name == name) return off;
    off += b.dim;
  }
  throw DomainError("covariance model: unknown block " + name);
}

int CovarianceModel::block_dim(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return b.dim;
  }
  throw DomainError("covariance model: unknown block " + name);
}

bool CovarianceModel::has_block(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return true;
  }
  return false;
}

CovarianceModel covariance_from_json(const nlohmann::json& doc) {
  CovarianceModel m;
  try {
    for (const auto& b : doc.at("blocks")) {
      m.blocks.push_back({b.at("name").get<std::string>(), b.at("dim").get<int>()});
    }
    const auto rows = doc.at("sigma").get<std::vector<std::vector<double>>>();
    const int n = static_cast<int>(rows.size());
    m.sigma.resize(n, n);
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != n) {
        throw DomainError("covariance model: sigma is not square");
      }
      for (int j = 0; j < n; ++j) {
        m.sigma(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      }
    }
    if (doc.contains("mean")) {
      const auto mean = doc.at("mean").get<std::vector<double>>();
      m.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(),
                                                 static_cast<Eigen::Index>(mean.size()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed covariance document: ") + e.what());
  }
  if (m.total_dim() != m.sigma.rows()) {
    throw DomainError("covariance model: block dims do not match sigma size");
  }
  validate_pd(m);
  return m;
}

nlohmann::json to_json(const CovarianceModel& m) {
  nlohmann::json doc;
  doc["blocks"] = nlohmann::json::array();
  for (const auto& b : m.blocks) doc["blocks"].push_back({{"name", b.name}, {"dim", b.dim}});
  std::vector<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < m.sigma.rows(); ++i) {
    rows.emplace_back(m.sigma.row(i).begin(), m.sigma.row(i).end());
  }
  doc["sigma"] = rows;
  if (m.mean.size() > 0) doc["mean"] = std::vector<double>(m.mean.begin(), m.mean.end());
  return doc;
}

void validate_pd(const CovarianceModel& m) {
  if (m.sigma.rows() != m.sigma.cols()) throw DomainError("covariance model: sigma not square");
  if (!m.sigma.isApprox(m.sigma.transpose(), 1e-10)) {
    throw DomainError("covariance model: sigma not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(m.sigma);
  if (llt.info() != Eigen::Success) {
    throw DomainError("covariance model: sigma not positive definite");
  }
}

ConditionalMoments conditional_moments(const CovarianceModel& m, const std::string& target,
                                       const std::vector<std::string>& given) {
  for (const auto& g : given) {
    if (g == target) throw DomainError("conditional_moments: target appears in given set");
  }
  const auto t = gather_indices(m, {target});
  ConditionalMoments out;
  if (given.empty()) {
    out.cond_cov = submatrix(m.sigma, t, t);
    out.coeffs.resize(static_cast<Eigen::Index>(t.size()), 0);
    return out;
  }
  const auto g = gather_indices(m, given);
  const Eigen::MatrixXd stt = submatrix(m.sigma, t, t);
  const Eigen::MatrixXd stg = submatrix(m.sigma, t, g);
  const Eigen::MatrixXd sgg = submatrix(m.sigma, g, g);

  Eigen::LLT<Eigen::MatrixXd> llt(sgg);
  if (llt.info() != Eigen::Success) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sgg);
    const double cond = svd.singularValues()(0) /
                        svd.singularValues()(svd.singularValues().size() - 1);
    std::ostringstream msg;
    msg << "conditional_moments: conditioning covariance is singular (condition number ~ "
        << cond << ")";
    throw DomainError(msg.str());
  }
  out.coeffs = llt.solve(stg.transpose()).transpose();
  out.cond_cov = stt - out.coeffs * stg.transpose();
  return out;
}

double conditional_variance(const CovarianceModel& m, const std::string& target,
                            const std::vector<std::string>& given) {
  if (m.block_dim(target) != 1) {
    throw DomainError("conditional_variance: target block must be scalar");
  }
  return conditional_moments(m, target, given).cond_cov(0, 0);
}

double partial_correlation_sq(const CovarianceModel& m, const std::string& target,
                              const std::string& var, const std::vector<std::string>& given) {
  if (m.block_dim(target) != 1 || m.block_dim(var) != 1) {
    throw DomainError("partial_correlation_sq: blocks must be scalar");
  }
  const auto t = gather_indices(m, {target});
  const auto v = gather_indices(m, {var});
  double stt, svv, stv;
  if (given.empty()) {
    stt = m.sigma(t[0], t[0]);
    svv = m.sigma(v[0], v[0]);
    stv = m.sigma(t[0], v[0]);
  } else {
    const auto g = gather_indices(m, given);
    const Eigen::MatrixXd sgg = submatrix(m.sigma, g, g);
    Eigen::LLT<Eigen::MatrixXd> llt(sgg);
    if (llt.info() != Eigen::Success) throw DomainError("partial_correlation_sq: singular given");
    const Eigen::MatrixXd stg = submatrix(m.sigma, t, g);
    const Eigen::MatrixXd svg = submatrix(m.sigma, v, g);
    stt = m.sigma(t[0], t[0]) - (stg * llt.solve(stg.transpose()))(0, 0);
    svv = m.sigma(v[0], v[0]) - (svg * llt.solve(svg.transpose()))(0, 0);
    stv = m.sigma(t[0], v[0]) - (stg * llt.solve(svg.transpose()))(0, 0);
  }
  return stv * stv / (stt * svv);
}

CovarianceModel build_ci_covariance(const CiDims& dims, std::uint64_t seed) {
  if (dims.v1 < 1 || dims.v2 < 1 || dims.d < 1) {
    throw DomainError("build_ci_covariance: dims must be >= 1");
  }
  RngStream rng(seed);
  const int base_dim = 1 + dims.v1 + dims.d;  // (Y, V1, D)
  for (int attempt = 0; attempt < 1000; ++attempt) {
    // Random PD base covariance for (Y, V1, D).
    Eigen::MatrixXd g(base_dim, base_dim);
    for (int i = 0; i < base_dim; ++i) {
      for (int j = 0; j < base_dim; ++j) g(i, j) = rng.normal();
    }
    Eigen::MatrixXd base = g * g.transpose() + 0.05 * Eigen::MatrixXd::Identity(base_dim, base_dim);

    // V2 = L V1 + E with E independent of (Y, V1, D); the partial covariance
    // of (Y, D) with V2 given V1 then vanishes identically.
    Eigen::MatrixXd loadings(dims.v2, dims.v1);
    for (int i = 0; i < dims.v2; ++i) {
      for (int j = 0; j < dims.v1; ++j) loadings(i, j) = rng.normal();
    }
    Eigen::MatrixXd noise_root(dims.v2, dims.v2);
    for (int i = 0; i < dims.v2; ++i) {
      for (int j = 0; j < dims.v2; ++j) noise_root(i, j) = rng.normal();
    }
    Eigen::MatrixXd noise =
        noise_root * noise_root.transpose() + 0.05 * Eigen::MatrixXd::Identity(dims.v2, dims.v2);

    const int n = base_dim + dims.v2;
    CovarianceModel m;
    m.blocks = {{"Y", 1}, {"V1", dims.v1}, {"V2", dims.v2}, {"D", dims.d}};
    m.sigma.resize(n, n);

    // Index maps: base order is (Y, V1, D); output order is (Y, V1, V2, D).
    const auto out_index = [&](int base_i) {
      return base_i < 1 + dims.v1 ? base_i : base_i + dims.v2;
    };
    for (int i = 0; i < base_dim; ++i) {
      for (int j = 0; j < base_dim; ++j) m.sigma(out_index(i), out_index(j)) = base(i, j);
    }
    const int v1_off = 1;
    const int v2_off = 1 + dims.v1;
    const Eigen::MatrixXd cov_v1 = base.block(v1_off, 0, dims.v1, base_dim);  // Cov(V1, base)
    const Eigen::MatrixXd cov_v2_base = loadings * cov_v1;
    for (int i = 0; i < dims.v2; ++i) {
      for (int j = 0; j < base_dim; ++j) {
        m.sigma(v2_off + i, out_index(j)) = cov_v2_base(i, j);
        m.sigma(out_index(j), v2_off + i) = cov_v2_base(i, j);
      }
    }
    const Eigen::MatrixXd var_v2 =
        loadings * base.block(v1_off, v1_off, dims.v1, dims.v1) * loadings.transpose() + noise;
    m.sigma.block(v2_off, v2_off, dims.v2, dims.v2) = var_v2;

    Eigen::LLT<Eigen::MatrixXd> llt(m.sigma);
    if (llt.info() != Eigen::Success) continue;

    // Construction contract: partial covariances of (Y, D) with V2 given V1.
    const auto check = [&](const std::string& blk) {
      const auto b = gather_indices(m, {blk});
      const auto v2 = gather_indices(m, {"V2"});
      const auto v1 = gather_indices(m, {"V1"});
      const Eigen::MatrixXd s11 = submatrix(m.sigma, v1, v1);
      const Eigen::MatrixXd part =
          submatrix(m.sigma, b, v2) -
          submatrix(m.sigma, b, v1) * s11.llt().solve(submatrix(m.sigma, v1, v2));
      return part.cwiseAbs().maxCoeff();
    };
    if (check("Y") > 1e-12 || check("D") > 1e-12) continue;
    return m;
  }
  throw DomainError("build_ci_covariance: exceeded 1000 attempts without a PD draw");
}

TermReport gaussian_term_decompose(const CovarianceModel& m,
                                   const std::vector<std::vector<std::string>>& plan_blocks) {
  if (!m.has_block("Y") || m.block_dim("Y") != 1) {
    throw DomainError("gaussian_term_decompose: needs a scalar Y block");
  }
  std::vector<std::string> given;
  if (m.has_block("D")) given.push_back("D");

  const double total = conditional_variance(m, "Y", given);
  std::vector<double> prefix_vars = {total};
  for (const auto& block : plan_blocks) {
    for (const auto& name : block) given.push_back(name);
    prefix_vars.push_back(conditional_variance(m, "Y", given));
  }

  TermReport r;
  const std::size_t u = plan_blocks.size();
  r.terms.assign(u + 1, 0.0);
  r.terms[0] = prefix_vars[u];
  for (std::size_t k = 1; k <= u; ++k) {
    r.terms[k] = prefix_vars[k - 1] - prefix_vars[k];
    std::string label;
    for (const auto& name : plan_blocks[k - 1]) {
      label += (label.empty() ? "" : "+") + name;
    }
    r.block_labels.push_back(label);
  }
  r.total = total;
  r.method = Method::closed_form;
  r.model_id = "gaussian";
  return r;
}

CovarianceModel three_level_normal_covariance(const conjugate::ThreeLevelNormalParams& p) {
  if (p.b_sq <= 0.0) {
    throw DomainError("three_level_normal_covariance: b_sq must be > 0 for a PD joint");
  }
  const int n = static_cast<int>(p.n);
  const int dim = 3 + n;  // Y, mu, nu, D(n)
  CovarianceModel m;
  m.blocks = {{"Y", 1}, {"mu", 1}, {"nu", 1}, {"D", n}};
  m.sigma.resize(dim, dim);

  const double v_nu = p.b_sq;
  const double v_mu = p.b_sq + p.tau0_sq;
  const double v_y = v_mu + p.sigma0_sq;
  // Any two distinct observables share the mu-level covariance; each row of
  // data behaves exactly like Y_{n+1}.
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      const bool i_obs = (i == 0 || i >= 3);
      const bool j_obs = (j == 0 || j >= 3);
      double v;
      if (i == j) {
        v = (i == 1) ? v_mu : (i == 2) ? v_nu : v_y;
      } else if (i_obs && j_obs) {
        v = v_mu;
      } else if ((i == 2) || (j == 2)) {
        v = v_nu;  // anything against nu
      } else {
        v = v_mu;  // mu against any observable
      }
      m.sigma(i, j) = v;
    }
  }
  return m;
}

CovarianceModel anova_covariance(const anova::AnovaParams& p) {
  const int T = static_cast<int>(p.T);
  const int B = static_cast<int>(p.B);
  const int nd = T * B;
  const int dim = 1 + T + B + nd;
  CovarianceModel m;
  m.blocks = {{"Y", 1}, {"tau", T}, {"beta", B}, {"D", nd}};
  m.sigma = Eigen::MatrixXd::Zero(dim, dim);

  const auto tau_at = [&](int i) { return 1 + i; };
  const auto beta_at = [&](int j) { return 1 + T + j; };
  const auto d_at = [&](int i, int j) { return 1 + T + B + i * B + j; };

  for (int i = 0; i < T; ++i) m.sigma(tau_at(i), tau_at(i)) = p.sigma_tau_sq;
  for (int j = 0; j < B; ++j) m.sigma(beta_at(j), beta_at(j)) = p.sigma_beta_sq;
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j < B; ++j) {
      const int dij = d_at(i, j);
      for (int k = 0; k < T; ++k) {
        for (int l = 0; l < B; ++l) {
          m.sigma(dij, d_at(k, l)) = p.sigma_tau_sq * (i == k) + p.sigma_beta_sq * (j == l) +
                                     p.sigma_eps_sq * (i == k && j == l);
        }
      }
      m.sigma(dij, tau_at(i)) = m.sigma(tau_at(i), dij) = p.sigma_tau_sq;
      m.sigma(dij, beta_at(j)) = m.sigma(beta_at(j), dij) = p.sigma_beta_sq;
    }
  }
  // The predicted cell is a future Y_11 with a fresh noise draw.
  m.sigma(0, 0) = p.sigma_tau_sq + p.sigma_beta_sq + p.sigma_eps_sq;
  m.sigma(0, tau_at(0)) = m.sigma(tau_at(0), 0) = p.sigma_tau_sq;
  m.sigma(0, beta_at(0)) = m.sigma(beta_at(0), 0) = p.sigma_beta_sq;
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j < B; ++j) {
      const double v = p.sigma_tau_sq * (i == 0) + p.sigma_beta_sq * (j == 0);
      m.sigma(0, d_at(i, j)) = m.sigma(d_at(i, j), 0) = v;
    }
  }
  return m;
}

}  // namespace varscope::gauss
