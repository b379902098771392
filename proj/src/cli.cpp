#include "varscope/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "varscope/adapters.hpp"
#include "varscope/anova.hpp"
#include "varscope/challenger.hpp"
#include "varscope/conjugate.hpp"
#include "varscope/enumerate.hpp"
#include "varscope/errors.hpp"
#include "varscope/independence.hpp"
#include "varscope/mc.hpp"
#include "varscope/model.hpp"

namespace varscope::cli {

namespace {

using nlohmann::json;

int default_threads() {
  if (const char* env = std::getenv("VARSCOPE_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

json envelope(const std::string& command, std::optional<std::uint64_t> seed = std::nullopt) {
  json doc;
  doc["command"] = command;
  doc["version"] = kVersion;
  if (seed) doc["seed"] = *seed;
  doc["warnings"] = json::array();
  return doc;
}

void emit(std::ostream& out, const json& doc) { out << doc.dump(2) << "\n"; }

std::vector<double> parse_grid(const std::string& spec_text, std::string& axis) {
  const auto eq = spec_text.find('=');
  if (eq == std::string::npos) throw DomainError("sweep spec must look like axis=start:stop:step");
  axis = spec_text.substr(0, eq);
  const std::string rest = spec_text.substr(eq + 1);
  double start, stop, step;
  char c1, c2;
  std::istringstream ss(rest);
  if (!(ss >> start >> c1 >> stop >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0.0) {
    throw DomainError("sweep spec must look like axis=start:stop:step with step > 0");
  }
  std::vector<double> grid;
  for (double v = start; v <= stop + 1e-12 * std::max(1.0, std::fabs(stop)); v += step) {
    grid.push_back(v);
  }
  if (grid.empty()) throw DomainError("sweep grid is empty");
  return grid;
}

json report_json(const TermReport& r) { return to_json(r); }

void report_csv(const TermReport& r, std::ostream& out) {
  out << "k,label,value\n";
  const auto labels = r.display_labels();
  const auto values = r.display_terms();
  const std::size_t u = r.block_count();
  out << "0," << labels[0] << "," << values[0] << "\n";
  for (std::size_t pos = 1; pos < values.size(); ++pos) {
    out << (u - pos + 1) << "," << labels[pos] << "," << values[pos] << "\n";
  }
  out << "total,," << r.total << "\n";
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

int run_conjugate(CLI::App& cmd, std::ostream& out) {
  const std::string family = cmd.get_option("family")->as<std::string>();
  const std::string order = cmd.get_option("--order")->as<std::string>();
  const std::string out_format = cmd.get_option("--out")->as<std::string>();
  const auto opt = [&](const char* name) { return cmd.get_option(name); };
  const auto num = [&](const char* name) { return opt(name)->as<double>(); };
  const auto has = [&](const char* name) { return opt(name)->count() > 0; };

  TermReport report;
  if (family == "normal-known-var") {
    conjugate::NormalKnownVarParams p;
    p.mu0 = num("--mu0");
    p.tau0_sq = num("--t2");
    p.sigma0_sq = num("--s2e");
    p.n = static_cast<long>(num("--n"));
    report = conjugate::normal_known_var_decompose(p);
  } else if (family == "beta-binomial") {
    conjugate::BetaBinomialParams p;
    p.alpha = num("--alpha");
    p.beta = num("--beta");
    p.successes = static_cast<long>(num("--S"));
    p.trials_total = static_cast<long>(num("--trials"));
    p.m_next = static_cast<long>(num("--m-next"));
    report = conjugate::beta_binomial_decompose(p);
  } else if (family == "poisson-gamma") {
    conjugate::PoissonConjugateParams p;
    p.alpha = num("--alpha");
    p.beta = num("--beta");
    p.s = num("--s");
    p.n = static_cast<long>(num("--n"));
    report = conjugate::poisson_conjugate_decompose(p);
  } else if (family == "nng") {
    conjugate::NNGParams p;
    p.mu0 = num("--mu0");
    p.kappa0 = num("--kappa0");
    p.alpha0 = num("--alpha0");
    p.beta0 = num("--beta0");
    if (has("--data")) {
      const auto y = parse_number_list(opt("--data")->as<std::string>());
      p = conjugate::NNGParams::from_data(p.mu0, p.kappa0, p.alpha0, p.beta0, y);
    } else {
      p.n = static_cast<long>(num("--n"));
      p.ybar = num("--ybar");
      p.sum_sq = num("--sumsq");
    }
    const auto o = order == "lambda" || order == "lambda_first"
                       ? conjugate::NngOrder::lambda_first
                       : conjugate::NngOrder::mu_first;
    report = conjugate::nng_decompose(p, o);
  } else if (family == "bpg") {
    conjugate::BPGParams p;
    p.p = num("--p");
    p.a = num("--a");
    p.b = num("--b");
    p.s = num("--s");
    p.n = static_cast<long>(num("--n"));
    const auto o = order == "lambda" || order == "lambda_first"
                       ? conjugate::BpgOrder::lambda_first
                       : conjugate::BpgOrder::N_first;
    report = conjugate::bpg_decompose(p, o);
  } else if (family == "normal-3level") {
    conjugate::ThreeLevelNormalParams p;
    p.sigma0_sq = num("--s02");
    p.tau0_sq = num("--t02");
    p.a = num("--a");
    p.b_sq = num("--b2");
    p.n = static_cast<long>(num("--n"));
    report = conjugate::three_level_normal_decompose(p).report;
  } else {
    throw DomainError("unknown conjugate family '" + family + "'");
  }

  if (out_format == "csv") {
    report_csv(report, out);
  } else {
    json doc = envelope("conjugate");
    doc["result"] = report_json(report);
    emit(out, doc);
  }
  return 0;
}

int run_anova(CLI::App& cmd, std::ostream& out) {
  anova::AnovaParams p;
  p.T = cmd.get_option("--T")->as<long>();
  p.B = cmd.get_option("--B")->as<long>();
  p.sigma_eps_sq = cmd.get_option("--s2e")->as<double>();
  p.sigma_tau_sq = cmd.get_option("--s2t")->as<double>();
  p.sigma_beta_sq = cmd.get_option("--s2b")->as<double>();
  const std::string order_name = cmd.get_option("--order")->as<std::string>();
  const auto order = order_name == "beta" ? anova::AnovaOrder::beta_outer
                                          : anova::AnovaOrder::tau_outer;
  const std::string out_format = cmd.get_option("--out")->as<std::string>();
  const std::string sweep_spec = cmd.get_option("--sweep")->as<std::string>();

  if (!sweep_spec.empty()) {
    std::string axis_text;
    const auto grid = parse_grid(sweep_spec, axis_text);
    const auto axis = anova::parse_axis(axis_text);
    const auto rows = anova::anova_sweep(p, axis, grid, order);
    if (out_format == "csv") {
      out << "axis,term1,term2,term3,total,prop1,prop2,prop3\n";
      for (const auto& r : rows) {
        out << r.axis_value << ',' << r.term1 << ',' << r.term2 << ',' << r.term3 << ','
            << r.total << ',' << r.prop1 << ',' << r.prop2 << ',' << r.prop3 << "\n";
      }
    } else {
      json doc = envelope("anova");
      json arr = json::array();
      for (const auto& r : rows) {
        arr.push_back({{"axis", r.axis_value},
                       {"term1", r.term1},
                       {"term2", r.term2},
                       {"term3", r.term3},
                       {"total", r.total},
                       {"prop1", r.prop1},
                       {"prop2", r.prop2},
                       {"prop3", r.prop3}});
      }
      doc["result"] = {{"axis", anova::axis_name(axis)}, {"rows", arr}};
      emit(out, doc);
    }
    return 0;
  }

  const auto b = anova::anova_decompose(p, order);
  if (out_format == "csv") {
    out << "term1,term2,term3,total,prop1,prop2,prop3\n";
    out << b.term1 << ',' << b.term2 << ',' << b.term3 << ',' << b.total << ','
        << b.term1 / b.total << ',' << b.term2 / b.total << ',' << b.term3 / b.total << "\n";
  } else {
    json doc = envelope("anova");
    doc["result"] = {{"term1", b.term1},
                     {"term2", b.term2},
                     {"term3", b.term3},
                     {"total", b.total},
                     {"a", b.a},
                     {"b", b.b},
                     {"post_var_tau", b.post_var_tau},
                     {"post_cov_tau", b.post_cov_tau},
                     {"order", order_name}};
    emit(out, doc);
  }
  return 0;
}

int run_mc(CLI::App& cmd, std::ostream& out) {
  const std::string model_path = cmd.get_option("--model")->as<std::string>();
  std::ifstream in(model_path);
  if (!in) throw DomainError("cannot open model file " + model_path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed model file: ") + e.what());
  }
  const auto spec = hierarchy_from_json(doc);

  ExpansionPlan plan;
  const std::string plan_text = cmd.get_option("--plan")->as<std::string>();
  if (!plan_text.empty()) {
    plan = parse_plan_string(plan_text);
  } else if (auto file_plan = plan_from_json(doc)) {
    plan = *file_plan;
  } else {
    throw DomainError("no plan: pass --plan or include one in the model file");
  }
  if (plan.latent.empty()) {
    // Latent set defaults to the declared variables not named in any block.
    std::set<std::string> in_blocks;
    for (const auto& b : plan.blocks) in_blocks.insert(b.begin(), b.end());
    for (const auto& l : spec.levels) {
      if (!in_blocks.count(l.name)) plan.latent.push_back(l.name);
    }
  }
  validate_plan(spec, plan);

  mc::McBudget budget;
  budget.n_outer = cmd.get_option("--outer")->as<std::size_t>();
  budget.n_inner = cmd.get_option("--inner")->as<std::size_t>();
  budget.seed = cmd.get_option("--seed")->as<std::uint64_t>();
  const int threads = cmd.get_option("--threads")->as<int>();

  const auto adapter = mc::make_adapter(spec, plan);
  const auto report = mc::estimate_decomposition(*adapter, plan, budget, threads);

  json env = envelope("mc", budget.seed);
  env["result"] = report_json(report);
  emit(out, env);
  return 0;
}

int run_enumerate(CLI::App& cmd, std::ostream& out) {
  enumeration::ScopeQuery q;
  q.K = cmd.get_option("--K")->as<int>();
  if (cmd.get_option("--M")->count() > 0) q.M = cmd.get_option("--M")->as<int>();
  if (cmd.get_option("--u")->count() > 0) q.u = cmd.get_option("--u")->as<int>();
  const bool list = cmd.get_option("--list")->as<bool>();
  const bool allow_large = cmd.get_option("--allow-large")->as<bool>();

  const auto count = enumeration::count_expansions(q);
  json doc = envelope("enumerate");
  json result;
  if (count <= enumeration::BigCount(9007199254740992LL)) {
    result["count"] = static_cast<std::int64_t>(count);
  } else {
    result["count"] = count.str();
  }
  if (list) {
    json plans = json::array();
    enumeration::for_each_plan(
        q.K,
        [&](const ExpansionPlan& p) {
          if (q.M && p.manifest_count() != static_cast<std::size_t>(*q.M)) return;
          if (q.u && p.u() != static_cast<std::size_t>(*q.u)) return;
          plans.push_back({{"blocks", p.blocks}, {"latent", p.latent}});
        },
        std::nullopt, allow_large);
    result["plans"] = std::move(plans);
  }
  doc["result"] = std::move(result);
  emit(out, doc);
  return 0;
}

int run_implications(CLI::App& cmd, std::ostream& out) {
  const int K = cmd.get_option("--K")->as<int>();
  std::vector<std::string> zero_texts;
  if (cmd.get_option("--zero")->count() > 0) {
    zero_texts = cmd.get_option("--zero")->as<std::vector<std::string>>();
  }
  const std::string ci_path = cmd.get_option("--ci")->as<std::string>();
  const std::string out_format = cmd.get_option("--out")->as<std::string>();

  std::set<indep::CIStatement> ci;
  if (!ci_path.empty()) {
    std::ifstream in(ci_path);
    if (!in) throw DomainError("cannot open ci file " + ci_path);
    json doc;
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw DomainError(std::string("malformed ci file: ") + e.what());
    }
    ci = indep::ci_from_json(doc);
  }

  std::vector<indep::ZeroFact> facts;
  for (const auto& text : zero_texts) {
    indep::ZeroFact f;
    f.term = indep::parse_term_ref(text);
    facts.push_back(std::move(f));
  }

  const auto graph = facts.empty() ? indep::build_implication_graph(K, ci)
                                   : indep::propagate_zero_terms(facts, ci, K);
  if (out_format == "dot") {
    out << indep::to_dot(graph);
  } else {
    json doc = envelope("implications");
    doc["result"] = indep::to_json(graph);
    emit(out, doc);
  }
  return 0;
}

int run_bma(CLI::App& cmd, std::ostream& out) {
  const std::string path = cmd.get_option("--draws")->as<std::string>();
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open draws file " + path);
  const auto draws = bma::labeled_draws_from_csv(in);
  const std::string order = cmd.get_option("--order")->as<std::string>();

  json doc = envelope("bma");
  if (order == "v1,v2") {
    doc["result"] = report_json(bma::decompose_labeled_draws(draws, bma::DrawOrder::v1_then_v2));
  } else if (order == "v2,v1") {
    doc["result"] = report_json(bma::decompose_labeled_draws(draws, bma::DrawOrder::v2_then_v1));
  } else if (order == "both") {
    doc["result"] = {
        {"v1_then_v2", report_json(bma::decompose_labeled_draws(draws, bma::DrawOrder::v1_then_v2))},
        {"v2_then_v1", report_json(bma::decompose_labeled_draws(draws, bma::DrawOrder::v2_then_v1))}};
  } else {
    throw DomainError("--order must be v1,v2 or v2,v1 or both");
  }
  emit(out, doc);
  return 0;
}

int run_challenger_cmd(CLI::App& cmd, std::ostream& out) {
  bma::ChallengerConfig cfg;
  cfg.data_path = cmd.get_option("--data")->as<std::string>();
  cfg.seed = cmd.get_option("--seed")->as<std::uint64_t>();
  cfg.draws_per_model = cmd.get_option("--draws-per-model")->as<std::size_t>();
  cfg.burn_in = cmd.get_option("--burn-in")->as<std::size_t>();
  cfg.threads = cmd.get_option("--threads")->as<int>();
  const std::string scaling = cmd.get_option("--scaling")->as<std::string>();
  if (scaling == "raw") {
    cfg.scaling = bma::CovariateScaling::raw;
  } else if (scaling == "scale-only") {
    cfg.scaling = bma::CovariateScaling::scale_only;
  } else if (scaling != "standardize") {
    throw DomainError("--scaling must be standardize, scale-only or raw");
  }
  const std::string emit_path = cmd.get_option("--emit-draws")->as<std::string>();

  std::ifstream in(cfg.data_path);
  if (!in) throw DomainError("cannot open data file " + cfg.data_path);
  const auto data = bma::orings_from_csv(in);
  const auto result = bma::run_challenger(cfg, data);

  if (!emit_path.empty()) {
    std::ofstream draws_out(emit_path);
    if (!draws_out) throw DomainError("cannot write draws file " + emit_path);
    bma::write_labeled_draws_csv(result.draws, draws_out);
  }

  json doc = envelope("challenger", cfg.seed);
  doc["result"] = {{"by_link_then_model", report_json(result.by_link_then_model)},
                   {"by_model_then_link", report_json(result.by_model_then_link)},
                   {"posterior_mean", result.posterior_mean}};
  json cells = json::array();
  for (const auto& c : result.cells) {
    cells.push_back({{"link", c.link},
                     {"model", c.model},
                     {"weight", c.weight},
                     {"mean", c.mean},
                     {"var", c.var},
                     {"acceptance", c.acceptance}});
  }
  doc["result"]["cells"] = std::move(cells);
  for (const auto& w : result.warnings) doc["warnings"].push_back(w);
  emit(out, doc);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"varscope: law-of-total-variance expansions of posterior predictive variance"};
  app.require_subcommand(1);

  auto* conj = app.add_subcommand("conjugate", "closed-form conjugate decompositions");
  std::string family;
  conj->add_option("family", family, "family tag")->required();
  conj->add_option("--mu0", "prior mean")->default_val(0.0);
  conj->add_option("--t2", "prior variance tau0^2")->default_val(1.0);
  conj->add_option("--s2e", "likelihood variance sigma0^2")->default_val(1.0);
  conj->add_option("--n", "sample count")->default_val(0);
  conj->add_option("--alpha", "prior shape alpha")->default_val(1.0);
  conj->add_option("--beta", "prior shape beta")->default_val(1.0);
  conj->add_option("--S", "total successes")->default_val(0);
  conj->add_option("--trials", "total observed trials")->default_val(0);
  conj->add_option("--m-next", "future trial count")->default_val(1);
  conj->add_option("--s", "sum of observations")->default_val(0.0);
  conj->add_option("--kappa0", "prior precision scale")->default_val(1.0);
  conj->add_option("--alpha0", "gamma prior shape")->default_val(2.0);
  conj->add_option("--beta0", "gamma prior rate")->default_val(1.0);
  conj->add_option("--data", "comma-separated observations")->default_val(std::string());
  conj->add_option("--ybar", "data mean")->default_val(0.0);
  conj->add_option("--sumsq", "sum of squared observations")->default_val(0.0);
  conj->add_option("--p", "success probability")->default_val(0.5);
  conj->add_option("--a", "gamma shape / top-level mean")->default_val(1.0);
  conj->add_option("--b", "gamma rate")->default_val(1.0);
  conj->add_option("--s02", "sigma0^2")->default_val(1.0);
  conj->add_option("--t02", "tau0^2")->default_val(1.0);
  conj->add_option("--b2", "hyperprior variance b^2")->default_val(1.0);
  conj->add_option("--order", "conditioning order")->default_val(std::string());
  conj->add_option("--out", "json|csv")->default_val(std::string("json"));

  auto* anova_cmd = app.add_subcommand("anova", "two-way random coefficient model");
  anova_cmd->add_option("--T", "treatment count")->required();
  anova_cmd->add_option("--B", "block count")->required();
  anova_cmd->add_option("--s2e", "sigma_eps^2")->required();
  anova_cmd->add_option("--s2t", "sigma_tau^2")->required();
  anova_cmd->add_option("--s2b", "sigma_beta^2")->required();
  anova_cmd->add_option("--order", "tau|beta")->default_val(std::string("tau"));
  anova_cmd->add_option("--sweep", "axis=start:stop:step")->default_val(std::string());
  anova_cmd->add_option("--out", "json|csv")->default_val(std::string("json"));

  auto* mc_cmd = app.add_subcommand("mc", "nested Monte-Carlo decomposition");
  mc_cmd->add_option("--model", "hierarchy JSON document")->required();
  mc_cmd->add_option("--plan", "plan string, e.g. mu|lambda2")->default_val(std::string());
  mc_cmd->add_option("--outer", "outer draws")->default_val(10000);
  mc_cmd->add_option("--inner", "inner draws")->default_val(64);
  mc_cmd->add_option("--seed", "rng seed")->default_val(1);
  mc_cmd->add_option("--threads", "worker count")->default_val(default_threads());

  auto* enum_cmd = app.add_subcommand("enumerate", "count / list C-scope expansions");
  enum_cmd->add_option("--K", "variable count")->required();
  enum_cmd->add_option("--M", "manifest count");
  enum_cmd->add_option("--u", "block count");
  enum_cmd->add_flag("--list", "emit the plans as JSON");
  enum_cmd->add_flag("--allow-large", "lift the K <= 12 enumeration guard");

  auto* impl_cmd = app.add_subcommand("implications", "zero-term implication graph");
  impl_cmd->add_option("--K", "variable count")->required();
  impl_cmd->add_option("--zero", "zero facts like 123:3")->take_all();
  impl_cmd->add_option("--ci", "conditional-independence JSON file")->default_val(std::string());
  impl_cmd->add_option("--out", "dot|json")->default_val(std::string("json"));

  auto* bma_cmd = app.add_subcommand("bma", "empirical decomposition of labeled draws");
  bma_cmd->add_option("--draws", "labeled draws CSV")->required();
  bma_cmd->add_option("--order", "v1,v2 | v2,v1 | both")->default_val(std::string("both"));

  auto* chall = app.add_subcommand("challenger", "o-ring failure probability pipeline");
  chall->add_option("--data", "orings CSV")->required();
  chall->add_option("--seed", "rng seed")->default_val(1);
  chall->add_option("--draws-per-model", "retained draws per cell")->default_val(20000);
  chall->add_option("--burn-in", "burn-in iterations per cell")->default_val(4000);
  chall->add_option("--threads", "worker count")->default_val(default_threads());
  chall->add_option("--scaling", "standardize|scale-only|raw")->default_val(std::string("standardize"));
  chall->add_option("--emit-draws", "write weighted draw rows to this CSV")
      ->default_val(std::string());

  std::vector<const char*> argv;
  argv.push_back("varscope");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return 2;
  }

  try {
    if (conj->parsed()) return run_conjugate(*conj, out);
    if (anova_cmd->parsed()) return run_anova(*anova_cmd, out);
    if (mc_cmd->parsed()) return run_mc(*mc_cmd, out);
    if (enum_cmd->parsed()) return run_enumerate(*enum_cmd, out);
    if (impl_cmd->parsed()) return run_implications(*impl_cmd, out);
    if (bma_cmd->parsed()) return run_bma(*bma_cmd, out);
    if (chall->parsed()) return run_challenger_cmd(*chall, out);
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "no subcommand\n";
  return 2;
}

}  // namespace varscope::cli
