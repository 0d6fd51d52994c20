// Command-line front end: simulate, fit, predict, evaluate, crossval.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "semicomp/errors.hpp"
#include "semicomp/io.hpp"

using namespace semicomp;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitEstimation = 3;
constexpr int kExitPrediction = 4;

int exit_code(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Config:
    case ErrorCode::Parse: return kExitConfig;
    case ErrorCode::NotIdentified:
    case ErrorCode::EventNotObserved: return kExitPrediction;
    default: return kExitEstimation;
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::Config, "cannot write " + path);
  return f;
}

RunConfig load_config(const std::string& path) { return path.empty() ? parse_config("") : read_config_file(path); }

std::string fmt(double x, int prec = 4) {
  if (!std::isfinite(x)) return "NA";
  char b[64];
  std::snprintf(b, sizeof b, "%.*f", prec, x);
  return b;
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' '); }

json read_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Parse, "cannot open " + path);
  std::string line, body;
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') body += line + "\n";
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path + ": " + e.what());
  }
}

FittedJointModel load_model(const std::string& path) {
  try {
    return model_from_json(read_model_json(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path + ": " + e.what());
  }
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      out.push_back(parse_double(part, what));
    } catch (const Error& e) {
      throw Error(ErrorCode::Config, e.what());
    }
  }
  return out;
}

// ---- simulate

struct SimulateArgs {
  std::string config, preset, out, test_out, latent, test_latent;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

int run_simulate(const SimulateArgs& a) {
  RunConfig cfg = load_config(a.config);
  if (!a.preset.empty()) {
    cfg.raw["sim.preset"] = a.preset;
    std::string text;
    for (const auto& [k, v] : cfg.raw) text += k + " = " + v + "\n";
    cfg = parse_config(text);
  }
  if (a.seed_set) cfg.sim.seed = a.seed;
  const SimResult sim = simulate_dataset(cfg.sim, a.threads);
  const std::string prov = provenance_line("simulate", cfg.sim.seed, cfg);
  auto emit = [&](const std::string& path, auto&& body) {
    if (path.empty()) return;
    std::ofstream f = open_out(path);
    f << prov << '\n';
    body(f);
  };
  emit(a.out, [&](std::ostream& f) { write_dataset(f, sim.train); });
  emit(a.test_out, [&](std::ostream& f) { write_dataset(f, sim.test); });
  emit(a.latent, [&](std::ostream& f) { write_latent(f, sim.train, sim.train_latent); });
  emit(a.test_latent, [&](std::ostream& f) { write_latent(f, sim.test, sim.test_latent); });
  std::cout << "simulated " << sim.train.size() << " training and " << sim.test.size() << " test subjects (K="
            << cfg.sim.K << ")\n";
  return kExitOk;
}

// ---- fit

struct FitArgs {
  std::string data, config, out;
  int bootstrap = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

int run_fit(const FitArgs& a) {
  RunConfig cfg = load_config(a.config);
  const Dataset data = read_dataset_file(a.data);
  if (a.seed_set) cfg.bootstrap.seed = a.seed;
  cfg.fit.threads = a.threads;
  FittedJointModel m;
  std::optional<BootstrapResult> boot;
  try {
    m = fit_joint_model(data, cfg.fit);
    if (a.bootstrap > 0) {
      BootstrapOptions bo = cfg.bootstrap;
      bo.B = a.bootstrap;
      boot = bootstrap_fit(data, cfg.fit, bo);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config || e.code() == ErrorCode::Parse) throw;
    std::cerr << "estimation failed: " << e.what() << '\n';
    return kExitEstimation;
  }

  json j = model_to_json(m);
  if (boot) {
    j["bootstrap"] = {{"B", boot->replicates},
                      {"failures", boot->failures},
                      {"tau_alpha_ci", {boot->tau_alpha_ci.lo, boot->tau_alpha_ci.hi}}};
    json th = json::array();
    for (const auto& ci : boot->tau_theta_ci) th.push_back({ci.lo, ci.hi});
    j["bootstrap"]["tau_theta_ci"] = th;
  }
  {
    std::ofstream f = open_out(a.out);
    f << provenance_line("fit", cfg.bootstrap.seed, cfg) << '\n' << j.dump(2) << '\n';
  }

  std::cout << "Association estimates (" << family_name(m.family) << " copula, n=" << data.size() << ", K=" << m.K
            << ")\n";
  std::cout << pad("parameter", 14) << pad("tau", 10) << pad("theta", 10) << (boot ? "95% CI" : "") << '\n';
  if (m.alpha_applicable) {
    std::cout << pad("alpha", 14) << pad(fmt(m.tau_alpha), 10) << pad(fmt(m.alpha), 10);
    if (boot) std::cout << "[" << fmt(boot->tau_alpha_ci.lo) << ", " << fmt(boot->tau_alpha_ci.hi) << "]";
    std::cout << '\n';
  }
  for (int k = 0; k < m.K; ++k) {
    std::cout << pad("theta" + std::to_string(k + 1), 14) << pad(fmt(m.thetas[k].tau), 10)
              << pad(fmt(m.thetas[k].theta), 10);
    if (boot) std::cout << "[" << fmt(boot->tau_theta_ci[k].lo) << ", " << fmt(boot->tau_theta_ci[k].hi) << "]";
    std::cout << '\n';
  }
  std::cout << "loglik " << fmt(m.loglik, 3) << "  AIC " << fmt(model_aic(m), 3) << '\n';
  for (const auto& w : m.diagnostics.warnings) std::cout << "warning: " << w << '\n';
  return kExitOk;
}

// ---- predict

struct PredictArgs {
  std::string model, query, out, summary, method = "dp", times, cqst = "0.025,0.5,0.975";
  int k = 0;
  double t_star = -1.0;
};

int run_predict(const PredictArgs& a) {
  const FittedJointModel m = load_model(a.model);
  std::ifstream qin(a.query);
  if (!qin) throw Error(ErrorCode::Parse, "cannot open " + a.query);
  const auto rows = read_queries(qin, m.K);
  const double t_star = a.t_star > 0.0 ? a.t_star : m.t_u;
  const auto levels = parse_list(a.cqst, "--cqst");
  std::vector<double> times;
  if (!a.times.empty()) times = parse_list(a.times, "--times");

  std::vector<MethodSpec> specs;
  const bool all = a.method == "all";
  if (a.method == "dp" || all) specs.push_back({Method::DP, -1});
  if (a.method == "p0" || all) specs.push_back({Method::P0, -1});
  if (all) {
    for (int k = 0; k < m.K; ++k) specs.push_back({Method::Pk, k});
    for (int k = 0; k < m.K; ++k) specs.push_back({Method::Pkm, k});
  } else if (a.method == "pk" || a.method == "pkm") {
    if (a.k < 1 || a.k > m.K) throw Error(ErrorCode::Config, "--k: expected an event index in 1.." + std::to_string(m.K));
    specs.push_back({a.method == "pk" ? Method::Pk : Method::Pkm, a.k - 1});
  }
  if (specs.empty()) throw Error(ErrorCode::Config, "--method: expected dp, p0, pk, pkm or all");

  RunConfig prov_cfg;
  prov_cfg.raw = {{"method", a.method}, {"t_star", format_double(t_star)}};
  std::ofstream out = open_out(a.out);
  out << provenance_line("predict", 0, prov_cfg) << "\nid,method,t,S\n";
  std::ofstream sum;
  if (!a.summary.empty()) {
    sum = open_out(a.summary);
    sum << provenance_line("predict", 0, prov_cfg) << "\nid,method,landmark,cmst";
    for (double l : levels) sum << ",cqst_" << format_double(l);
    sum << ",pi_lo,pi_hi,pi_right_censored\n";
  }

  for (const auto& row : rows) {
    for (const auto& spec : specs) {
      if (all && (spec.method == Method::Pk || spec.method == Method::Pkm)) {
        bool seen = false;
        for (const auto& e : row.query.events) seen = seen || e.first == spec.k;
        if (!seen) continue;
      }
      SurvivalPrediction p;
      try {
        p = spec.method == Method::DP ? predict_survival_dp(row.query, m)
                                      : predict_baseline(row.query, m, spec.method, spec.k);
      } catch (const Error& e) {
        std::cerr << "subject " << row.id << " (" << spec.label() << "): " << e.what() << '\n';
        return exit_code(e);
      }
      const std::vector<double> grid = times.empty() ? prediction_grid(p, m.t_u) : times;
      for (double t : grid) {
        if (t < p.landmark) continue;
        out << row.id << ',' << spec.label() << ',' << format_double(t) << ',' << format_double(p(t)) << '\n';
      }
      if (sum.is_open()) {
        const double ts = std::max(t_star, p.landmark);
        sum << row.id << ',' << spec.label() << ',' << format_double(p.landmark) << ','
            << format_double(cmst(p, ts));
        for (double l : levels) {
          const auto q = try_cqst(p, l, m.t_u);
          sum << ',' << (q ? format_double(*q) : "NA");
        }
        try {
          const PredictionInterval iv = prediction_interval(p, m.t_u, ts);
          sum << ',' << format_double(iv.lo) << ',' << format_double(iv.hi) << ',' << (iv.right_censored ? 1 : 0);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NotIdentified) throw;
          sum << ",NA,NA,NA";
        }
        sum << '\n';
      }
    }
  }
  return kExitOk;
}

// ---- evaluate / crossval

json report_json(const EvaluationReport& r) {
  json j;
  j["n"] = r.n;
  j["unpredictable"] = r.unpredictable;
  j["dropped_weights"] = r.dropped_weights;
  j["t_star"] = r.config.t_star;
  j["grid"] = r.grid;
  json ms = json::array();
  for (const auto& m : r.methods) {
    auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
    json aucs = json::array();
    for (double x : m.auc_curve) aucs.push_back(num(x));
    ms.push_back({{"method", m.spec.label()},
                  {"mspe", num(m.mspe)},
                  {"qpe", num(m.qpe)},
                  {"ibs", num(m.ibs)},
                  {"auc", num(m.auc)},
                  {"cp", num(m.cp)},
                  {"mid", num(m.mid)},
                  {"right_censored_intervals", m.right_censored},
                  {"relative_to_dp", {{"mspe", num(m.rel_mspe)}, {"qpe", num(m.rel_qpe)}, {"ibs", num(m.rel_ibs)}}},
                  {"bs_curve", m.bs_curve},
                  {"auc_curve", aucs}});
  }
  j["methods"] = ms;
  return j;
}

void print_report(const EvaluationReport& r) {
  std::cout << pad("method", 8) << pad("MSPE", 16) << pad("QPE", 16) << pad("IBS", 16) << pad("AUC", 8)
            << pad("CP", 8) << "MID\n";
  for (const auto& m : r.methods) {
    // Relative accuracy: DP error over the method's error.
    auto cell = [](double v, double rel) { return fmt(v) + " (" + fmt(1.0 / rel, 2) + ")"; };
    std::cout << pad(m.spec.label(), 8) << pad(cell(m.mspe, m.rel_mspe), 16) << pad(cell(m.qpe, m.rel_qpe), 16)
              << pad(cell(m.ibs, m.rel_ibs), 16) << pad(fmt(m.auc, 3), 8) << pad(fmt(m.cp, 3), 8) << fmt(m.mid, 3)
              << '\n';
  }
  if (r.unpredictable) std::cout << r.unpredictable << " subject(s) without terminal mass past the landmark skipped\n";
}

struct EvaluateArgs {
  std::string model, data, latent, config, out, curves;
  int threads = 0;
};

int run_evaluate(const EvaluateArgs& a) {
  const RunConfig cfg = load_config(a.config);
  const FittedJointModel m = load_model(a.model);
  const Dataset data = read_dataset_file(a.data);
  if (data.K != m.K) throw Error(ErrorCode::Parse, "data and model disagree on K");
  std::optional<std::vector<double>> death;
  if (!a.latent.empty()) {
    std::ifstream in(a.latent);
    if (!in) throw Error(ErrorCode::Parse, "cannot open " + a.latent);
    death = read_latent_death(in);
    if (death->size() != data.size()) throw Error(ErrorCode::Parse, "latent file row count differs from data");
  }
  const EvaluationReport r = evaluate(m, data, m.censoring, cfg.metric, default_methods(m.K), death, a.threads);
  const std::string prov = provenance_line("evaluate", 0, cfg);
  if (!a.out.empty()) {
    std::ofstream f = open_out(a.out);
    f << prov << '\n' << report_json(r).dump(2) << '\n';
  }
  if (!a.curves.empty()) {
    std::ofstream f = open_out(a.curves);
    f << prov << "\nmethod,t,bs,auc\n";
    for (const auto& mr : r.methods)
      for (std::size_t j = 0; j < r.grid.size(); ++j)
        f << mr.spec.label() << ',' << format_double(r.grid[j]) << ',' << format_double(mr.bs_curve[j]) << ','
          << (std::isfinite(mr.auc_curve[j]) ? format_double(mr.auc_curve[j]) : "") << '\n';
  }
  print_report(r);
  return kExitOk;
}

struct CrossvalArgs {
  std::string data, config, out;
  int folds = 0, repeats = 0;
  double random = 0.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

int run_crossval(const CrossvalArgs& a) {
  RunConfig cfg = load_config(a.config);
  const Dataset data = read_dataset_file(a.data);
  if (a.folds > 0) {
    cfg.cv.kind = CvScheme::Kind::KFold;
    cfg.cv.folds = a.folds;
  }
  if (a.random > 0.0) {
    cfg.cv.kind = CvScheme::Kind::Random;
    cfg.cv.test_fraction = a.random;
  }
  if (a.repeats > 0) cfg.cv.repeats = a.repeats;
  if (a.seed_set) cfg.cv.seed = a.seed;
  CvReport r;
  try {
    r = cross_validate(data, cfg.fit, cfg.metric, cfg.cv, a.threads);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config || e.code() == ErrorCode::Parse) throw;
    std::cerr << "cross-validation failed: " << e.what() << '\n';
    return kExitEstimation;
  }
  json j;
  j["fits"] = r.fits;
  j["failures"] = r.failures;
  json ms = json::array();
  for (const auto& s : r.methods)
    ms.push_back({{"method", s.label},
                  {"mspe", {s.mspe_mean, s.mspe_sd}},
                  {"qpe", {s.qpe_mean, s.qpe_sd}},
                  {"ibs", {s.ibs_mean, s.ibs_sd}},
                  {"auc", {s.auc_mean, s.auc_sd}}});
  j["methods"] = ms;
  if (!a.out.empty()) {
    std::ofstream f = open_out(a.out);
    f << provenance_line("crossval", cfg.cv.seed, cfg) << '\n' << j.dump(2) << '\n';
  }
  std::cout << r.fits << " fits, " << r.failures << " failed\n";
  std::cout << pad("method", 8) << pad("MSPE (SD)", 20) << pad("QPE (SD)", 20) << pad("IBS (SD)", 20) << "AUC (SD)\n";
  for (const auto& s : r.methods) {
    auto cell = [](double m, double sd) { return fmt(m) + " (" + fmt(sd) + ")"; };
    std::cout << pad(s.label, 8) << pad(cell(s.mspe_mean, s.mspe_sd), 20) << pad(cell(s.qpe_mean, s.qpe_sd), 20)
              << pad(cell(s.ibs_mean, s.ibs_sd), 20) << cell(s.auc_mean, s.auc_sd) << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint copula modelling of intermediate and terminal events with dynamic survival prediction"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Generate a simulated data set");
  sim->add_option("--config", sa.config, "Configuration file");
  sim->add_option("--preset", sa.preset, "Simulation preset")->check(CLI::IsMember({"ex1", "ex2", "ex3"}));
  sim->add_option("--out", sa.out, "Training data CSV")->required();
  sim->add_option("--test-out", sa.test_out, "Test data CSV");
  sim->add_option("--latent", sa.latent, "Latent truths for the training data");
  sim->add_option("--test-latent", sa.test_latent, "Latent truths for the test data");
  auto* sim_seed = sim->add_option("--seed", sa.seed, "Random seed");
  sim->add_option("--threads", sa.threads, "Worker threads (0 = all cores)");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Estimate the joint model");
  fit->add_option("--data", fa.data, "Data CSV")->required();
  fit->add_option("--config", fa.config, "Configuration file");
  fit->add_option("--out", fa.out, "Model JSON")->required();
  fit->add_option("--bootstrap", fa.bootstrap, "Bootstrap replicates for percentile intervals");
  auto* fit_seed = fit->add_option("--seed", fa.seed, "Bootstrap seed");
  fit->add_option("--threads", fa.threads, "Worker threads (0 = all cores)");

  PredictArgs pa;
  auto* pred = app.add_subcommand("predict", "Predict conditional survival from a fitted model");
  pred->add_option("--model", pa.model, "Model JSON")->required();
  pred->add_option("--query", pa.query, "Query CSV: id, t1..tK (empty = not observed)")->required();
  pred->add_option("--out", pa.out, "Survival curve CSV")->required();
  pred->add_option("--summary", pa.summary, "CMST / CQST / interval CSV");
  pred->add_option("--method", pa.method, "dp, p0, pk, pkm or all")
      ->check(CLI::IsMember({"dp", "p0", "pk", "pkm", "all"}));
  pred->add_option("--k", pa.k, "Event index (1-based) for pk / pkm");
  pred->add_option("--times", pa.times, "Comma-separated evaluation times");
  pred->add_option("--t-star", pa.t_star, "Restriction time for CMST (default: end of follow-up)");
  pred->add_option("--cqst", pa.cqst, "Comma-separated quantile levels");

  EvaluateArgs ea;
  auto* ev = app.add_subcommand("evaluate", "Score predictions against observed outcomes");
  ev->add_option("--model", ea.model, "Model JSON")->required();
  ev->add_option("--data", ea.data, "Data CSV to score")->required();
  ev->add_option("--latent", ea.latent, "Latent truths (true death times) for the same rows");
  ev->add_option("--config", ea.config, "Configuration file (metric.* keys)");
  ev->add_option("--out", ea.out, "Report JSON");
  ev->add_option("--curves", ea.curves, "BS(t) / AUC(t) curve CSV");
  ev->add_option("--threads", ea.threads, "Worker threads (0 = all cores)");

  CrossvalArgs ca;
  auto* cv = app.add_subcommand("crossval", "Cross-validated predictive accuracy");
  cv->add_option("--data", ca.data, "Data CSV")->required();
  cv->add_option("--config", ca.config, "Configuration file");
  cv->add_option("--folds", ca.folds, "Number of folds");
  cv->add_option("--repeats", ca.repeats, "Repetitions of the split scheme");
  cv->add_option("--random", ca.random, "Random splits with this test fraction");
  auto* cv_seed = cv->add_option("--seed", ca.seed, "Split seed");
  cv->add_option("--out", ca.out, "Report JSON");
  cv->add_option("--threads", ca.threads, "Worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  sa.seed_set = sim_seed->count() > 0;
  fa.seed_set = fit_seed->count() > 0;
  ca.seed_set = cv_seed->count() > 0;

  try {
    if (*sim) return run_simulate(sa);
    if (*fit) return run_fit(fa);
    if (*pred) return run_predict(pa);
    if (*ev) return run_evaluate(ea);
    if (*cv) return run_crossval(ca);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  }
  return kExitOk;
}
