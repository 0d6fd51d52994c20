#include "semicomp/model.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/minima.hpp>

#include "semicomp/errors.hpp"
#include "semicomp/parallel.hpp"

namespace semicomp {

ArchimedeanCopula FittedJointModel::alpha_copula() const {
  if (!alpha_applicable) return ArchimedeanCopula(family, family == Family::Gumbel ? 1.0 : 0.0);
  return ArchimedeanCopula(family, alpha);
}

ArchimedeanCopula FittedJointModel::theta_copula(int k) const { return ArchimedeanCopula(family, thetas.at(k).theta); }

MarginalPieces FittedJointModel::pieces() const {
  MarginalPieces p;
  p.family = family;
  for (int k = 0; k < K; ++k) p.thetas.push_back(theta_copula(k));
  p.marginals = marginals;
  p.terminal = terminal;
  return p;
}

AlphaEstimate maximize_alpha(const LikelihoodWorkspace& ws, Family family, const AlphaOptions& opt, int threads) {
  if (!(opt.tau_lo < opt.tau_hi)) throw Error(ErrorCode::Config, "alpha bounds must satisfy lo < hi");
  AlphaEstimate est;
  auto objective = [&](double tau) {
    ++est.evaluations;
    return ws.profile_loglik(ArchimedeanCopula(family, theta_from_tau(family, tau)), threads);
  };
  const int g = std::max(opt.grid_points, 3);
  std::vector<double> grid(g), val(g);
  for (int i = 0; i < g; ++i) {
    grid[i] = opt.tau_lo + (opt.tau_hi - opt.tau_lo) * i / (g - 1);
    val[i] = objective(grid[i]);
  }
  int best = 0;
  for (int i = 1; i < g; ++i)
    if (val[i] > val[best]) best = i;
  if (!std::isfinite(val[best])) throw Error(ErrorCode::NonFiniteLikelihood, "profile likelihood is not finite");

  const double lo = grid[std::max(best - 1, 0)];
  const double hi = grid[std::min(best + 1, g - 1)];
  auto neg = [&](double tau) {
    const double v = objective(tau);
    return std::isfinite(v) ? -v : std::numeric_limits<double>::max();
  };
  // Brent's tolerance is relative; 20 bits is well below the 1e-4 target.
  std::uintmax_t max_iter = 200;
  const auto r = boost::math::tools::brent_find_minima(neg, lo, hi, 20, max_iter);
  double tau = r.first, ll = -r.second;
  if (val[best] > ll) {
    tau = grid[best];
    ll = val[best];
  }
  est.tau = tau;
  est.theta = theta_from_tau(family, tau);
  est.loglik = ll;
  est.boundary = tau - opt.tau_lo < 2.0 * opt.tol || opt.tau_hi - tau < 2.0 * opt.tol;
  return est;
}

FittedJointModel fit_joint_model(const Dataset& data, const FitConfig& config) {
  validate_dataset(data);
  if (data.size() < 2) throw Error(ErrorCode::InsufficientData, "need at least two subjects");
  FittedJointModel m;
  m.family = config.family;
  m.K = data.K;
  m.mc = config.mc;
  m.terminal = terminal_km(data);
  m.censoring = censoring_km(data);
  m.t_u = m.terminal.t_max();

  auto tagged = [](const std::string& stage, const Error& e) {
    return Error(e.code(), "[" + stage + "] " + e.what());
  };

  m.thetas.resize(m.K);
  m.marginals.resize(m.K);
  m.diagnostics.self_consistency_iterations.resize(m.K);
  std::vector<std::string> warn(m.K);
  parallel_for(static_cast<std::size_t>(m.K), config.threads, [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    try {
      m.thetas[k] = solve_theta(k, data, config.family, config.weight, m.censoring, config.theta);
    } catch (const Error& e) {
      throw tagged("theta" + std::to_string(k + 1), e);
    }
    if (m.thetas[k].status == RootStatus::NoRootBelow)
      warn[k] += "theta" + std::to_string(k + 1) + ": no root above the lower tau bound; set to bound. ";
    if (m.thetas[k].status == RootStatus::NoRootAbove)
      warn[k] += "theta" + std::to_string(k + 1) + ": no root below the upper tau bound; set to bound. ";
    try {
      auto sc = self_consistent_marginal(k, data, ArchimedeanCopula(config.family, m.thetas[k].theta), m.terminal,
                                         config.self_consistency);
      m.marginals[k] = std::move(sc.survival);
      m.diagnostics.self_consistency_iterations[k] = sc.iterations;
      if (!sc.converged) warn[k] += "S" + std::to_string(k + 1) + ": self-consistency did not converge. ";
    } catch (const Error& e) {
      throw tagged("marginal" + std::to_string(k + 1), e);
    }
  });
  for (auto& w : warn)
    if (!w.empty()) {
      w.pop_back();
      m.diagnostics.warnings.push_back(w);
    }

  try {
    LikelihoodWorkspace ws(data, m.pieces(), config.mc);
    m.diagnostics.skipped_records = ws.diagnostics().skipped;
    if (ws.diagnostics().skipped > 0)
      m.diagnostics.warnings.push_back(std::to_string(ws.diagnostics().skipped) +
                                       " record(s) with non-finite contribution skipped");
    if (m.K >= 2) {
      const AlphaEstimate a = maximize_alpha(ws, config.family, config.alpha, config.threads);
      m.alpha_applicable = true;
      m.alpha = a.theta;
      m.tau_alpha = tau_from_theta(ArchimedeanCopula(config.family, a.theta));
      m.alpha_boundary = a.boundary;
      m.loglik = a.loglik;
      m.diagnostics.alpha_evaluations = a.evaluations;
      if (a.boundary) m.diagnostics.warnings.push_back("alpha: maximum on the search boundary");
    } else {
      m.loglik = ws.profile_loglik(m.alpha_copula(), config.threads);
    }
  } catch (const Error& e) {
    throw tagged("alpha", e);
  }
  if (!std::isfinite(m.loglik)) throw Error(ErrorCode::NonFiniteLikelihood, "[alpha] log-likelihood not finite");
  return m;
}

double model_aic(const FittedJointModel& m) { return -2.0 * m.loglik + 2.0 * (m.K + 1); }

double quantile_type7(std::vector<double> x, double p) {
  if (x.empty()) throw Error(ErrorCode::InsufficientData, "quantile of empty sample");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

BootstrapResult bootstrap_fit(const Dataset& data, const FitConfig& config, const BootstrapOptions& opt) {
  if (opt.B < 2) throw Error(ErrorCode::Config, "bootstrap needs B >= 2");
  const std::size_t n = data.size();
  struct Rep {
    bool ok = false;
    double tau_alpha = 0.0;
    std::vector<double> tau_theta;
  };
  std::vector<Rep> reps(opt.B);
  FitConfig inner = config;
  inner.threads = 1;
  parallel_for(static_cast<std::size_t>(opt.B), config.threads, [&](std::size_t b) {
    std::vector<std::size_t> idx(n);
    if (opt.identity_resample) {
      for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    } else {
      Rng rng = make_rng(opt.seed, stream::kBootstrap, b);
      for (std::size_t i = 0; i < n; ++i)
        idx[i] = std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
    }
    try {
      const FittedJointModel fm = fit_joint_model(subset(data, idx), inner);
      reps[b].ok = true;
      reps[b].tau_alpha = fm.tau_alpha;
      for (const auto& t : fm.thetas) reps[b].tau_theta.push_back(t.tau);
    } catch (const Error&) {
      reps[b].ok = false;
    }
  });

  BootstrapResult res;
  res.replicates = opt.B;
  res.tau_theta.assign(data.K, {});
  for (const auto& r : reps) {
    if (!r.ok) {
      ++res.failures;
      continue;
    }
    res.tau_alpha.push_back(r.tau_alpha);
    for (int k = 0; k < data.K; ++k) res.tau_theta[k].push_back(r.tau_theta[k]);
  }
  if (res.failures > opt.max_failure_fraction * opt.B)
    throw Error(ErrorCode::TooManyFailures,
                std::to_string(res.failures) + " of " + std::to_string(opt.B) + " bootstrap replicates failed");
  res.tau_alpha_ci = {quantile_type7(res.tau_alpha, 0.025), quantile_type7(res.tau_alpha, 0.975)};
  for (int k = 0; k < data.K; ++k)
    res.tau_theta_ci.push_back({quantile_type7(res.tau_theta[k], 0.025), quantile_type7(res.tau_theta[k], 0.975)});
  return res;
}

namespace {

using nlohmann::json;

json step_to_json(const StepSurvival& s) {
  return json{{"times", s.jump_times()}, {"values", s.values()}, {"t_max", s.t_max()}};
}

StepSurvival step_from_json(const json& j) {
  return StepSurvival(j.at("times").get<std::vector<double>>(), j.at("values").get<std::vector<double>>(),
                      j.at("t_max").get<double>());
}

std::string status_name(RootStatus s) {
  switch (s) {
    case RootStatus::Converged: return "converged";
    case RootStatus::NoRootBelow: return "no_root_below";
    case RootStatus::NoRootAbove: return "no_root_above";
  }
  return "?";
}

RootStatus status_from(const std::string& s) {
  if (s == "converged") return RootStatus::Converged;
  if (s == "no_root_below") return RootStatus::NoRootBelow;
  if (s == "no_root_above") return RootStatus::NoRootAbove;
  throw Error(ErrorCode::Parse, "unknown root status '" + s + "'");
}

}  // namespace

nlohmann::json model_to_json(const FittedJointModel& m) {
  json thetas = json::array();
  for (const auto& t : m.thetas)
    thetas.push_back({{"k", t.k + 1},
                      {"theta", t.theta},
                      {"tau", t.tau},
                      {"status", status_name(t.status)},
                      {"n_pairs", t.n_pairs},
                      {"weight",
                       {{"kind", t.weight.kind == WeightKind::Unit ? "unit" : "dampened"},
                        {"a", t.weight.a},
                        {"b", t.weight.b}}}});
  json marg = json::array();
  for (const auto& s : m.marginals) marg.push_back(step_to_json(s));
  return json{
      {"format", "semicomp-model/1"},
      {"family", std::string(family_name(m.family))},
      {"K", m.K},
      {"alpha",
       {{"applicable", m.alpha_applicable}, {"theta", m.alpha}, {"tau", m.tau_alpha}, {"boundary", m.alpha_boundary}}},
      {"thetas", thetas},
      {"marginals", marg},
      {"terminal", step_to_json(m.terminal)},
      {"censoring", step_to_json(m.censoring)},
      {"t_u", m.t_u},
      {"loglik", m.loglik},
      {"mc",
       {{"n", m.mc.n}, {"seed", m.mc.seed}, {"mode", m.mc.mode == InnerMode::Exact ? "exact" : "montecarlo"}}},
      {"diagnostics",
       {{"warnings", m.diagnostics.warnings},
        {"self_consistency_iterations", m.diagnostics.self_consistency_iterations},
        {"skipped_records", m.diagnostics.skipped_records},
        {"alpha_evaluations", m.diagnostics.alpha_evaluations}}},
  };
}

FittedJointModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "semicomp-model/1")
      throw Error(ErrorCode::Parse, "unsupported model format");
    FittedJointModel m;
    m.family = parse_family(j.at("family").get<std::string>());
    m.K = j.at("K").get<int>();
    const auto& a = j.at("alpha");
    m.alpha_applicable = a.at("applicable").get<bool>();
    m.alpha = a.at("theta").get<double>();
    m.tau_alpha = a.at("tau").get<double>();
    m.alpha_boundary = a.at("boundary").get<bool>();
    for (const auto& t : j.at("thetas")) {
      PairwiseAssociation p;
      p.k = t.at("k").get<int>() - 1;
      p.theta = t.at("theta").get<double>();
      p.tau = t.at("tau").get<double>();
      p.status = status_from(t.at("status").get<std::string>());
      p.n_pairs = t.at("n_pairs").get<std::size_t>();
      const auto& w = t.at("weight");
      p.weight.kind = w.at("kind").get<std::string>() == "unit" ? WeightKind::Unit : WeightKind::Dampened;
      p.weight.a = w.at("a").get<double>();
      p.weight.b = w.at("b").get<double>();
      m.thetas.push_back(p);
    }
    for (const auto& s : j.at("marginals")) m.marginals.push_back(step_from_json(s));
    m.terminal = step_from_json(j.at("terminal"));
    m.censoring = step_from_json(j.at("censoring"));
    m.t_u = j.at("t_u").get<double>();
    m.loglik = j.at("loglik").get<double>();
    const auto& mc = j.at("mc");
    m.mc.n = mc.at("n").get<int>();
    m.mc.seed = mc.at("seed").get<std::uint64_t>();
    m.mc.mode = mc.at("mode").get<std::string>() == "exact" ? InnerMode::Exact : InnerMode::MonteCarlo;
    const auto& d = j.at("diagnostics");
    m.diagnostics.warnings = d.at("warnings").get<std::vector<std::string>>();
    m.diagnostics.self_consistency_iterations = d.at("self_consistency_iterations").get<std::vector<int>>();
    m.diagnostics.skipped_records = d.at("skipped_records").get<std::size_t>();
    m.diagnostics.alpha_evaluations = d.at("alpha_evaluations").get<int>();
    if (static_cast<int>(m.thetas.size()) != m.K || static_cast<int>(m.marginals.size()) != m.K)
      throw Error(ErrorCode::Parse, "model arrays do not match K");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("model JSON: ") + e.what());
  }
}

}  // namespace semicomp
