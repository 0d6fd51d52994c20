#include "semicomp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "semicomp/errors.hpp"
#include "semicomp/parallel.hpp"
#include "semicomp/rng.hpp"

namespace semicomp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median(std::vector<double> x) {
  if (x.empty()) return kNaN;
  std::sort(x.begin(), x.end());
  const std::size_t h = x.size() / 2;
  return x.size() % 2 ? x[h] : 0.5 * (x[h - 1] + x[h]);
}

void mean_sd(const std::vector<double>& x, double& mean, double& sd) {
  mean = sd = kNaN;
  if (x.empty()) return;
  mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  if (x.size() < 2) {
    sd = 0.0;
    return;
  }
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  sd = std::sqrt(ss / (x.size() - 1));
}

// Fisher-Yates on our own uniform so splits do not depend on the standard library.
void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * i);
    std::swap(v[i - 1], v[std::min(j, i - 1)]);
  }
}

}  // namespace

Truth observed_truth(const Dataset& data, const StepSurvival& S_C, double t_star, bool ipcw) {
  Truth tr;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data.records[i];
    const double val = std::min(r.y, t_star);
    const bool known = r.dtilde == 1 || r.y >= t_star;
    double w = 0.0;
    if (!ipcw) {
      if (!known) throw Error(ErrorCode::Domain, "censored truth for record " + r.id + " needs IPCW");
      w = 1.0;
    } else if (known) {
      const double sc = S_C.left_limit(val);
      if (sc > 0.0) w = 1.0 / sc;
      else ++tr.dropped;
    }
    tr.value.push_back(val);
    tr.weight.push_back(w);
  }
  return tr;
}

Truth oracle_truth(const std::vector<double>& death, double t_star) {
  Truth tr;
  for (double d : death) {
    tr.value.push_back(std::min(d, t_star));
    tr.weight.push_back(1.0);
  }
  return tr;
}

double check_loss(double x, double level) { return x * (level - (x < 0.0 ? 1.0 : 0.0)); }

PointErrors point_errors(const Truth& truth, const std::vector<double>& cmst_pred,
                         const std::vector<double>& cqst_pred, double level) {
  const std::size_t n = truth.value.size();
  if (n == 0) throw Error(ErrorCode::EmptyData, "no subjects to score");
  if (cmst_pred.size() != n || cqst_pred.size() != n)
    throw Error(ErrorCode::Domain, "prediction count does not match the truth");
  PointErrors e;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = truth.weight[i];
    if (w == 0.0) continue;
    const double a = truth.value[i] - cmst_pred[i];
    e.mspe += w * a * a;
    e.qpe += w * check_loss(truth.value[i] - cqst_pred[i], level);
  }
  e.mspe /= n;
  e.qpe /= n;
  return e;
}

double brier_weight(const ObservedRecord& r, const StepSurvival& S_C, double t, bool ipcw) {
  if (r.y > t) {
    if (!ipcw) return 1.0;
    const double sc = S_C(t);
    return sc > 0.0 ? 1.0 / sc : 0.0;
  }
  if (r.dtilde != 1) return 0.0;
  if (!ipcw) return 1.0;
  const double sc = S_C.left_limit(r.y);
  return sc > 0.0 ? 1.0 / sc : 0.0;
}

double brier(const Dataset& data, const std::vector<SurvivalPrediction>& preds, const StepSurvival& S_C, double t,
             const std::vector<double>& landmarks, bool ipcw) {
  std::vector<double> sc(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) sc[i] = preds[i](t);
  return brier_scores(data, sc, S_C, t, landmarks, ipcw);
}

double brier_scores(const Dataset& data, const std::vector<double>& scores, const StepSurvival& S_C, double t,
                    const std::vector<double>& landmarks, bool ipcw) {
  const std::size_t n = data.size();
  if (n == 0) throw Error(ErrorCode::EmptyData, "no subjects to score");
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(t > landmarks[i])) continue;
    const auto& r = data.records[i];
    const double w = brier_weight(r, S_C, t, ipcw);
    if (w == 0.0) continue;
    const double e = (r.y > t ? 1.0 : 0.0) - scores[i];
    s += w * e * e;
  }
  return s / n;
}

std::vector<double> metric_grid(double t_star, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = t_star * (i + 1) / n;
  return g;
}

double ibs(const std::vector<double>& grid, const std::vector<double>& bs, double t_star) {
  // BS(0) = 0: no subject is past its landmark at time 0.
  double area = 0.0, t0 = 0.0, b0 = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    area += 0.5 * (b0 + bs[j]) * (grid[j] - t0);
    t0 = grid[j];
    b0 = bs[j];
  }
  return area / t_star;
}

double auc_t(const Dataset& data, const std::vector<double>& scores, const StepSurvival& S_C, double t,
             const std::vector<double>& landmarks, bool ipcw) {
  std::vector<std::pair<double, double>> cases, controls;  // (score, weight)
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!(t > landmarks[i])) continue;
    const auto& r = data.records[i];
    const double w = brier_weight(r, S_C, t, ipcw);
    if (w == 0.0) continue;
    (r.y <= t ? cases : controls).emplace_back(scores[i], w);
  }
  if (cases.empty() || controls.empty()) throw Error(ErrorCode::NoComparablePairs, "no case-control pairs");
  std::sort(controls.begin(), controls.end());
  // Suffix weight sums over controls sorted by score.
  std::vector<double> above(controls.size() + 1, 0.0);
  for (std::size_t j = controls.size(); j-- > 0;) above[j] = above[j + 1] + controls[j].second;
  double num = 0.0, den = 0.0;
  for (const auto& [s, w] : cases) {
    const auto lo = std::lower_bound(controls.begin(), controls.end(), std::make_pair(s, -1.0),
                                     [](const auto& a, const auto& b) { return a.first < b.first; });
    const auto hi = std::upper_bound(controls.begin(), controls.end(), std::make_pair(s, -1.0),
                                     [](const auto& a, const auto& b) { return a.first < b.first; });
    const double greater = above[static_cast<std::size_t>(hi - controls.begin())];
    const double tied = above[static_cast<std::size_t>(lo - controls.begin())] - greater;
    num += w * (greater + 0.5 * tied);
    den += w * above[0];
  }
  return num / den;
}

IntervalMetrics interval_metrics(const Truth& truth, const std::vector<PredictionInterval>& iv) {
  const std::size_t n = truth.value.size();
  if (n == 0 || iv.size() != n) throw Error(ErrorCode::Domain, "interval count does not match the truth");
  IntervalMetrics m;
  std::vector<double> widths;
  for (std::size_t i = 0; i < n; ++i) {
    if (iv[i].right_censored) ++m.right_censored;
    widths.push_back(iv[i].hi - iv[i].lo);
    const double x = truth.value[i];
    if (x >= iv[i].lo && x <= iv[i].hi) m.cp += truth.weight[i];
  }
  m.cp /= n;
  m.mid = median(widths);
  return m;
}

std::string MethodSpec::label() const {
  switch (method) {
    case Method::DP: return "DP";
    case Method::P0: return "P0";
    case Method::Pk: return "P" + std::to_string(k + 1);
    case Method::Pkm: return "P" + std::to_string(k + 1) + "m";
  }
  return "?";
}

std::vector<MethodSpec> default_methods(int K) {
  std::vector<MethodSpec> out{{Method::DP, -1}, {Method::P0, -1}};
  for (int k = 0; k < K; ++k) {
    out.push_back({Method::Pk, k});
    out.push_back({Method::Pkm, k});
  }
  return out;
}

SurvivalPrediction predict_with(const MethodSpec& spec, const PredictionQuery& q, const FittedJointModel& model) {
  bool seen = false;
  for (const auto& e : q.events) seen = seen || e.first == spec.k;
  switch (spec.method) {
    case Method::DP: return predict_survival_dp(q, model);
    case Method::P0: return predict_baseline(q, model, Method::P0);
    case Method::Pk:
      if (seen) return predict_baseline(q, model, Method::Pk, spec.k);
      return predict_baseline(PredictionQuery{}, model, Method::P0);
    case Method::Pkm: return predict_baseline(q, model, seen ? Method::Pkm : Method::P0, spec.k);
  }
  return {};
}

const MethodReport* EvaluationReport::find(const std::string& label) const {
  for (const auto& m : methods)
    if (m.spec.label() == label) return &m;
  return nullptr;
}

EvaluationReport evaluate(const FittedJointModel& model, const Dataset& full, const StepSurvival& S_C,
                          const MetricConfig& cfg, const std::vector<MethodSpec>& methods,
                          const std::optional<std::vector<double>>& death, int threads) {
  if (death && death->size() != full.size()) throw Error(ErrorCode::Domain, "latent death count mismatch");
  EvaluationReport rep;
  rep.config = cfg;
  rep.grid = metric_grid(cfg.t_star, cfg.grid_points);

  // Subjects whose landmark leaves no terminal mass cannot be predicted by any
  // method; they are set aside once so every method sees the same sample.
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < full.size(); ++i) {
    const double lm = query_from_record(full.records[i]).landmark();
    if (model.terminal(lm) > 0.0) keep.push_back(i);
    else ++rep.unpredictable;
  }
  const Dataset data = subset(full, keep);
  const std::size_t n = data.size();
  rep.n = n;
  if (n == 0) throw Error(ErrorCode::EmptyData, "no predictable subjects");

  Truth truth;
  if (death) {
    std::vector<double> d;
    for (std::size_t i : keep) d.push_back((*death)[i]);
    truth = oracle_truth(d, cfg.t_star);
  } else {
    truth = observed_truth(data, S_C, cfg.t_star, cfg.ipcw);
  }
  rep.dropped_weights = truth.dropped;

  std::vector<PredictionQuery> queries(n);
  std::vector<double> landmarks(n);
  for (std::size_t i = 0; i < n; ++i) {
    queries[i] = query_from_record(data.records[i]);
    landmarks[i] = queries[i].landmark();
  }

  const bool zero_tail = cfg.tail == MetricConfig::Tail::Zero;
  rep.methods.resize(methods.size());
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    MethodReport& mr = rep.methods[mi];
    mr.spec = methods[mi];
    std::vector<SurvivalPrediction> preds(n);
    std::vector<double> cm(n), cq(n);
    std::vector<PredictionInterval> iv(n);
    parallel_for(n, threads, [&](std::size_t i) {
      preds[i] = predict_with(methods[mi], queries[i], model);
      const SurvivalPrediction& p = preds[i];
      const double tu = std::max(cfg.t_star, p.landmark);
      cm[i] = zero_tail ? cmst(p, std::clamp(model.t_u, p.landmark, tu)) : cmst(p, tu);
      // Unidentified quantiles are restricted to t_star like the truth.
      cq[i] = try_cqst(p, cfg.qpe_level, model.t_u).value_or(tu);
      const double a = (1.0 - cfg.interval_level) / 2.0;
      iv[i].lo = try_cqst(p, a, model.t_u).value_or(tu);
      const auto hi = try_cqst(p, 1.0 - a, model.t_u);
      iv[i].hi = hi ? *hi : std::max(tu, iv[i].lo);
      iv[i].right_censored = !hi;
    });
    const PointErrors pe = point_errors(truth, cm, cq, cfg.qpe_level);
    mr.mspe = pe.mspe;
    mr.qpe = pe.qpe;
    const IntervalMetrics im = interval_metrics(truth, iv);
    mr.cp = im.cp;
    mr.mid = im.mid;
    mr.right_censored = im.right_censored;

    mr.bs_curve.resize(rep.grid.size());
    mr.auc_curve.resize(rep.grid.size());
    double auc_sum = 0.0;
    int auc_n = 0;
    for (std::size_t j = 0; j < rep.grid.size(); ++j) {
      const double t = rep.grid[j];
      std::vector<double> sc(n);
      for (std::size_t i = 0; i < n; ++i) sc[i] = zero_tail && t > model.t_u ? 0.0 : preds[i](t);
      mr.bs_curve[j] = brier_scores(data, sc, S_C, t, landmarks, cfg.ipcw);
      try {
        mr.auc_curve[j] = auc_t(data, sc, S_C, t, landmarks, cfg.ipcw);
        auc_sum += mr.auc_curve[j];
        ++auc_n;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoComparablePairs) throw;
        mr.auc_curve[j] = kNaN;
      }
    }
    mr.ibs = ibs(rep.grid, mr.bs_curve, cfg.t_star);
    mr.auc = auc_n ? auc_sum / auc_n : kNaN;
  }
  if (!rep.methods.empty()) {
    const MethodReport& dp = rep.methods.front();
    for (auto& m : rep.methods) {
      m.rel_mspe = m.mspe / dp.mspe;
      m.rel_qpe = m.qpe / dp.qpe;
      m.rel_ibs = m.ibs / dp.ibs;
    }
  }
  return rep;
}

std::vector<CvSplit> make_splits(const Dataset& data, const CvScheme& scheme) {
  const std::size_t n = data.size();
  if (scheme.repeats < 1) throw Error(ErrorCode::Config, "cv.repeats: must be >= 1");
  if (scheme.kind == CvScheme::Kind::KFold && (scheme.folds < 2 || static_cast<std::size_t>(scheme.folds) > n))
    throw Error(ErrorCode::Config, "cv.folds: must lie in [2, n]");
  if (scheme.kind == CvScheme::Kind::Random && !(scheme.test_fraction > 0.0 && scheme.test_fraction < 1.0))
    throw Error(ErrorCode::Config, "cv.test_fraction: must lie in (0,1)");

  std::vector<std::vector<std::size_t>> strata(4);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = data.records[i];
    strata[2 * r.dtilde + (r.d() > 0 ? 1 : 0)].push_back(i);
  }
  std::vector<CvSplit> out;
  for (int rep = 0; rep < scheme.repeats; ++rep) {
    Rng rng = make_rng(scheme.seed, stream::kSplit, static_cast<std::uint64_t>(rep));
    if (scheme.kind == CvScheme::Kind::KFold) {
      std::vector<int> fold(n, 0);
      std::size_t pos = 0;  // continues across strata so fold sizes stay balanced
      for (auto s : strata) {
        shuffle(s, rng);
        for (std::size_t i : s) fold[i] = static_cast<int>(pos++ % scheme.folds);
      }
      for (int f = 0; f < scheme.folds; ++f) {
        CvSplit sp;
        for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? sp.test : sp.train).push_back(i);
        out.push_back(std::move(sp));
      }
    } else {
      std::vector<bool> test(n, false);
      for (auto s : strata) {
        shuffle(s, rng);
        const auto m = static_cast<std::size_t>(std::llround(scheme.test_fraction * s.size()));
        for (std::size_t j = 0; j < m; ++j) test[s[j]] = true;
      }
      CvSplit sp;
      for (std::size_t i = 0; i < n; ++i) (test[i] ? sp.test : sp.train).push_back(i);
      out.push_back(std::move(sp));
    }
  }
  return out;
}

CvReport cross_validate(const Dataset& data, const FitConfig& fit, const MetricConfig& metric,
                        const CvScheme& scheme, int threads) {
  const auto splits = make_splits(data, scheme);
  const auto methods = default_methods(data.K);
  std::vector<std::optional<EvaluationReport>> res(splits.size());
  FitConfig inner = fit;
  inner.threads = 1;  // parallelism is across splits
  parallel_for(splits.size(), threads, [&](std::size_t s) {
    try {
      const Dataset train = subset(data, splits[s].train);
      const Dataset test = subset(data, splits[s].test);
      if (test.size() == 0) return;
      const FittedJointModel model = fit_joint_model(train, inner);
      res[s] = evaluate(model, test, model.censoring, metric, methods);
    } catch (const Error&) {
      // counted below
    }
  });

  CvReport rep;
  rep.fits = static_cast<int>(splits.size());
  for (auto& r : res) {
    if (r) rep.splits.push_back(std::move(*r));
    else ++rep.failures;
  }
  if (rep.failures > scheme.max_failure_fraction * rep.fits)
    throw Error(ErrorCode::TooManyFailures,
                std::to_string(rep.failures) + " of " + std::to_string(rep.fits) + " splits failed");
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    std::vector<double> a, b, c, d;
    for (const auto& s : rep.splits) {
      a.push_back(s.methods[mi].mspe);
      b.push_back(s.methods[mi].qpe);
      c.push_back(s.methods[mi].ibs);
      if (std::isfinite(s.methods[mi].auc)) d.push_back(s.methods[mi].auc);
    }
    CvSummary sm;
    sm.label = methods[mi].label();
    mean_sd(a, sm.mspe_mean, sm.mspe_sd);
    mean_sd(b, sm.qpe_mean, sm.qpe_sd);
    mean_sd(c, sm.ibs_mean, sm.ibs_sd);
    mean_sd(d, sm.auc_mean, sm.auc_sd);
    rep.methods.push_back(sm);
  }
  return rep;
}

}  // namespace semicomp
