#include "semicomp/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "semicomp/errors.hpp"

namespace semicomp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

[[noreturn]] void not_identified(const std::string& msg) { throw Error(ErrorCode::NotIdentified, msg); }

double h1_value(double u, double v, const ArchimedeanCopula& th) {
  if (v <= 0.0) return 0.0;
  return std::exp(log_h1(u, v, th));
}

// S_D jumps strictly after the landmark; the curve only moves there.
std::vector<double> knots_after(const StepSurvival& S_D, double landmark) {
  std::vector<double> out{landmark};
  for (double t : S_D.jump_times())
    if (t > landmark) out.push_back(t);
  return out;
}

SurvivalPrediction curve(Method m, int k, double landmark) {
  SurvivalPrediction p;
  p.method = m;
  p.k = k;
  p.landmark = landmark;
  return p;
}

// Enforce the invariants against rounding: start at 1, never increase.
void tidy(SurvivalPrediction& p) {
  double prev = 1.0;
  for (std::size_t j = 0; j < p.values.size(); ++j) {
    double v = j == 0 ? 1.0 : std::clamp(p.values[j], 0.0, prev);
    p.values[j] = v;
    prev = v;
  }
}

SurvivalPrediction km_ratio(const FittedJointModel& model, double landmark, Method m) {
  const StepSurvival& S_D = model.terminal;
  const double den = S_D(landmark);
  if (!(den > 0.0)) not_identified("no terminal-time mass beyond the landmark");
  SurvivalPrediction p = curve(m, -1, landmark);
  p.times = knots_after(S_D, landmark);
  for (double t : p.times) p.values.push_back(S_D(t) / den);
  tidy(p);
  return p;
}

// H1(S_k(t_k), S_D(t)) / H1(S_k(t_k), S_D(anchor)) on t >= anchor.
SurvivalPrediction h1_ratio(const FittedJointModel& model, int k, double t_k, double anchor, Method m) {
  const StepSurvival& S_D = model.terminal;
  const ArchimedeanCopula th = model.theta_copula(k);
  const double u = model.marginals[k].mid(t_k);
  const double den = h1_value(u, S_D(anchor), th);
  if (!(den > 0.0)) not_identified("no terminal-time mass beyond the landmark");
  SurvivalPrediction p = curve(m, k, anchor);
  p.times = knots_after(S_D, anchor);
  for (double t : p.times) p.values.push_back(h1_value(u, S_D(t), th) / den);
  tidy(p);
  return p;
}

struct Observed {
  std::vector<double> u;
  std::vector<ArchimedeanCopula> th;
};

Observed observed_pieces(const PredictionQuery& q, const FittedJointModel& model) {
  Observed o;
  for (const auto& [k, t] : q.events) {
    o.u.push_back(model.marginals[k].mid(t));
    o.th.push_back(model.theta_copula(k));
  }
  return o;
}

// log Q_m at terminal survival value v, less the slope factors.
double log_qm(const Observed& o, const ArchimedeanCopula& alpha, double v) {
  v = std::clamp(v, kUnitFloor, 1.0);
  double A = 0.0, l = 0.0;
  for (std::size_t j = 0; j < o.u.size(); ++j) {
    const double g = o.u[j] >= 1.0 ? 1.0 : std::clamp(h2(o.u[j], v, o.th[j]), 0.0, 1.0);
    A += phi(alpha, std::clamp(g, kUnitFloor, 1.0));
    l += log_neg_phi_d1(alpha, std::clamp(g, kUnitFloor, 1.0 - kUnitFloor));
    l += log_h12(o.u[j], v, o.th[j]);
  }
  return l + log_abs_psi_deriv(alpha, A, static_cast<int>(o.u.size()));
}

SurvivalPrediction dp_multi(const PredictionQuery& q, const FittedJointModel& model) {
  const double landmark = q.landmark();
  const Observed o = observed_pieces(q, model);
  const ArchimedeanCopula alpha = model.alpha_copula();

  std::vector<Atom> atoms;
  std::vector<double> lw;
  for (const Atom& a : terminal_atoms(model.terminal)) {
    if (!a.tail && !(a.time > landmark)) continue;
    const double x = std::log(a.mass) + log_qm(o, alpha, a.v);
    if (!std::isfinite(x)) continue;
    atoms.push_back(a);
    lw.push_back(x);
  }
  if (atoms.empty()) not_identified("no terminal-time mass beyond the landmark");
  const double mx = *std::max_element(lw.begin(), lw.end());
  // Suffix sums: weight beyond each atom, accumulated from the far end.
  std::vector<double> w(lw.size());
  for (std::size_t i = 0; i < lw.size(); ++i) w[i] = std::exp(lw[i] - mx);
  std::vector<double> beyond(w.size() + 1, 0.0);
  for (std::size_t i = w.size(); i-- > 0;) beyond[i] = beyond[i + 1] + w[i];
  const double den = beyond[0];
  if (!(den > 0.0)) not_identified("no terminal-time mass beyond the landmark");

  SurvivalPrediction p = curve(Method::DP, -1, landmark);
  p.times.push_back(landmark);
  p.values.push_back(1.0);
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].tail) break;
    p.times.push_back(atoms[i].time);
    p.values.push_back(beyond[i + 1] / den);
  }
  tidy(p);
  return p;
}

const std::pair<int, double>* find_event(const PredictionQuery& q, int k) {
  for (const auto& e : q.events)
    if (e.first == k) return &e;
  return nullptr;
}

}  // namespace

double PredictionQuery::landmark() const {
  double t = 0.0;
  for (const auto& e : events) t = std::max(t, e.second);
  return t;
}

void PredictionQuery::validate(int K) const {
  std::vector<bool> seen(K, false);
  for (const auto& [k, t] : events) {
    if (k < 0 || k >= K) throw Error(ErrorCode::Domain, "event index out of range: " + std::to_string(k + 1));
    if (seen[k]) throw Error(ErrorCode::Domain, "event index repeated: " + std::to_string(k + 1));
    if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorCode::Domain, "event time must be finite and >= 0");
    seen[k] = true;
  }
}

PredictionQuery query_from_record(const ObservedRecord& r) {
  PredictionQuery q;
  for (int k = 0; k < r.K(); ++k)
    if (r.delta[k]) q.events.emplace_back(k, r.t[k]);
  return q;
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::DP: return "DP";
    case Method::P0: return "P0";
    case Method::Pk: return "Pk";
    case Method::Pkm: return "Pkm";
  }
  return "?";
}

double SurvivalPrediction::operator()(double t) const {
  if (t <= landmark || times.empty()) return 1.0;
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

double q_m(const PredictionQuery& q, double t, const FittedJointModel& model) {
  q.validate(model.K);
  if (q.m() < 2) throw Error(ErrorCode::Domain, "Q_m needs at least two observed events");
  if (!(t > q.landmark())) throw Error(ErrorCode::Domain, "Q_m needs t past the landmark");
  const double x = log_qm(observed_pieces(q, model), model.alpha_copula(), model.terminal(t));
  return std::exp(x);
}

SurvivalPrediction predict_survival_dp(const PredictionQuery& q, const FittedJointModel& model) {
  q.validate(model.K);
  if (q.m() == 0) {
    SurvivalPrediction p = km_ratio(model, 0.0, Method::DP);
    return p;
  }
  if (q.m() == 1) {
    const auto [k, t] = q.events.front();
    SurvivalPrediction p = h1_ratio(model, k, t, t, Method::Pk);
    p.method = Method::DP;
    p.k = -1;
    return p;
  }
  return dp_multi(q, model);
}

SurvivalPrediction predict_baseline(const PredictionQuery& q, const FittedJointModel& model, Method method,
                                    int k) {
  q.validate(model.K);
  switch (method) {
    case Method::P0: return km_ratio(model, q.landmark(), Method::P0);
    case Method::Pk:
    case Method::Pkm: {
      const auto* e = find_event(q, k);
      if (!e) throw Error(ErrorCode::EventNotObserved, "event " + std::to_string(k + 1) + " not observed");
      const double anchor = method == Method::Pk ? e->second : q.landmark();
      return h1_ratio(model, k, e->second, anchor, method);
    }
    case Method::DP: return predict_survival_dp(q, model);
  }
  return {};
}

double cmst(const SurvivalPrediction& p, double t_star) {
  if (t_star < p.landmark) throw Error(ErrorCode::Domain, "restriction time before the landmark");
  double area = 0.0;
  for (std::size_t j = 0; j < p.times.size(); ++j) {
    const double a = p.times[j];
    if (a >= t_star) break;
    const double b = j + 1 < p.times.size() ? std::min(p.times[j + 1], t_star) : t_star;
    area += p.values[j] * (b - a);
  }
  return p.landmark + area;
}

std::optional<double> try_cqst(const SurvivalPrediction& p, double level, double t_upper) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::Domain, "quantile level must lie in (0,1)");
  if (level >= 1.0 - p(t_upper)) return std::nullopt;
  for (std::size_t j = 0; j < p.times.size(); ++j)
    if (p.values[j] <= 1.0 - level) return p.times[j];
  return std::nullopt;
}

double cqst(const SurvivalPrediction& p, double level, double t_upper) {
  const auto r = try_cqst(p, level, t_upper);
  if (!r) not_identified("quantile level beyond the identifiable range");
  return *r;
}

PredictionInterval prediction_interval(const SurvivalPrediction& p, double t_upper, double t_star, double level) {
  const double a = (1.0 - level) / 2.0;
  PredictionInterval iv;
  iv.lo = cqst(p, a, t_upper);
  const auto hi = try_cqst(p, 1.0 - a, t_upper);
  if (hi) {
    iv.hi = *hi;
  } else {
    iv.hi = std::max(t_star, iv.lo);
    iv.right_censored = true;
  }
  return iv;
}

std::vector<double> prediction_grid(const SurvivalPrediction& p, double t_upper, int n) {
  std::vector<double> g{p.landmark};
  for (double t : p.times)
    if (t > p.landmark && t <= t_upper) g.push_back(t);
  if (t_upper > p.landmark)
    for (int i = 1; i <= n; ++i) g.push_back(p.landmark + (t_upper - p.landmark) * i / n);
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

}  // namespace semicomp
