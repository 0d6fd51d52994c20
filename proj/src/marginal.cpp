#include "semicomp/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semicomp/errors.hpp"

namespace semicomp {

StepSurvival terminal_km(const Dataset& data) {
  std::vector<double> t;
  std::vector<int> e;
  for (const auto& r : data.records) {
    t.push_back(r.y);
    e.push_back(r.dtilde);
  }
  return kaplan_meier(t, e);
}

StepSurvival censoring_km(const Dataset& data) {
  std::vector<double> t;
  std::vector<int> e;
  for (const auto& r : data.records) {
    t.push_back(r.y);
    e.push_back(1 - r.dtilde);
  }
  return kaplan_meier(t, e);
}

StepSurvival intermediate_km(const Dataset& data, int k) {
  std::vector<double> t;
  std::vector<int> e;
  for (const auto& r : data.records) {
    t.push_back(r.t.at(k));
    e.push_back(r.delta.at(k));
  }
  return kaplan_meier(t, e);
}

namespace {

// Order statistic at ceil(p n); rank based so rescaling time leaves it alone.
double lower_quantile(std::vector<double> x, double p) {
  std::sort(x.begin(), x.end());
  std::size_t idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(x.size())));
  idx = std::clamp<std::size_t>(idx, 1, x.size());
  return x[idx - 1];
}

// Counts #{T >= grid_t[i], Y >= grid_y[j]} over the sample in O(1) after an
// O(n^2) suffix-sum build.
class DominanceTable {
 public:
  DominanceTable(const std::vector<double>& t, const std::vector<double>& y) {
    ut_ = t;
    uy_ = y;
    std::sort(ut_.begin(), ut_.end());
    ut_.erase(std::unique(ut_.begin(), ut_.end()), ut_.end());
    std::sort(uy_.begin(), uy_.end());
    uy_.erase(std::unique(uy_.begin(), uy_.end()), uy_.end());
    nt_ = ut_.size() + 1;
    ny_ = uy_.size() + 1;
    cnt_.assign(nt_ * ny_, 0);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const std::size_t a = rank_t(t[i]);
      const std::size_t b = rank_y(y[i]);
      ++cnt_[a * ny_ + b];
    }
    for (std::size_t a = nt_; a-- > 0;)
      for (std::size_t b = ny_; b-- > 0;) {
        int v = cnt_[a * ny_ + b];
        if (a + 1 < nt_) v += cnt_[(a + 1) * ny_ + b];
        if (b + 1 < ny_) v += cnt_[a * ny_ + b + 1];
        if (a + 1 < nt_ && b + 1 < ny_) v -= cnt_[(a + 1) * ny_ + b + 1];
        cnt_[a * ny_ + b] = v;
      }
  }

  // #{T >= x, Y >= y}
  int ge(double x, double y) const { return at(lb(ut_, x), lb(uy_, y)); }
  // #{T > x, Y > y}
  int gt(double x, double y) const { return at(ub(ut_, x), ub(uy_, y)); }

 private:
  static std::size_t lb(const std::vector<double>& v, double x) {
    return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), x) - v.begin());
  }
  static std::size_t ub(const std::vector<double>& v, double x) {
    return static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), x) - v.begin());
  }
  std::size_t rank_t(double x) const { return lb(ut_, x); }
  std::size_t rank_y(double x) const { return lb(uy_, x); }
  int at(std::size_t a, std::size_t b) const {
    if (a >= nt_ || b >= ny_) return 0;
    return cnt_[a * ny_ + b];
  }

  std::vector<double> ut_, uy_;
  std::size_t nt_ = 0, ny_ = 0;
  std::vector<int> cnt_;
};

double tau_to_theta_signed(Family f, double tau) { return theta_from_tau(f, tau); }

}  // namespace

ConcordancePairs concordance_pairs(int k, const Dataset& data, const WeightSpec& weight,
                                   const StepSurvival& S_C) {
  const std::size_t n = data.size();
  ConcordancePairs out;
  out.n = n;
  if (n < 2) throw Error(ErrorCode::NoComparablePairs, "fewer than two subjects");
  std::vector<double> t(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = data.records[i].t.at(k);
    y[i] = data.records[i].y;
  }
  DominanceTable table(t, y);
  double a = weight.a, b = weight.b;
  if (weight.kind == WeightKind::Dampened) {
    if (!(a > 0.0)) a = lower_quantile(t, 0.9);
    if (!(b > 0.0)) b = lower_quantile(y, 0.9);
  }
  const double nd = static_cast<double>(n);

  for (std::size_t i = 0; i < n; ++i) {
    const auto& ri = data.records[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& rj = data.records[j];
      if (t[i] == t[j] || y[i] == y[j]) continue;  // ties excluded
      const bool i_min_t = t[i] < t[j];
      const bool i_min_y = y[i] < y[j];
      const int dk = i_min_t ? ri.delta[k] : rj.delta[k];
      const int dd = i_min_y ? ri.dtilde : rj.dtilde;
      if (!dk || !dd) continue;
      const double x = std::min(t[i], t[j]);
      const double yy = std::min(y[i], y[j]);
      const double sc = S_C(yy);
      if (!(sc > 0.0)) {
        ++out.dropped;
        continue;
      }
      double s = static_cast<double>(table.gt(x, yy)) / (nd * sc);
      s = std::clamp(s, kUnitFloor, 1.0);
      double w = 1.0;
      if (weight.kind == WeightKind::Dampened) {
        const int c = table.ge(std::min(a, x), std::min(b, yy));
        w = c > 0 ? nd / static_cast<double>(c) : 0.0;
      }
      out.weight.push_back(w);
      out.s.push_back(s);
      out.concordant.push_back(i_min_t == i_min_y ? 1 : 0);
    }
  }
  return out;
}

double concordance_score(const ArchimedeanCopula& c, const ConcordancePairs& pairs) {
  if (pairs.s.empty()) throw Error(ErrorCode::NoComparablePairs, "no comparable pairs");
  double acc = 0.0;
  for (std::size_t p = 0; p < pairs.s.size(); ++p) {
    const double g = cross_ratio(c, pairs.s[p]);
    acc += pairs.weight[p] * (static_cast<double>(pairs.concordant[p]) - g / (g + 1.0));
  }
  const double nd = static_cast<double>(pairs.n);
  return acc / (nd * (nd - 1.0) / 2.0);
}

double concordance_score(double theta, int k, const Dataset& data, Family family, const WeightSpec& weight,
                         const StepSurvival& S_C) {
  return concordance_score(ArchimedeanCopula(family, theta), concordance_pairs(k, data, weight, S_C));
}

PairwiseAssociation solve_theta(int k, const Dataset& data, Family family, const WeightSpec& weight,
                                const StepSurvival& S_C, const ThetaOptions& opt) {
  const ConcordancePairs pairs = concordance_pairs(k, data, weight, S_C);
  if (pairs.s.empty()) throw Error(ErrorCode::NoComparablePairs, "event " + std::to_string(k + 1));
  auto score = [&](double tau) {
    return concordance_score(ArchimedeanCopula(family, tau_to_theta_signed(family, tau)), pairs);
  };
  double lo = opt.tau_lo, hi = opt.tau_hi;
  if (opt.allow_negative && family == Family::Frank) lo = -opt.tau_hi;

  PairwiseAssociation res;
  res.k = k;
  res.weight = weight;
  res.n_pairs = pairs.s.size();
  // U decreases in tau.
  const double u_lo = score(lo), u_hi = score(hi);
  double tau;
  if (u_lo < 0.0) {
    res.status = RootStatus::NoRootBelow;
    tau = lo;
  } else if (u_hi > 0.0) {
    res.status = RootStatus::NoRootAbove;
    tau = hi;
  } else {
    while (hi - lo > opt.tol) {
      const double mid = 0.5 * (lo + hi);
      if (score(mid) > 0.0) lo = mid;
      else hi = mid;
    }
    tau = 0.5 * (lo + hi);
  }
  res.theta = tau_to_theta_signed(family, tau);
  res.tau = tau_from_theta(ArchimedeanCopula(family, res.theta));
  return res;
}

SelfConsistencyResult self_consistent_marginal(int k, const Dataset& data, const ArchimedeanCopula& theta_k,
                                               const StepSurvival& S_D, const SelfConsistencyOptions& opt) {
  const std::size_t n = data.size();
  if (n == 0) throw Error(ErrorCode::EmptyData, "self-consistency on empty data");
  const StepSurvival init = intermediate_km(data, k);
  const std::vector<double>& ev = init.jump_times();
  const std::size_t m = ev.size();
  SelfConsistencyResult res;
  if (m == 0) {
    res.survival = init;
    res.converged = true;
    return res;
  }

  struct Censored {
    double t;
    double v;
    bool dead;
  };
  std::vector<Censored> cens;
  std::vector<double> all_t(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = data.records[i];
    all_t[i] = r.t[k];
    if (r.delta[k]) continue;
    const double v = r.dtilde ? S_D.mid(r.y) : S_D(r.y);
    cens.push_back({r.t[k], std::clamp(v, kUnitFloor, 1.0), r.dtilde == 1});
  }
  std::sort(all_t.begin(), all_t.end());
  std::sort(cens.begin(), cens.end(), [](const Censored& a, const Censored& b) { return a.t < b.t; });
  const double nd = static_cast<double>(n);

  // Ratio kernel: H(u, v) for alive subjects, H2(u, v) for subjects whose
  // death was observed.
  auto kernel = [&](double u, const Censored& c) {
    if (!(u > 0.0)) return 0.0;
    return c.dead ? h2(u, c.v, theta_k) : h_joint(u, c.v, theta_k);
  };

  std::vector<double> S = init.values();
  std::vector<double> next(m), denom(cens.size());
  auto value_at = [&](const std::vector<double>& s, double t) {
    const std::size_t j = static_cast<std::size_t>(std::upper_bound(ev.begin(), ev.end(), t) - ev.begin());
    return j == 0 ? 1.0 : s[j - 1];
  };

  for (int it = 1; it <= opt.max_iter; ++it) {
    for (std::size_t c = 0; c < cens.size(); ++c) denom[c] = kernel(value_at(S, cens[c].t), cens[c]);
    std::size_t c_end = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const double t = ev[j];
      const double above = static_cast<double>(all_t.end() - std::upper_bound(all_t.begin(), all_t.end(), t));
      while (c_end < cens.size() && cens[c_end].t <= t) ++c_end;
      double acc = above;
      for (std::size_t c = 0; c < c_end; ++c) {
        if (denom[c] > 0.0) acc += kernel(S[j], cens[c]) / denom[c];
      }
      next[j] = std::clamp(acc / nd, 0.0, 1.0);
    }
    double running = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
      running = std::min(running, next[j]);
      next[j] = running;
    }
    double diff = 0.0;
    for (std::size_t j = 0; j < m; ++j) diff = std::max(diff, std::fabs(next[j] - S[j]));
    S.swap(next);
    res.iterations = it;
    if (diff < opt.tol) {
      res.converged = true;
      break;
    }
  }
  res.survival = StepSurvival(ev, S, init.t_max());
  return res;
}

GValue conditional_survival_G(double t_k, double t, const StepSurvival& S_k, const StepSurvival& S_D,
                              const ArchimedeanCopula& theta_k) {
  if (t_k > t) throw Error(ErrorCode::Domain, "G requires t_k <= t");
  if (t_k < 0.0) throw Error(ErrorCode::Domain, "G requires t_k >= 0");
  const double u = S_k(t_k);
  const double v = S_D(t);
  GValue out;
  const Partials p = copula_partials(u, v, theta_k);
  out.g = u >= 1.0 ? 1.0 : std::clamp(p.h2, 0.0, 1.0);  // H2(1, v) = 1 exactly
  out.g_prime = p.h12 * S_k.slope(t_k);
  return out;
}

}  // namespace semicomp
