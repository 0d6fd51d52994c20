#include "semicomp/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "semicomp/errors.hpp"
#include "semicomp/parallel.hpp"

namespace semicomp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lse(const double* x, std::size_t n) {
  double m = kNegInf;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, x[i]);
  if (m == kNegInf || !std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i] - m);
  return m + std::log(s);
}

double lse(const std::vector<double>& x) { return lse(x.data(), x.size()); }

double phi_g(const ArchimedeanCopula& a, double g) { return phi(a, std::clamp(g, kUnitFloor, 1.0)); }

double log_neg_phi_d1_g(const ArchimedeanCopula& a, double g) {
  return log_neg_phi_d1(a, std::clamp(g, kUnitFloor, 1.0 - kUnitFloor));
}

double h2_of(double u, double v, const ArchimedeanCopula& th) {
  if (u >= 1.0) return 1.0;
  return std::clamp(h2(u, v, th), 0.0, 1.0);
}

// Alpha-dependent per-atom quantities.
struct AtomTerms {
  double A = 0.0;   // sum phi(G) over observed events
  double lp = 0.0;  // sum log(-phi'(G)) over observed events
};

AtomTerms atom_terms(const RecordCache& c, std::size_t a, const ArchimedeanCopula& alpha) {
  AtomTerms t;
  const double* g = c.g_event.data() + a * c.d;
  for (int q = 0; q < c.d; ++q) {
    t.A += phi_g(alpha, g[q]);
    t.lp += log_neg_phi_d1_g(alpha, g[q]);
  }
  return t;
}

void censored_phis(const RecordCache& c, std::size_t a, const ArchimedeanCopula& alpha, double* lo, double* up) {
  const double* gl = c.g_lower.data() + a * c.nc;
  const double* gu = c.g_upper.data() + a * c.nc;
  for (int q = 0; q < c.nc; ++q) {
    lo[q] = phi_g(alpha, gl[q]);
    up[q] = phi_g(alpha, gu[q]);
  }
}

// Log of the frailty integrand for subset s at one draw:
//   V^d exp(-V (A + sum_{k not in s} b_k)) prod_{k in s} (exp(-V a_k) - exp(-V b_k)).
// Both the joint and the per-subset paths call this so they agree bit for bit.
inline double mc_kernel(double v, double log_v, int d, double A, const double* a, const double* b, int nc,
                        unsigned s) {
  double x = A;
  for (int q = 0; q < nc; ++q)
    if (!(s >> q & 1u)) x += b[q];
  double l = d * log_v - v * x;
  for (int q = 0; q < nc; ++q)
    if (s >> q & 1u) l += -v * a[q] + std::log(-std::expm1(-v * (b[q] - a[q])));
  return l;
}

}  // namespace

std::vector<Atom> terminal_atoms(const StepSurvival& S_D) {
  std::vector<Atom> atoms;
  const auto& t = S_D.jump_times();
  const auto& v = S_D.values();
  double prev = 1.0;
  for (std::size_t j = 0; j < t.size(); ++j) {
    const double mass = prev - v[j];
    if (mass > 0.0) atoms.push_back({t[j], mass, 0.5 * (prev + v[j]), false});
    prev = v[j];
  }
  if (prev > 0.0) atoms.push_back({S_D.t_max(), prev, 0.5 * prev, true});
  return atoms;
}

FrailtyDraws FrailtyDraws::make(const McConfig& mc) {
  FrailtyDraws d;
  Rng rng = make_rng(mc.seed, stream::kFrailty, 0);
  d.u1.resize(mc.n);
  d.u2.resize(mc.n);
  for (int j = 0; j < mc.n; ++j) {
    d.u1[j] = uniform01(rng);
    d.u2[j] = uniform01(rng);
  }
  return d;
}

FrailtyValues FrailtyValues::at(const ArchimedeanCopula& alpha, const FrailtyDraws& draws) {
  FrailtyValues f;
  f.v.resize(draws.u1.size());
  f.log_v.resize(draws.u1.size());
  for (std::size_t j = 0; j < draws.u1.size(); ++j) {
    f.v[j] = frailty_from_uniforms(alpha, draws.u1[j], draws.u2[j]);
    f.log_v[j] = std::log(f.v[j]);
  }
  return f;
}

RecordCache build_record_cache(const ObservedRecord& r, const MarginalPieces& pieces,
                               const std::vector<Atom>& atoms) {
  const int K = pieces.K();
  if (r.K() != K) throw Error(ErrorCode::Domain, "record has the wrong number of events");
  RecordCache c;
  c.dead = r.dtilde == 1;
  c.d = r.d();
  c.nc = K - c.d;

  std::vector<const Atom*> use;
  for (const auto& a : atoms) {
    if (c.dead) {
      if (!a.tail && a.time == r.y) use.push_back(&a);
    } else if (a.tail || a.time > r.y) {
      use.push_back(&a);
    }
  }

  std::vector<double> u_ev, log_slope;
  std::vector<int> ev, cz;
  for (int k = 0; k < K; ++k) {
    if (r.delta[k]) {
      ev.push_back(k);
      const auto& S = pieces.marginals[k];
      u_ev.push_back(S.mid(r.t[k]));
      log_slope.push_back(std::log(-S.slope(r.t[k])));
    } else {
      cz.push_back(k);
    }
  }

  for (const Atom* a : use) {
    double lw = std::log(a->mass);
    const double v = std::clamp(a->v, kUnitFloor, 1.0);
    for (std::size_t q = 0; q < ev.size(); ++q)
      lw += log_h12(u_ev[q], v, pieces.thetas[ev[q]]) + log_slope[q];
    if (!std::isfinite(lw)) continue;
    c.log_w.push_back(lw);
    for (std::size_t q = 0; q < ev.size(); ++q) c.g_event.push_back(h2_of(u_ev[q], v, pieces.thetas[ev[q]]));
    for (int k : cz) {
      const auto& S = pieces.marginals[k];
      c.g_lower.push_back(h2_of(S(r.t[k]), v, pieces.thetas[k]));
      c.g_upper.push_back(h2_of(S(std::max(a->time, r.t[k])), v, pieces.thetas[k]));
    }
  }
  c.valid = !c.log_w.empty() && (!c.dead || c.log_w.size() == 1);
  return c;
}

double eval_cache_exact(const RecordCache& c, const ArchimedeanCopula& alpha) {
  if (!c.valid) return kNegInf;
  std::vector<double> terms(c.atoms());
  std::vector<double> lo(c.nc), up(c.nc);
  for (std::size_t a = 0; a < c.atoms(); ++a) {
    const AtomTerms t = atom_terms(c, a, alpha);
    censored_phis(c, a, alpha, lo.data(), up.data());
    double B = 0.0;
    for (int q = 0; q < c.nc; ++q) B += lo[q];
    terms[a] = c.log_w[a] + t.lp + log_abs_psi_deriv(alpha, t.A + B, c.d);
  }
  return lse(terms);
}

double eval_cache_mc(const RecordCache& c, const ArchimedeanCopula& alpha, const FrailtyValues& fv) {
  if (!c.valid) return kNegInf;
  if (c.dead) return eval_cache_exact(c, alpha);
  const std::size_t N = fv.v.size();
  const unsigned ns = 1u << c.nc;
  const double log_n = std::log(static_cast<double>(N));
  std::vector<double> lo(c.nc), up(c.nc), buf(N);
  std::vector<double> per_s(static_cast<std::size_t>(ns) * c.atoms());  // [s][atom]
  for (std::size_t a = 0; a < c.atoms(); ++a) {
    const AtomTerms t = atom_terms(c, a, alpha);
    censored_phis(c, a, alpha, lo.data(), up.data());
    for (unsigned s = 0; s < ns; ++s) {
      for (std::size_t j = 0; j < N; ++j)
        buf[j] = mc_kernel(fv.v[j], fv.log_v[j], c.d, t.A, lo.data(), up.data(), c.nc, s);
      per_s[s * c.atoms() + a] = c.log_w[a] + t.lp + (lse(buf) - log_n);
    }
  }
  std::vector<double> js(ns);
  for (unsigned s = 0; s < ns; ++s) js[s] = lse(per_s.data() + s * c.atoms(), c.atoms());
  return lse(js);
}

double eval_cache_j_term(const RecordCache& c, unsigned s, const ArchimedeanCopula& alpha, InnerMode mode,
                         const FrailtyValues& fv) {
  if (c.dead) throw Error(ErrorCode::Domain, "subset terms apply to subjects alive at Y");
  if (s >= (1u << c.nc)) throw Error(ErrorCode::Domain, "subset mask out of range");
  if (!c.valid) return kNegInf;
  std::vector<double> lo(c.nc), up(c.nc), terms(c.atoms());
  if (mode == InnerMode::MonteCarlo) {
    const std::size_t N = fv.v.size();
    const double log_n = std::log(static_cast<double>(N));
    std::vector<double> buf(N);
    for (std::size_t a = 0; a < c.atoms(); ++a) {
      const AtomTerms t = atom_terms(c, a, alpha);
      censored_phis(c, a, alpha, lo.data(), up.data());
      for (std::size_t j = 0; j < N; ++j)
        buf[j] = mc_kernel(fv.v[j], fv.log_v[j], c.d, t.A, lo.data(), up.data(), c.nc, s);
      terms[a] = c.log_w[a] + t.lp + (lse(buf) - log_n);
    }
    return lse(terms);
  }
  // Exact: expand prod_{k in s}(e^{-V a_k} - e^{-V b_k}) over r subset of s and
  // integrate each exponential against the frailty law in closed form.
  std::vector<int> members;
  for (int q = 0; q < c.nc; ++q)
    if (s >> q & 1u) members.push_back(q);
  const unsigned nr = 1u << members.size();
  std::vector<double> lr(nr);
  for (std::size_t a = 0; a < c.atoms(); ++a) {
    const AtomTerms t = atom_terms(c, a, alpha);
    censored_phis(c, a, alpha, lo.data(), up.data());
    double base = t.A;
    for (int q = 0; q < c.nc; ++q)
      if (!(s >> q & 1u)) base += up[q];
    for (unsigned r = 0; r < nr; ++r) {
      double x = base;
      for (std::size_t m = 0; m < members.size(); ++m) x += (r >> m & 1u) ? lo[members[m]] : up[members[m]];
      lr[r] = log_abs_psi_deriv(alpha, x, c.d);
    }
    const double top = lr[nr - 1];  // all-a term has the smallest argument
    double acc = 0.0;
    for (unsigned r = 0; r < nr; ++r) {
      const int flips = static_cast<int>(members.size()) - std::popcount(r);
      acc += ((flips % 2) ? -1.0 : 1.0) * std::exp(lr[r] - top);
    }
    terms[a] = acc > 0.0 ? c.log_w[a] + t.lp + top + std::log(acc) : kNegInf;
  }
  return lse(terms);
}

namespace {

RecordCache cache_for(const ObservedRecord& r, const MarginalPieces& pieces) {
  return build_record_cache(r, pieces, terminal_atoms(pieces.terminal));
}

void require_finite(double x, const ObservedRecord& r) {
  if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteLikelihood, "record " + r.id);
}

}  // namespace

double loglik_death_observed(const ObservedRecord& r, const ArchimedeanCopula& alpha,
                             const MarginalPieces& pieces) {
  if (r.dtilde != 1) throw Error(ErrorCode::Domain, "record is not an observed death");
  const double x = eval_cache_exact(cache_for(r, pieces), alpha);
  require_finite(x, r);
  return x;
}

double log_j_term(const ObservedRecord& r, unsigned s, const ArchimedeanCopula& alpha,
                  const MarginalPieces& pieces, const McConfig& mc) {
  if (r.dtilde != 0) throw Error(ErrorCode::Domain, "record is not alive at Y");
  FrailtyValues fv;
  if (mc.mode == InnerMode::MonteCarlo) fv = FrailtyValues::at(alpha, FrailtyDraws::make(mc));
  return eval_cache_j_term(cache_for(r, pieces), s, alpha, mc.mode, fv);
}

double loglik_alive(const ObservedRecord& r, const ArchimedeanCopula& alpha, const MarginalPieces& pieces,
                    const McConfig& mc) {
  if (r.dtilde != 0) throw Error(ErrorCode::Domain, "record is not alive at Y");
  const RecordCache c = cache_for(r, pieces);
  double x;
  if (mc.mode == InnerMode::MonteCarlo) x = eval_cache_mc(c, alpha, FrailtyValues::at(alpha, FrailtyDraws::make(mc)));
  else x = eval_cache_exact(c, alpha);
  require_finite(x, r);
  return x;
}

double loglik_alive_enumerated(const ObservedRecord& r, const ArchimedeanCopula& alpha,
                               const MarginalPieces& pieces, const McConfig& mc) {
  if (r.dtilde != 0) throw Error(ErrorCode::Domain, "record is not alive at Y");
  const RecordCache c = cache_for(r, pieces);
  FrailtyValues fv;
  if (mc.mode == InnerMode::MonteCarlo) fv = FrailtyValues::at(alpha, FrailtyDraws::make(mc));
  std::vector<double> js(1u << c.nc);
  for (unsigned s = 0; s < js.size(); ++s) js[s] = eval_cache_j_term(c, s, alpha, mc.mode, fv);
  return lse(js);
}

LikelihoodWorkspace::LikelihoodWorkspace(const Dataset& data, const MarginalPieces& pieces, const McConfig& mc)
    : mc_(mc) {
  const auto atoms = terminal_atoms(pieces.terminal);
  cache_.reserve(data.size());
  for (const auto& r : data.records) {
    cache_.push_back(build_record_cache(r, pieces, atoms));
    if (!cache_.back().valid) {
      ++diag_.skipped;
      diag_.skipped_ids.push_back(r.id);
    }
  }
  if (mc_.mode == InnerMode::MonteCarlo) draws_ = FrailtyDraws::make(mc_);
}

double LikelihoodWorkspace::profile_loglik(const ArchimedeanCopula& alpha, int threads) const {
  FrailtyValues fv;
  if (mc_.mode == InnerMode::MonteCarlo) fv = FrailtyValues::at(alpha, draws_);
  std::vector<double> part(cache_.size(), 0.0);
  parallel_for(cache_.size(), threads, [&](std::size_t i) {
    const RecordCache& c = cache_[i];
    if (!c.valid) return;
    part[i] = mc_.mode == InnerMode::MonteCarlo ? eval_cache_mc(c, alpha, fv) : eval_cache_exact(c, alpha);
  });
  double total = 0.0;
  for (double x : part) total += x;
  return total;
}

double profile_loglik(const ArchimedeanCopula& alpha, const MarginalPieces& pieces, const Dataset& data,
                      const McConfig& mc) {
  return LikelihoodWorkspace(data, pieces, mc).profile_loglik(alpha);
}

}  // namespace semicomp
