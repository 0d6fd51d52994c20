#include "semicomp/copula.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/bernoulli.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "semicomp/errors.hpp"

namespace semicomp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void domain(const std::string& msg) { throw Error(ErrorCode::Domain, msg); }

// log(e^x - 1) for x > 0 without overflow.
double log_expm1(double x) { return x > 30.0 ? x + std::log1p(-std::exp(-x)) : std::log(std::expm1(x)); }

// log(1 - p e^{-t}) with p = 1 - e^{-theta}; the complement is formed directly
// when the product is close to one.
double frank_log_one_minus_x(double theta, double t, double x) {
  if (x < 0.5) return std::log1p(-x);
  return std::log(-std::expm1(-t) + std::exp(-t - theta));
}

double clamp_unit(double u) { return std::clamp(u, kUnitFloor, 1.0 - kUnitFloor); }

// Eulerian numbers A(n, j), 0 <= j < n, as doubles. Row n = 0 is {1}.
const std::vector<std::vector<double>>& eulerian_table() {
  static const std::vector<std::vector<double>> table = [] {
    std::vector<std::vector<double>> a(kMaxDerivOrder + 1);
    a[0] = {1.0};
    for (int n = 1; n <= kMaxDerivOrder; ++n) {
      a[n].assign(n, 0.0);
      for (int j = 0; j < n; ++j) {
        double left = j < static_cast<int>(a[n - 1].size()) ? a[n - 1][j] : 0.0;
        double right = (j >= 1 && j - 1 < static_cast<int>(a[n - 1].size())) ? a[n - 1][j - 1] : 0.0;
        a[n][j] = (j + 1) * left + (n - j) * right;
      }
    }
    return a;
  }();
  return table;
}

double log_sum_exp(const double* x, int n) {
  double m = -kInf;
  for (int i = 0; i < n; ++i) m = std::max(m, x[i]);
  if (m == -kInf) return -kInf;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(x[i] - m);
  return m + std::log(s);
}

// Frank, theta > 0. log|psi^(d)(t)| through polylogarithms of negative order.
double frank_log_abs_psi_deriv(double theta, double t, int d) {
  const double log_p = std::log(-std::expm1(-theta));
  const double log_x = log_p - t;
  const double x = std::exp(log_x);
  const double log1mx = frank_log_one_minus_x(theta, t, x);
  if (d == 0) {
    // psi = -log(1-x)/theta
    return std::log(-log1mx) - std::log(theta);
  }
  const int n = d - 1;
  const auto& row = eulerian_table()[n];
  double poly = 0.0;
  for (int j = static_cast<int>(row.size()) - 1; j >= 0; --j) poly = poly * x + row[j];
  return log_x + std::log(poly) - (n + 1) * log1mx - std::log(theta);
}

// Frank with negative theta is not a Laplace transform; evaluate directly.
double frank_psi_deriv_signed(double theta, double t, int d) {
  const double x = -std::expm1(-theta) * std::exp(-t);
  if (d == 0) return -std::log1p(-x) / theta;
  const int n = d - 1;
  const auto& row = eulerian_table()[n];
  double poly = 0.0;
  for (int j = static_cast<int>(row.size()) - 1; j >= 0; --j) poly = poly * x + row[j];
  const double li = x * poly / std::pow(1.0 - x, n + 1);
  return ((d % 2) ? -1.0 : 1.0) * li / theta;
}

// Gumbel: psi(t) = exp(-t^a), a = 1/theta. psi^(d) = psi * B_d with B_d a
// complete Bell polynomial in the derivatives of -t^a. Writing
// |B_d| = t^{-d} P_d(t^a), P_d has non-negative coefficients.
double gumbel_log_abs_psi_deriv(double theta, double t, int d) {
  const double a = 1.0 / theta;
  if (d == 0) return -std::pow(t, a);
  if (t == 0.0) return theta == 1.0 ? 0.0 : kInf;
  if (t == kInf) return -kInf;

  std::array<double, kMaxDerivOrder + 1> c{};  // c[j] = |a(a-1)...(a-j+1)|
  c[1] = a;
  for (int j = 2; j <= d; ++j) c[j] = c[j - 1] * (j - 1 - a);

  // coef[n][m], m = 0..n
  std::vector<std::vector<double>> coef(d + 1);
  coef[0] = {1.0};
  for (int n = 1; n <= d; ++n) {
    coef[n].assign(n + 1, 0.0);
    double binom = 1.0;  // C(n-1, k)
    for (int k = 0; k <= n - 1; ++k) {
      const double w = binom * c[k + 1];
      const auto& prev = coef[n - 1 - k];
      for (std::size_t m = 0; m < prev.size(); ++m) coef[n][m + 1] += w * prev[m];
      binom = binom * (n - 1 - k) / (k + 1);
    }
  }
  const double log_t = std::log(t);
  const double log_s = a * log_t;
  std::array<double, kMaxDerivOrder + 1> terms{};
  int nt = 0;
  for (int m = 1; m <= d; ++m) {
    if (coef[d][m] > 0.0) terms[nt++] = std::log(coef[d][m]) + m * log_s;
  }
  return -std::exp(log_s) - d * log_t + log_sum_exp(terms.data(), nt);
}

}  // namespace

Family parse_family(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (s == "clayton") return Family::Clayton;
  if (s == "gumbel") return Family::Gumbel;
  if (s == "frank") return Family::Frank;
  throw Error(ErrorCode::Config, "unknown copula family '" + std::string(name) + "'");
}

std::string_view family_name(Family f) {
  switch (f) {
    case Family::Clayton: return "clayton";
    case Family::Gumbel: return "gumbel";
    case Family::Frank: return "frank";
  }
  return "?";
}

ArchimedeanCopula::ArchimedeanCopula(Family f, double th) : family(f), theta(th) {
  if (!std::isfinite(th)) domain("copula parameter must be finite");
  if (f == Family::Clayton && th < 0.0) domain("Clayton theta must be >= 0");
  if (f == Family::Gumbel && th < 1.0) domain("Gumbel theta must be >= 1");
}

bool ArchimedeanCopula::independent() const {
  return family == Family::Gumbel ? theta == 1.0 : theta == 0.0;
}

double phi(const ArchimedeanCopula& c, double u) {
  if (!(u > 0.0 && u <= 1.0)) domain("phi requires u in (0,1]");
  if (u == 1.0) return 0.0;
  if (c.independent()) return -std::log(u);
  const double th = c.theta;
  switch (c.family) {
    case Family::Clayton: return std::expm1(-th * std::log(u)) / th;
    case Family::Gumbel: return std::pow(-std::log(u), th);
    case Family::Frank: {
      // 1 - ratio, where ratio = expm1(-th u)/expm1(-th)
      const double delta = std::exp(-th * u) * std::expm1(-th * (1.0 - u)) / std::expm1(-th);
      if (std::fabs(delta) < 0.5) return -std::log1p(-delta);
      return -std::log(std::expm1(-th * u) / std::expm1(-th));
    }
  }
  return 0.0;
}

double psi(const ArchimedeanCopula& c, double t) {
  if (!(t >= 0.0)) domain("psi requires t >= 0");
  if (t == 0.0) return 1.0;
  if (t == kInf) return 0.0;
  if (c.independent()) return std::exp(-t);
  const double th = c.theta;
  switch (c.family) {
    case Family::Clayton: return std::exp(-std::log1p(th * t) / th);
    case Family::Gumbel: return std::exp(-std::pow(t, 1.0 / th));
    case Family::Frank: {
      if (th > 0.0) {
        const double x = -std::expm1(-th) * std::exp(-t);
        return -frank_log_one_minus_x(th, t, x) / th;
      }
      return -std::log1p(std::expm1(-th) * std::exp(-t)) / th;
    }
  }
  return 0.0;
}

double phi_d1(const ArchimedeanCopula& c, double u) {
  if (!(u > 0.0 && u <= 1.0)) domain("phi' requires u in (0,1]");
  if (c.family == Family::Frank && c.theta != 0.0) return -c.theta / std::expm1(c.theta * u);
  return -std::exp(log_neg_phi_d1(c, u));
}

double log_neg_phi_d1(const ArchimedeanCopula& c, double u) {
  if (!(u > 0.0 && u <= 1.0)) domain("phi' requires u in (0,1]");
  if (c.independent()) return -std::log(u);
  const double th = c.theta;
  switch (c.family) {
    case Family::Clayton: return -(th + 1.0) * std::log(u);
    case Family::Gumbel: {
      const double L = -std::log(u);
      if (L == 0.0) return -kInf;
      return std::log(th) + (th - 1.0) * std::log(L) - std::log(u);
    }
    case Family::Frank:
      if (th > 0.0) return std::log(th) - log_expm1(th * u);
      return std::log(-th) - std::log(-std::expm1(th * u));
  }
  return 0.0;
}

double phi_d2(const ArchimedeanCopula& c, double u) {
  if (!(u > 0.0 && u <= 1.0)) domain("phi'' requires u in (0,1]");
  if (c.independent()) return 1.0 / (u * u);
  const double th = c.theta;
  switch (c.family) {
    case Family::Clayton: return (th + 1.0) * std::exp(-(th + 2.0) * std::log(u));
    case Family::Gumbel: {
      const double L = -std::log(u);
      return th * std::pow(L, th - 2.0) * ((th - 1.0) + L) / (u * u);
    }
    case Family::Frank: {
      const double e = std::expm1(-th * u);
      return th * th * std::exp(-th * u) / (e * e);
    }
  }
  return 0.0;
}

double cross_ratio(const ArchimedeanCopula& c, double s) {
  if (!(s > 0.0 && s <= 1.0)) domain("cross ratio requires s in (0,1]");
  if (c.independent()) return 1.0;
  s = clamp_unit(s);
  const double th = c.theta;
  switch (c.family) {
    case Family::Clayton: return th + 1.0;
    case Family::Gumbel: return 1.0 + (th - 1.0) / (-std::log(s));
    case Family::Frank: return th * s / (-std::expm1(-th * s));
  }
  return 1.0;
}

double log_abs_psi_deriv(const ArchimedeanCopula& c, double t, int d) {
  if (d < 0 || d > kMaxDerivOrder)
    throw Error(ErrorCode::UnsupportedOrder, "derivative order " + std::to_string(d));
  if (!(t >= 0.0)) domain("psi derivative requires t >= 0");
  if (c.independent()) return -t;
  const double th = c.theta;
  switch (c.family) {
    case Family::Clayton: {
      if (t == kInf) return -kInf;
      double s = 0.0;
      for (int j = 1; j < d; ++j) s += std::log1p(j * th);
      return s + (-1.0 / th - d) * std::log1p(th * t);
    }
    case Family::Gumbel: return gumbel_log_abs_psi_deriv(th, t, d);
    case Family::Frank:
      if (th < 0.0) domain("log|psi^(d)| needs a positive Frank parameter");
      if (t == kInf) return -kInf;
      return frank_log_abs_psi_deriv(th, t, d);
  }
  return 0.0;
}

double psi_deriv(const ArchimedeanCopula& c, double t, int d) {
  if (d < 0 || d > kMaxDerivOrder)
    throw Error(ErrorCode::UnsupportedOrder, "derivative order " + std::to_string(d));
  if (!(t >= 0.0)) domain("psi derivative requires t >= 0");
  if (d == 0) return psi(c, t);
  if (c.family == Family::Frank && c.theta < 0.0) return frank_psi_deriv_signed(c.theta, t, d);
  const double mag = std::exp(log_abs_psi_deriv(c, t, d));
  return (d % 2) ? -mag : mag;
}

double psi_deriv_mc(const ArchimedeanCopula& c, double t, int d, int n_draws, std::uint64_t seed) {
  if (n_draws < 1) domain("Monte Carlo needs at least one draw");
  Rng rng = make_rng(seed, stream::kFrailty, 0);
  double acc = 0.0;
  for (int j = 0; j < n_draws; ++j) {
    const double v = sample_frailty(c, rng);
    acc += std::exp(d * std::log(v) - t * v);
  }
  acc /= n_draws;
  return (d % 2) ? -acc : acc;
}

double h_joint(double u, double v, const ArchimedeanCopula& c) {
  if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0)) domain("H requires (u,v) in the unit square");
  if (u == 0.0 || v == 0.0) return 0.0;
  return psi(c, phi(c, u) + phi(c, v));
}

Partials copula_partials(double u, double v, const ArchimedeanCopula& c) {
  if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0)) domain("partials require (u,v) in the unit square");
  Partials p;
  p.floored = u < kUnitFloor || v < kUnitFloor;
  u = clamp_unit(u);
  v = clamp_unit(v);
  const double s = phi(c, u) + phi(c, v);
  if (c.family == Family::Frank && c.theta < 0.0) {
    const double d1u = phi_d1(c, u), d1v = phi_d1(c, v);
    p.h1 = psi_deriv(c, s, 1) * d1u;
    p.h2 = psi_deriv(c, s, 1) * d1v;
    p.h12 = psi_deriv(c, s, 2) * d1u * d1v;
    return p;
  }
  const double l1 = log_abs_psi_deriv(c, s, 1);
  const double l2 = log_abs_psi_deriv(c, s, 2);
  const double lu = log_neg_phi_d1(c, u), lv = log_neg_phi_d1(c, v);
  p.h1 = std::exp(l1 + lu);
  p.h2 = std::exp(l1 + lv);
  p.h12 = std::exp(l2 + lu + lv);
  return p;
}

double log_h1(double u, double v, const ArchimedeanCopula& c) {
  u = clamp_unit(u);
  v = clamp_unit(v);
  return log_abs_psi_deriv(c, phi(c, u) + phi(c, v), 1) + log_neg_phi_d1(c, u);
}

double log_h12(double u, double v, const ArchimedeanCopula& c) {
  u = clamp_unit(u);
  v = clamp_unit(v);
  return log_abs_psi_deriv(c, phi(c, u) + phi(c, v), 2) + log_neg_phi_d1(c, u) + log_neg_phi_d1(c, v);
}

double h2(double u, double v, const ArchimedeanCopula& c) { return std::exp(log_h1(v, u, c)); }

double debye1(double x) {
  if (x == 0.0) return 1.0;
  if (x < 0.0) return debye1(-x) - x / 2.0;
  if (x < 2.0) {
    // 1 - x/4 + sum_k B_2k x^2k / ((2k+1)(2k)!), convergent for |x| < 2 pi.
    double acc = 1.0 - x / 4.0;
    double pow_x = 1.0, fact = 1.0;
    for (int k = 1; k <= 30; ++k) {
      pow_x *= x * x;
      fact *= (2.0 * k - 1.0) * (2.0 * k);
      const double term = boost::math::unchecked_bernoulli_b2n<double>(k) * pow_x / ((2.0 * k + 1.0) * fact);
      acc += term;
      if (std::fabs(term) < 1e-18) break;
    }
    return acc;
  }
  // int_0^x s/(e^s-1) ds = pi^2/6 - sum_k e^{-kx} (x/k + 1/k^2)
  double tail = 0.0;
  for (int k = 1; k < 200; ++k) {
    const double term = std::exp(-k * x) * (x / k + 1.0 / (static_cast<double>(k) * k));
    tail += term;
    if (term < 1e-18) break;
  }
  return (std::numbers::pi * std::numbers::pi / 6.0 - tail) / x;
}

double tau_from_theta(const ArchimedeanCopula& c) {
  if (c.independent()) return 0.0;
  const double th = c.theta;
  switch (c.family) {
    case Family::Clayton: return th / (th + 2.0);
    case Family::Gumbel: return 1.0 - 1.0 / th;
    case Family::Frank: {
      const double a = std::fabs(th);
      double tau;
      if (a < 1e-3) {
        const double a2 = a * a;
        tau = a / 9.0 - a * a2 / 900.0 + a * a2 * a2 / 52920.0;
      } else {
        tau = 1.0 - 4.0 * (1.0 - debye1(a)) / a;
      }
      return th < 0.0 ? -tau : tau;
    }
  }
  return 0.0;
}

double theta_from_tau(Family f, double tau) {
  if (!std::isfinite(tau) || tau >= 1.0 || tau <= -1.0)
    throw Error(ErrorCode::Range, "Kendall tau must lie in (-1,1)");
  switch (f) {
    case Family::Clayton:
      if (tau < 0.0) throw Error(ErrorCode::Range, "Clayton requires tau >= 0");
      return 2.0 * tau / (1.0 - tau);
    case Family::Gumbel:
      if (tau < 0.0) throw Error(ErrorCode::Range, "Gumbel requires tau >= 0");
      return 1.0 / (1.0 - tau);
    case Family::Frank: {
      if (tau == 0.0) return 0.0;
      const double target = std::fabs(tau);
      auto tau_of = [](double th) { return tau_from_theta(ArchimedeanCopula(Family::Frank, th)); };
      double lo = 0.0, hi = 1.0;
      while (tau_of(hi) < target) {
        lo = hi;
        hi *= 2.0;
      }
      for (int it = 0; it < 300 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (tau_of(mid) < target) lo = mid;
        else hi = mid;
      }
      const double th = 0.5 * (lo + hi);
      return tau < 0.0 ? -th : th;
    }
  }
  return 0.0;
}

double frailty_from_uniforms(const ArchimedeanCopula& c, double u1, double u2) {
  if (c.independent()) return 1.0;
  const double th = c.theta;
  switch (c.family) {
    case Family::Clayton: return th * boost::math::gamma_p_inv(1.0 / th, u1);
    case Family::Gumbel: {
      // Chambers-Mallows-Stuck (Kanter) positive stable with index a and
      // Laplace transform exp(-t^a).
      const double a = 1.0 / th;
      const double U = std::numbers::pi * u1;
      const double E = -std::log(u2);
      return std::sin(a * U) / std::pow(std::sin(U), 1.0 / a) *
             std::pow(std::sin((1.0 - a) * U) / E, (1.0 - a) / a);
    }
    case Family::Frank: {
      if (th < 0.0) domain("Frank frailty needs a positive parameter");
      // Kemp's LK sampler for the logarithmic series law, p = 1 - e^{-theta}.
      const double p = -std::expm1(-th);
      if (u1 > p) return 1.0;
      const double q = -std::expm1(-th * u2);
      if (u1 < q * q) {
        const double r = std::log(u1) / std::log(q);
        return 1.0 + std::floor(r);
      }
      return u1 > q ? 1.0 : 2.0;
    }
  }
  return 1.0;
}

double sample_frailty(const ArchimedeanCopula& c, Rng& rng) {
  const double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return frailty_from_uniforms(c, u1, u2);
}

std::vector<double> sample_exchangeable_uniforms(int K, const ArchimedeanCopula& c, Rng& rng) {
  if (K < 1) domain("K must be >= 1");
  const double v = sample_frailty(c, rng);
  std::vector<double> u(K);
  for (int k = 0; k < K; ++k) u[k] = psi(c, exponential1(rng) / v);
  return u;
}

}  // namespace semicomp
