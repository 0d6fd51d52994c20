#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "semicomp/copula.hpp"
#include "semicomp/errors.hpp"
#include "semicomp/simulation.hpp"

using namespace semicomp;

namespace {

// Plain composite Simpson, used as an oracle independent of the library.
template <class F>
double simpson(F f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Closed-form Kendall tau integral 1 + 4 int_0^1 phi/phi' du.
double tau_by_quadrature(const ArchimedeanCopula& c) {
  auto f = [&](double u) {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    return phi(c, u) / phi_d1(c, u);
  };
  return 1.0 + 4.0 * simpson(f, 0.0, 1.0);
}

}  // namespace

TEST_CASE("generator closed forms") {
  ArchimedeanCopula cl(Family::Clayton, 1.0);
  CHECK(phi(cl, 1.0) == 0.0);
  CHECK(phi(cl, 0.5) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(psi(cl, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
  ArchimedeanCopula gu(Family::Gumbel, 2.0);
  CHECK(phi(gu, std::exp(-1.0)) == doctest::Approx(1.0).epsilon(1e-14));
  for (auto f : {Family::Clayton, Family::Gumbel, Family::Frank}) {
    ArchimedeanCopula c(f, f == Family::Gumbel ? 1.7 : 2.5);
    CHECK(psi(c, 0.0) == doctest::Approx(1.0));
    CHECK(std::abs(psi(c, phi(c, 0.3)) - 0.3) < 1e-10);
  }
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(ArchimedeanCopula(Family::Clayton, -0.5), Error);
  CHECK_THROWS_AS(ArchimedeanCopula(Family::Gumbel, 0.5), Error);
}

TEST_CASE("psi derivatives") {
  ArchimedeanCopula cl(Family::Clayton, 1.0);
  CHECK(psi_deriv(cl, 1.0, 0) == doctest::Approx(psi(cl, 1.0)));
  // -(1 + t)^{-2} at t = 1
  CHECK(psi_deriv(cl, 1.0, 1) == doctest::Approx(-0.25).epsilon(1e-13));

  ArchimedeanCopula fr(Family::Frank, 2.0);
  const double h = 2e-3, t = 0.7;
  auto p = [&](double x) { return psi(fr, x); };
  const double fd3 = (p(t + 2 * h) - 2 * p(t + h) + 2 * p(t - h) - p(t - 2 * h)) / (2 * h * h * h);
  CHECK(psi_deriv(fr, t, 3) == doctest::Approx(fd3).epsilon(1e-4));

  // sign alternation and log form
  for (int d = 0; d <= 6; ++d) {
    const double v = psi_deriv(fr, 1.3, d);
    CHECK((d % 2 == 0 ? v > 0 : v < 0));
    CHECK(log_abs_psi_deriv(fr, 1.3, d) == doctest::Approx(std::log(std::abs(v))).epsilon(1e-10));
  }
}

TEST_CASE("joint copula and partials") {
  ArchimedeanCopula cl(Family::Clayton, 1.0);
  CHECK(h_joint(0.5, 0.5, cl) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  for (auto f : {Family::Clayton, Family::Gumbel, Family::Frank}) {
    ArchimedeanCopula c(f, f == Family::Gumbel ? 2.0 : 3.0);
    CHECK(h_joint(0.4, 1.0, c) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(h_joint(0.7, 0.2, c) == doctest::Approx(h_joint(0.2, 0.7, c)).epsilon(1e-14));
  }
  // d/dv (u^-1 + v^-1 - 1)^-1 = v^-2 H^2 = 4 * 1/9
  const Partials p = copula_partials(0.5, 0.5, cl);
  CHECK(p.h2 == doctest::Approx(4.0 / 9.0).epsilon(1e-12));
  CHECK(h2(0.5, 0.5, cl) == doctest::Approx(4.0 / 9.0).epsilon(1e-12));

  // mixed partial by central differences
  ArchimedeanCopula fr(Family::Frank, 2.0);
  const double e = 1e-4, u = 0.35, v = 0.6;
  const double fd = (h_joint(u + e, v + e, fr) - h_joint(u + e, v - e, fr) - h_joint(u - e, v + e, fr) +
                     h_joint(u - e, v - e, fr)) / (4 * e * e);
  CHECK(copula_partials(u, v, fr).h12 == doctest::Approx(fd).epsilon(1e-5));
  CHECK(std::exp(log_h12(u, v, fr)) == doctest::Approx(fd).epsilon(1e-5));
  const double fd1 = (h_joint(u + e, v, fr) - h_joint(u - e, v, fr)) / (2 * e);
  CHECK(std::exp(log_h1(u, v, fr)) == doctest::Approx(fd1).epsilon(1e-6));

  // near independence H2 is the first argument
  ArchimedeanCopula near(Family::Frank, 1e-8);
  CHECK(h2(0.3, 0.8, near) == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("Kendall tau conversions") {
  CHECK(tau_from_theta(ArchimedeanCopula(Family::Clayton, 2.0)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(tau_by_quadrature(ArchimedeanCopula(Family::Clayton, 2.0)) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(theta_from_tau(Family::Gumbel, 0.5) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(tau_from_theta(ArchimedeanCopula(Family::Frank, 0.0)) == doctest::Approx(0.0));
  for (double th : {0.5, 2.0, 6.0, 15.0}) {
    ArchimedeanCopula fr(Family::Frank, th);
    CHECK(tau_from_theta(fr) == doctest::Approx(tau_by_quadrature(fr)).epsilon(1e-6));
    CHECK(theta_from_tau(Family::Frank, tau_from_theta(fr)) == doctest::Approx(th).epsilon(1e-6));
  }
  double prev = -1.0;
  for (double th = 0.2; th < 20; th += 0.7) {
    const double t = tau_from_theta(ArchimedeanCopula(Family::Frank, th));
    CHECK(t > prev);
    prev = t;
  }
}

TEST_CASE("Debye function against quadrature") {
  for (double x : {0.01, 0.5, 1.9, 2.1, 7.0, 30.0}) {
    const double q = simpson([](double s) { return s == 0.0 ? 1.0 : s / std::expm1(s); }, 0.0, x) / x;
    CHECK(debye1(x) == doctest::Approx(q).epsilon(1e-10));
  }
}

TEST_CASE("frailty Laplace transforms") {
  const int N = 100000;
  struct Case { Family f; double th; };
  for (Case cs : {Case{Family::Clayton, 1.0}, Case{Family::Gumbel, 2.0}, Case{Family::Frank, 2.0}}) {
    ArchimedeanCopula c(cs.f, cs.th);
    Rng rng(7);
    double s = 0, s2 = 0;
    bool integer = true, positive = true;
    for (int i = 0; i < N; ++i) {
      const double v = sample_frailty(c, rng);
      positive = positive && v > 0;
      integer = integer && v == std::floor(v);
      const double e = std::exp(-v);
      s += e;
      s2 += e * e;
    }
    const double mean = s / N, se = std::sqrt((s2 / N - mean * mean) / N);
    CHECK(positive);
    if (cs.f == Family::Frank) CHECK(integer);
    CHECK(std::abs(mean - psi(c, 1.0)) < 3 * se);
  }
}

TEST_CASE("Monte Carlo psi derivative agrees with the exact one") {
  ArchimedeanCopula gu(Family::Gumbel, 1.5);
  for (int d = 1; d <= 3; ++d) {
    const double ex = psi_deriv(gu, 0.8, d);
    CHECK(psi_deriv_mc(gu, 0.8, d, 200000, 3) == doctest::Approx(ex).epsilon(0.03));
  }
}

TEST_CASE("exchangeable uniforms") {
  Rng rng(11);
  {
    auto u = sample_exchangeable_uniforms(1, ArchimedeanCopula(Family::Frank, 3.0), rng);
    REQUIRE(u.size() == 1);
    CHECK(u[0] > 0.0);
    CHECK(u[0] < 1.0);
  }
  const int n = 5000;
  for (double tau : {0.5, 0.0}) {
    ArchimedeanCopula c(Family::Frank, theta_from_tau(Family::Frank, tau));
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      auto u = sample_exchangeable_uniforms(2, c, rng);
      a[i] = u[0];
      b[i] = u[1];
    }
    CHECK(std::abs(kendall_tau_b(a, b) - tau) < 0.03);
    // marginal uniformity: KS distance at 1% level
    std::sort(a.begin(), a.end());
    double dmax = 0;
    for (int i = 0; i < n; ++i)
      dmax = std::max({dmax, std::abs(a[i] - double(i) / n), std::abs(a[i] - double(i + 1) / n)});
    CHECK(dmax < 1.63 / std::sqrt(double(n)));
  }
}
