#pragma once

#include <string_view>
#include <vector>

#include "semicomp/rng.hpp"

namespace semicomp {

enum class Family { Clayton, Gumbel, Frank };

Family parse_family(std::string_view name);
std::string_view family_name(Family f);

// Lower floor for generator derivative arguments. Step-function marginals
// routinely produce exact 0 or 1, where the derivatives blow up.
inline constexpr double kUnitFloor = 1e-12;

// Largest derivative order supported by psi_deriv.
inline constexpr int kMaxDerivOrder = 32;

/// Bivariate/exchangeable Archimedean copula. theta = 0 for Clayton and Frank,
/// and theta = 1 for Gumbel, is the independence copula.
struct ArchimedeanCopula {
  Family family = Family::Frank;
  double theta = 0.0;

  ArchimedeanCopula() = default;
  ArchimedeanCopula(Family f, double th);  // throws DomainError if theta invalid

  bool independent() const;
};

double phi(const ArchimedeanCopula& c, double u);
double psi(const ArchimedeanCopula& c, double t);

/// phi'(u) < 0 and log(-phi'(u)); phi''(u) > 0.
double phi_d1(const ArchimedeanCopula& c, double u);
double log_neg_phi_d1(const ArchimedeanCopula& c, double u);
double phi_d2(const ArchimedeanCopula& c, double u);

/// gamma(s) = -s phi''(s) / phi'(s), the cross-ratio function.
double cross_ratio(const ArchimedeanCopula& c, double s);

/// d-th derivative of psi. Exact for all three families.
double psi_deriv(const ArchimedeanCopula& c, double t, int d);

/// log |psi^(d)(t)|. Requires a Laplace-transform generator (theta >= 0 for Frank).
double log_abs_psi_deriv(const ArchimedeanCopula& c, double t, int d);

/// Stable-frailty Monte Carlo estimate of psi^(d)(t) = E[(-V)^d exp(-tV)].
double psi_deriv_mc(const ArchimedeanCopula& c, double t, int d, int n_draws,
                    std::uint64_t seed);

double h_joint(double u, double v, const ArchimedeanCopula& c);

struct Partials {
  double h1 = 0.0;   // dH/du
  double h2 = 0.0;   // dH/dv
  double h12 = 0.0;  // d2H/dudv
  bool floored = false;  // an argument was raised to kUnitFloor
};

Partials copula_partials(double u, double v, const ArchimedeanCopula& c);

/// Log-domain helpers used where the partials feed a likelihood.
double log_h1(double u, double v, const ArchimedeanCopula& c);
double log_h12(double u, double v, const ArchimedeanCopula& c);
double h2(double u, double v, const ArchimedeanCopula& c);

double tau_from_theta(const ArchimedeanCopula& c);
double theta_from_tau(Family f, double tau);

/// Frailty draw from two uniforms in (0,1). Deterministic in (u1,u2) so common
/// random numbers can be reused across parameter values.
double frailty_from_uniforms(const ArchimedeanCopula& c, double u1, double u2);
double sample_frailty(const ArchimedeanCopula& c, Rng& rng);

/// U_k = psi(E_k / V) with E_k iid Exp(1) and a single frailty V.
std::vector<double> sample_exchangeable_uniforms(int K, const ArchimedeanCopula& c, Rng& rng);

/// Debye function D_1(x) = x^{-1} int_0^x s/(e^s - 1) ds.
double debye1(double x);

}  // namespace semicomp
