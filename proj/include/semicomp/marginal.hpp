#pragma once

#include <cstddef>
#include <vector>

#include "semicomp/copula.hpp"
#include "semicomp/records.hpp"
#include "semicomp/step_survival.hpp"

namespace semicomp {

StepSurvival terminal_km(const Dataset& data);   // KM of (Y, dtilde)
StepSurvival censoring_km(const Dataset& data);  // KM of (Y, 1 - dtilde)
StepSurvival intermediate_km(const Dataset& data, int k);

enum class WeightKind { Unit, Dampened };

struct WeightSpec {
  WeightKind kind = WeightKind::Unit;
  // Dampening constants. Non-positive values select the 0.9 empirical
  // quantiles of the observed T_k and Y.
  double a = 0.0;
  double b = 0.0;
};

/// Comparable pairs for one intermediate event, with the pieces of the
/// estimating equation that do not depend on theta.
struct ConcordancePairs {
  std::vector<double> weight;
  std::vector<double> s;         // joint survival estimate at the pair minima
  std::vector<unsigned char> concordant;
  std::size_t n = 0;             // sample size, for the C(n,2) normaliser
  std::size_t dropped = 0;       // pairs with zero censoring survival
};

ConcordancePairs concordance_pairs(int k, const Dataset& data, const WeightSpec& weight,
                                   const StepSurvival& S_C);

/// U_k(theta) over precomputed pairs.
double concordance_score(const ArchimedeanCopula& c, const ConcordancePairs& pairs);
/// Convenience form that rebuilds the pairs. Throws NoComparablePairs.
double concordance_score(double theta, int k, const Dataset& data, Family family,
                         const WeightSpec& weight, const StepSurvival& S_C);

enum class RootStatus { Converged, NoRootBelow, NoRootAbove };

struct ThetaOptions {
  double tau_lo = 0.001;
  double tau_hi = 0.99;
  bool allow_negative = false;  // Frank only: search tau in [-tau_hi, tau_hi]
  double tol = 1e-10;
};

struct PairwiseAssociation {
  int k = 0;
  double theta = 0.0;
  double tau = 0.0;
  WeightSpec weight;
  RootStatus status = RootStatus::Converged;
  std::size_t n_pairs = 0;
};

/// Sign-bracketed bisection on the tau scale. A missing sign change is reported
/// through status with theta placed at the violated bound.
PairwiseAssociation solve_theta(int k, const Dataset& data, Family family, const WeightSpec& weight,
                                const StepSurvival& S_C, const ThetaOptions& opt = {});

struct SelfConsistencyOptions {
  double tol = 1e-6;
  int max_iter = 200;
};

struct SelfConsistencyResult {
  StepSurvival survival;
  int iterations = 0;
  bool converged = false;
};

SelfConsistencyResult self_consistent_marginal(int k, const Dataset& data, const ArchimedeanCopula& theta_k,
                                               const StepSurvival& S_D, const SelfConsistencyOptions& opt = {});

struct GValue {
  double g = 1.0;
  double g_prime = 0.0;  // <= 0
};

/// G_k(t_k; t) = H2(S_k(t_k), S_D(t)) and its t_k-derivative through the
/// linear interpolant slope of S_k.
GValue conditional_survival_G(double t_k, double t, const StepSurvival& S_k, const StepSurvival& S_D,
                              const ArchimedeanCopula& theta_k);

}  // namespace semicomp
