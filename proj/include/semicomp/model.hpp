#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "semicomp/likelihood.hpp"
#include "semicomp/marginal.hpp"

namespace semicomp {

struct AlphaOptions {
  double tau_lo = 0.01;
  double tau_hi = 0.95;
  double tol = 1e-4;      // on the tau scale
  int grid_points = 19;   // coarse scan before the bracketed refinement
};

struct FitConfig {
  Family family = Family::Frank;
  WeightSpec weight;
  ThetaOptions theta;
  SelfConsistencyOptions self_consistency;
  AlphaOptions alpha;
  McConfig mc;
  int threads = 1;
};

struct AlphaEstimate {
  double theta = 0.0;
  double tau = 0.0;
  double loglik = 0.0;
  bool boundary = false;
  int evaluations = 0;
};

struct FitDiagnostics {
  std::vector<std::string> warnings;
  std::vector<int> self_consistency_iterations;
  std::size_t skipped_records = 0;
  int alpha_evaluations = 0;
  bool operator==(const FitDiagnostics&) const = default;
};

struct FittedJointModel {
  Family family = Family::Frank;
  int K = 0;
  bool alpha_applicable = false;
  double alpha = 0.0;
  double tau_alpha = 0.0;
  bool alpha_boundary = false;
  std::vector<PairwiseAssociation> thetas;
  std::vector<StepSurvival> marginals;
  StepSurvival terminal;
  StepSurvival censoring;
  double t_u = 0.0;
  double loglik = 0.0;
  McConfig mc;
  FitDiagnostics diagnostics;

  ArchimedeanCopula alpha_copula() const;
  ArchimedeanCopula theta_copula(int k) const;
  MarginalPieces pieces() const;
};

/// Bounded maximisation of the profile log-likelihood on the tau scale:
/// coarse grid, then Brent refinement around the best grid point.
AlphaEstimate maximize_alpha(const LikelihoodWorkspace& ws, Family family, const AlphaOptions& opt,
                             int threads = 1);

FittedJointModel fit_joint_model(const Dataset& data, const FitConfig& config);

double model_aic(const FittedJointModel& m);

struct BootstrapOptions {
  int B = 200;
  std::uint64_t seed = 1;
  bool identity_resample = false;  // test hook: every replicate reuses the data
  double max_failure_fraction = 0.2;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct BootstrapResult {
  std::vector<double> tau_alpha;               // per successful replicate
  std::vector<std::vector<double>> tau_theta;  // [k][replicate]
  Interval tau_alpha_ci;
  std::vector<Interval> tau_theta_ci;
  int failures = 0;
  int replicates = 0;
};

BootstrapResult bootstrap_fit(const Dataset& data, const FitConfig& config, const BootstrapOptions& opt);

/// Sample quantile with linear interpolation between order statistics.
double quantile_type7(std::vector<double> x, double p);

nlohmann::json model_to_json(const FittedJointModel& m);
FittedJointModel model_from_json(const nlohmann::json& j);

}  // namespace semicomp
