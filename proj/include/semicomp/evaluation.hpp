#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semicomp/prediction.hpp"

namespace semicomp {

struct MetricConfig {
  double t_star = 12.0;       // restriction time
  double qpe_level = 0.5;
  int grid_points = 100;      // BS / AUC grid on (0, t_star]
  bool ipcw = true;
  double interval_level = 0.95;
  // Past the model's follow-up the curve is unidentified. Zero integrates and
  // scores only up to t_U; Flat holds the last value out to t_star.
  enum class Tail { Flat, Zero } tail = Tail::Zero;
};

/// Per-subject restricted truth min(D, t_star) with its weight. Weight 0 marks
/// a subject whose truth is unknown or whose censoring survival is 0.
struct Truth {
  std::vector<double> value;
  std::vector<double> weight;
  std::size_t dropped = 0;  // known truth but zero censoring survival
};

/// From observed data: known when death is observed or Y >= t_star. With ipcw
/// off every truth must be known and weights are 1.
Truth observed_truth(const Dataset& data, const StepSurvival& S_C, double t_star, bool ipcw);
/// From latent death times (simulation): unit weights.
Truth oracle_truth(const std::vector<double>& death, double t_star);

struct PointErrors {
  double mspe = 0.0;
  double qpe = 0.0;
};

/// Weighted means over all subjects, normalised by n.
PointErrors point_errors(const Truth& truth, const std::vector<double>& cmst_pred,
                         const std::vector<double>& cqst_pred, double level);

double check_loss(double x, double level);

/// IPCW weight w_i(t). With ipcw off the weight is the uncensored indicator form.
double brier_weight(const ObservedRecord& r, const StepSurvival& S_C, double t, bool ipcw);

/// BS(t) over subjects with t past their landmark.
double brier(const Dataset& data, const std::vector<SurvivalPrediction>& preds, const StepSurvival& S_C, double t,
             const std::vector<double>& landmarks, bool ipcw = true);

double brier_scores(const Dataset& data, const std::vector<double>& scores, const StepSurvival& S_C, double t,
                    const std::vector<double>& landmarks, bool ipcw = true);

std::vector<double> metric_grid(double t_star, int n);

/// Trapezoid of BS over {0} + grid, divided by t_star.
double ibs(const std::vector<double>& grid, const std::vector<double>& bs, double t_star);

/// IPCW time-dependent AUC; ties in predicted survival count one half.
double auc_t(const Dataset& data, const std::vector<double>& scores, const StepSurvival& S_C, double t,
             const std::vector<double>& landmarks, bool ipcw = true);

struct IntervalMetrics {
  double cp = 0.0;
  double mid = 0.0;
  std::size_t right_censored = 0;
};

/// CP weighted like the point errors; MID is the plain median width.
IntervalMetrics interval_metrics(const Truth& truth, const std::vector<PredictionInterval>& iv);

struct MethodSpec {
  Method method = Method::DP;
  int k = -1;
  std::string label() const;
};

/// DP, P0, then Pk and Pkm for each event.
std::vector<MethodSpec> default_methods(int K);

/// Prediction for one subject. Pk without the event falls back to the
/// terminal KM from time 0; Pkm without it falls back to P0.
SurvivalPrediction predict_with(const MethodSpec& spec, const PredictionQuery& q, const FittedJointModel& model);

struct MethodReport {
  MethodSpec spec;
  double mspe = 0.0, qpe = 0.0, ibs = 0.0, auc = 0.0;
  double cp = 0.0, mid = 0.0;
  std::size_t right_censored = 0;
  std::vector<double> bs_curve, auc_curve;  // NaN where AUC has no pairs
  double rel_mspe = 1.0, rel_qpe = 1.0, rel_ibs = 1.0;  // method / DP
};

struct EvaluationReport {
  MetricConfig config;
  std::vector<double> grid;
  std::vector<MethodReport> methods;
  std::size_t n = 0;
  std::size_t unpredictable = 0;  // no terminal mass beyond the landmark
  std::size_t dropped_weights = 0;
  const MethodReport* find(const std::string& label) const;
};

/// Scores every method on data. S_C comes from the training sample; death
/// supplies latent truths when known (simulation), otherwise IPCW is used.
EvaluationReport evaluate(const FittedJointModel& model, const Dataset& data, const StepSurvival& S_C,
                          const MetricConfig& cfg, const std::vector<MethodSpec>& methods,
                          const std::optional<std::vector<double>>& death = std::nullopt, int threads = 1);

struct CvScheme {
  enum class Kind { KFold, Random } kind = Kind::KFold;
  int folds = 3;
  double test_fraction = 1.0 / 3.0;
  int repeats = 1;
  std::uint64_t seed = 1;
  double max_failure_fraction = 0.2;
};

struct CvSplit {
  std::vector<std::size_t> train, test;
};

/// Stratified on (death observed, any intermediate observed).
std::vector<CvSplit> make_splits(const Dataset& data, const CvScheme& scheme);

struct CvSummary {
  std::string label;
  double mspe_mean = 0.0, mspe_sd = 0.0;
  double qpe_mean = 0.0, qpe_sd = 0.0;
  double ibs_mean = 0.0, ibs_sd = 0.0;
  double auc_mean = 0.0, auc_sd = 0.0;
};

struct CvReport {
  std::vector<CvSummary> methods;
  std::vector<EvaluationReport> splits;
  int fits = 0;
  int failures = 0;
};

CvReport cross_validate(const Dataset& data, const FitConfig& fit, const MetricConfig& metric,
                        const CvScheme& scheme, int threads = 1);

}  // namespace semicomp
