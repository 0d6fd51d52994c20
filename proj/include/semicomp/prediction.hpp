#pragma once

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "semicomp/model.hpp"

namespace semicomp {

/// Observed intermediate history of one subject: (event index, time) pairs.
struct PredictionQuery {
  std::vector<std::pair<int, double>> events;
  int m() const { return static_cast<int>(events.size()); }
  double landmark() const;  // 0 when nothing is observed
  void validate(int K) const;
};

PredictionQuery query_from_record(const ObservedRecord& r);

enum class Method { DP, P0, Pk, Pkm };
std::string_view method_name(Method m);

/// Right-continuous step curve S*(t | history) for t >= landmark. times[0] is
/// the landmark with value 1; the last value holds beyond the last knot.
struct SurvivalPrediction {
  Method method = Method::DP;
  int k = -1;  // event used by Pk / Pkm
  double landmark = 0.0;
  std::vector<double> times;
  std::vector<double> values;
  double operator()(double t) const;
};

/// Q_m at terminal time t, excluding the y-free slope factors of the observed
/// marginals. Requires m >= 2 and t > landmark.
double q_m(const PredictionQuery& q, double t, const FittedJointModel& model);

SurvivalPrediction predict_survival_dp(const PredictionQuery& q, const FittedJointModel& model);

/// P0, Pk or Pkm. k is required for the latter two and must be observed.
SurvivalPrediction predict_baseline(const PredictionQuery& q, const FittedJointModel& model, Method method,
                                    int k = -1);

/// landmark + integral of S* from landmark to t_star, exact for the step curve.
double cmst(const SurvivalPrediction& p, double t_star);

/// Smallest knot with S* <= 1 - level. NotIdentified when level >= 1 - S*(t_upper).
double cqst(const SurvivalPrediction& p, double level, double t_upper);
std::optional<double> try_cqst(const SurvivalPrediction& p, double level, double t_upper);

struct PredictionInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool right_censored = false;  // upper quantile not identified; hi set to t_star
};

PredictionInterval prediction_interval(const SurvivalPrediction& p, double t_upper, double t_star,
                                       double level = 0.95);

/// Knots in (landmark, t_upper] merged with n equally spaced points.
std::vector<double> prediction_grid(const SurvivalPrediction& p, double t_upper, int n = 200);

}  // namespace semicomp
