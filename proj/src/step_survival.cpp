#include "semicomp/step_survival.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semicomp/errors.hpp"

namespace semicomp {

StepSurvival::StepSurvival(std::vector<double> jump_times, std::vector<double> values, double t_max)
    : times_(std::move(jump_times)), values_(std::move(values)), t_max_(t_max) {
  if (times_.size() != values_.size()) throw Error(ErrorCode::Domain, "step function arrays differ in length");
  double prev_t = -1.0, prev_v = 1.0;
  for (std::size_t j = 0; j < times_.size(); ++j) {
    if (!(times_[j] > prev_t) || !(times_[j] >= 0.0))
      throw Error(ErrorCode::Domain, "jump times must be strictly increasing and non-negative");
    if (!(values_[j] <= prev_v) || !(values_[j] >= 0.0))
      throw Error(ErrorCode::Domain, "survival values must be non-increasing in [0,1]");
    prev_t = times_[j];
    prev_v = values_[j];
  }
  if (!times_.empty()) t_max_ = std::max(t_max_, times_.back());
}

std::size_t StepSurvival::count_le(double t) const {
  return static_cast<std::size_t>(std::upper_bound(times_.begin(), times_.end(), t) - times_.begin());
}

std::size_t StepSurvival::count_lt(double t) const {
  return static_cast<std::size_t>(std::lower_bound(times_.begin(), times_.end(), t) - times_.begin());
}

double StepSurvival::operator()(double t) const {
  const std::size_t j = count_le(t);
  return j == 0 ? 1.0 : values_[j - 1];
}

double StepSurvival::left_limit(double t) const {
  const std::size_t j = count_lt(t);
  return j == 0 ? 1.0 : values_[j - 1];
}

double StepSurvival::mid(double t) const { return 0.5 * (left_limit(t) + (*this)(t)); }

double StepSurvival::slope(double t) const {
  const std::size_t j = count_lt(t);  // t in (tau_{j-1}, tau_j]
  if (j >= times_.size()) return 0.0;
  const double t0 = j == 0 ? 0.0 : times_[j - 1];
  const double s0 = j == 0 ? 1.0 : values_[j - 1];
  if (times_[j] <= t0) return 0.0;
  return (values_[j] - s0) / (times_[j] - t0);
}

double StepSurvival::jump_mass(std::size_t j) const {
  return (j == 0 ? 1.0 : values_[j - 1]) - values_[j];
}

StepSurvival kaplan_meier(const std::vector<double>& times, const std::vector<int>& events) {
  if (times.empty()) throw Error(ErrorCode::EmptyData, "Kaplan-Meier needs at least one observation");
  if (times.size() != events.size()) throw Error(ErrorCode::Domain, "times and indicators differ in length");
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

  std::vector<double> jt, jv;
  double s = 1.0;
  double t_max = 0.0;
  std::size_t at_risk = times.size();
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = times[order[i]];
    if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorCode::Domain, "times must be finite and >= 0");
    std::size_t deaths = 0, n_here = 0;
    while (i < order.size() && times[order[i]] == t) {
      deaths += events[order[i]] ? 1 : 0;
      ++n_here;
      ++i;
    }
    if (deaths > 0) {
      s *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
      jt.push_back(t);
      jv.push_back(s);
    }
    at_risk -= n_here;
    t_max = t;
  }
  return StepSurvival(std::move(jt), std::move(jv), t_max);
}

}  // namespace semicomp
