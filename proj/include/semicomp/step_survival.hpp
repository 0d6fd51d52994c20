#pragma once

#include <cstddef>
#include <vector>

namespace semicomp {

/// Right-continuous non-increasing step function equal to 1 before the first
/// jump. Carrier for the Kaplan-Meier and self-consistent survival estimates.
class StepSurvival {
 public:
  StepSurvival() = default;
  StepSurvival(std::vector<double> jump_times, std::vector<double> values, double t_max);

  const std::vector<double>& jump_times() const { return times_; }
  const std::vector<double>& values() const { return values_; }
  double t_max() const { return t_max_; }
  std::size_t size() const { return times_.size(); }

  /// Number of jumps at or before t.
  std::size_t count_le(double t) const;
  /// Number of jumps strictly before t.
  std::size_t count_lt(double t) const;

  double operator()(double t) const;
  double left_limit(double t) const;
  /// Average of the left and right limits; equals S(t) away from jumps.
  double mid(double t) const;

  /// Slope of the piecewise-linear interpolant through (0,1) and the jump
  /// points, taken on the interval (tau_{j-1}, tau_j] containing t. Zero past
  /// the last jump.
  double slope(double t) const;

  /// Mass removed at jump j.
  double jump_mass(std::size_t j) const;
  /// Value after the last jump (mass not placed on any jump).
  double tail_mass() const { return values_.empty() ? 1.0 : values_.back(); }

  bool operator==(const StepSurvival& o) const = default;

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  double t_max_ = 0.0;
};

/// Product-limit estimator. Indicator 1 marks an event. Throws EmptyData.
StepSurvival kaplan_meier(const std::vector<double>& times, const std::vector<int>& events);

}  // namespace semicomp
