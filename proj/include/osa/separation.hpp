#pragma once

#include <cmath>
#include <stdexcept>

#include "osa/sensor.hpp"

namespace osa {

// Transmit probabilities given the sensing outcome: f0 for "busy", f1 for
// "idle".
struct AccessRule {
  double f0 = 0.0;
  double f1 = 1.0;
};

struct CollisionBudget {
  double zeta = 0.05;

  void validate() const {
    if (!(zeta > 0.0 && zeta < 1.0))
      throw std::invalid_argument("CollisionBudget: zeta must be in (0,1)");
  }
};

enum class SensorRegion { Aggressive, Boundary, Conservative };

// deltas arrive from root-finding, so the boundary compare is tolerant
constexpr double kDeltaCompareTol = 1e-12;

inline SensorRegion classify_region(double delta, double zeta) {
  if (std::fabs(delta - zeta) <= kDeltaCompareTol) return SensorRegion::Boundary;
  return delta < zeta ? SensorRegion::Aggressive : SensorRegion::Conservative;
}

// Optimal transmission probabilities for a given PM delta under collision
// budget zeta:
//   ((zeta-delta)/(1-delta), 1)  delta < zeta
//   (0, 1)                       delta = zeta
//   (0, zeta/delta)              delta > zeta
inline AccessRule optimal_access_given_delta(double delta, double zeta) {
  if (delta < 0.0 || delta > 1.0)
    throw std::domain_error("optimal_access_given_delta: delta out of [0,1]");
  CollisionBudget{zeta}.validate();
  switch (classify_region(delta, zeta)) {
    case SensorRegion::Aggressive:
      return {(zeta - delta) / (1.0 - delta), 1.0};
    case SensorRegion::Boundary:
      return {0.0, 1.0};
    case SensorRegion::Conservative:
    default:
      return {0.0, zeta / delta};
  }
}

// Conditional collision probability: (1 - delta) f0 + delta f1.
inline double collision_probability(const OperatingPoint& point,
                                    const AccessRule& rule) {
  return (1.0 - point.delta) * rule.f0 + point.delta * rule.f1;
}

// Instantaneous-throughput factor eps f0 + (1 - eps) f1; the expected
// immediate reward is B_a * Pr{S_a = 1} times this.
inline double instantaneous_throughput_factor(const OperatingPoint& point,
                                              const AccessRule& rule) {
  return point.epsilon * rule.f0 + (1.0 - point.epsilon) * rule.f1;
}

struct SensorDesign {
  OperatingPoint point;
  AccessRule rule;
};

// The separation-principle design: on-curve operating point with PM = zeta
// and the trust-the-sensor access rule (0, 1).
inline SensorDesign optimal_design(const RocCurve& curve, double zeta) {
  CollisionBudget{zeta}.validate();
  const double eps = curve.eps_for_pm(zeta);
  if (eps > 1.0 - zeta + 1e-9)
    throw std::domain_error("optimal_design: curve cannot achieve delta = zeta");
  return {{eps, zeta}, optimal_access_given_delta(zeta, zeta)};
}

}  // namespace osa
