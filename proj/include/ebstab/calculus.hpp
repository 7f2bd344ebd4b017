#pragma once

// Active index sets, directional derivatives of the max-function and the
// generators of its subdifferential (the active gradients).

#include "ebstab/model.hpp"

#include <span>

namespace ebstab {

/// Default activity tolerance eta = 1e-9 * max(1, |f(x)|).
inline double default_eta(double f_value) { return 1e-9 * std::max(1.0, std::abs(f_value)); }

struct ActiveSet {
  Vector point;
  std::vector<std::size_t> indices;  // ascending
  double eta = 0.0;
  double f_value = 0.0;

  std::vector<std::string> labels(const System& sys) const {
    std::vector<std::string> out;
    for (auto i : indices) out.push_back(sys.label(i));
    return out;
  }
};

/// All components within eta of the max. A negative eta selects the default.
inline ActiveSet active_set(const System& sys, const Vector& x, double eta = -1.0) {
  const Evaluation e = evaluate(sys, x);
  ActiveSet s;
  s.point = x;
  s.f_value = e.f_value;
  s.eta = eta >= 0.0 ? eta : default_eta(e.f_value);
  for (std::size_t i = 0; i < e.component_values.size(); ++i)
    if (e.f_value - e.component_values[i] <= s.eta) s.indices.push_back(i);
  return s;
}

struct GeneratorSet {
  std::vector<Vector> gradients;
  std::vector<std::size_t> indices;
};

inline GeneratorSet generators(const System& sys, const ActiveSet& active) {
  GeneratorSet g;
  g.indices = active.indices;
  g.gradients.reserve(active.indices.size());
  for (auto i : active.indices) g.gradients.push_back(sys.gradient(i, active.point));
  return g;
}

inline GeneratorSet generators_of(const System& sys, const Vector& x, std::span<const std::size_t> subset) {
  GeneratorSet g;
  g.indices.assign(subset.begin(), subset.end());
  for (auto i : subset) g.gradients.push_back(sys.gradient(i, x));
  return g;
}

/// d+f(x, h) = max over active t of <grad f_t(x), h>.
inline double directional_derivative(const System& sys, const Vector& x, const Vector& h, double eta = -1.0) {
  if (h.size() != sys.dimension()) throw Error(ErrorKind::Usage, "direction dimension does not match system");
  require_finite(h, "direction");
  const ActiveSet act = active_set(sys, x, eta);
  double best = -kInf;
  for (auto i : act.indices) best = std::max(best, sys.gradient(i, x).dot(h));
  return best;
}

/// Difference quotient (f(x + t h) - f(x)) / t at the smallest step. Quotients
/// of a convex function are nonincreasing as t decreases; a violation beyond
/// 1e-10 is reported as an error. Testing oracle only.
inline double finite_difference_dd(const System& sys, const Vector& x, const Vector& h, std::span<const double> steps) {
  if (steps.empty()) throw Error(ErrorKind::Usage, "steps must be non-empty");
  for (std::size_t k = 0; k < steps.size(); ++k) {
    if (!(steps[k] > 0.0)) throw Error(ErrorKind::Usage, "steps must be positive");
    if (k > 0 && !(steps[k] < steps[k - 1])) throw Error(ErrorKind::Usage, "steps must be strictly decreasing");
  }
  const double fx = max_value(sys, x);
  double prev = kInf;
  double q = 0.0;
  for (double t : steps) {
    q = (max_value(sys, x + t * h) - fx) / t;
    if (q > prev + 1e-10)
      throw Error(ErrorKind::Numerical, "difference quotients increased as the step shrank (convexity or evaluation bug)");
    prev = q;
  }
  return q;
}

}  // namespace ebstab
