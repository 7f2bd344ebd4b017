#pragma once

// Constraint systems f_t(x) <= 0, t in T, over R^n with the Euclidean norm.
// T is either a finite list or a uniform grid on a compact interval; every
// component is one of three smooth convex families with exact gradients.

#include "ebstab/core.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ebstab {

/// f(x) = <a, x> - b
struct Affine {
  Vector a;
  double b = 0.0;
};

/// f(x) = exp(<a, x> + b) - c
struct ExpAffine {
  Vector a;
  double b = 0.0;
  double c = 0.0;
};

/// f(x) = 1/2 <x, Qx> + <q, x> + r, Q symmetric PSD
struct QuadraticConvex {
  Matrix Q;
  Vector q;
  double r = 0.0;
};

using ComponentFunction = std::variant<Affine, ExpAffine, QuadraticConvex>;

inline double component_value(const ComponentFunction& c, const Vector& x) {
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Affine>) {
          return f.a.dot(x) - f.b;
        } else if constexpr (std::is_same_v<T, ExpAffine>) {
          return std::exp(f.a.dot(x) + f.b) - f.c;
        } else {
          return 0.5 * x.dot(f.Q * x) + f.q.dot(x) + f.r;
        }
      },
      c);
}

inline Vector component_gradient(const ComponentFunction& c, const Vector& x) {
  return std::visit(
      [&](const auto& f) -> Vector {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Affine>) {
          return f.a;
        } else if constexpr (std::is_same_v<T, ExpAffine>) {
          return std::exp(f.a.dot(x) + f.b) * f.a;
        } else {
          return f.Q * x + f.q;
        }
      },
      c);
}

inline int component_dimension(const ComponentFunction& c) {
  return std::visit(
      [](const auto& f) -> int {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, QuadraticConvex>)
          return static_cast<int>(f.q.size());
        else
          return static_cast<int>(f.a.size());
      },
      c);
}

/// Uniform grid of `points` parameter values on [lower, upper], endpoints included.
struct GridOnInterval {
  double lower = 0.0;
  double upper = 1.0;
  int points = 2;

  double node(int k) const {
    if (points == 1) return lower;
    return lower + (upper - lower) * static_cast<double>(k) / static_cast<double>(points - 1);
  }
};

struct FiniteIndex {};

struct IndexSet {
  std::vector<std::string> labels;
  std::variant<FiniteIndex, GridOnInterval> origin = FiniteIndex{};

  std::size_t size() const { return labels.size(); }

  static IndexSet finite(std::size_t count) {
    IndexSet s;
    for (std::size_t i = 0; i < count; ++i) s.labels.push_back(std::to_string(i + 1));
    return s;
  }

  static IndexSet grid(const GridOnInterval& g) {
    IndexSet s;
    s.origin = g;
    for (int k = 0; k < g.points; ++k) s.labels.push_back(std::to_string(k + 1));
    return s;
  }
};

/// Adds eps * <u_star, x - anchor> to every component (a uniform linear shift).
struct PerturbationSpec {
  Vector u_star;
  double epsilon = 0.0;
  Vector anchor;

  double shift(const Vector& x) const { return epsilon * u_star.dot(x - anchor); }
};

/// Coefficients of a parametric linear family a(t), b(t), ascending degree.
struct ParametricLinearSource {
  std::vector<std::vector<double>> a_coeffs;
  std::vector<double> b_coeffs;
};

inline double eval_polynomial(const std::vector<double>& coeffs, double t) {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * t + *it;
  return acc;
}

/// Immutable after construction; all member functions are safe to call
/// concurrently.
class System {
 public:
  System(int dimension, IndexSet index_set, std::vector<ComponentFunction> components,
         std::vector<PerturbationSpec> perturbations = {},
         std::optional<ParametricLinearSource> source = std::nullopt, std::string name = {})
      : dimension_(dimension),
        index_set_(std::move(index_set)),
        components_(std::move(components)),
        perturbations_(std::move(perturbations)),
        source_(std::move(source)),
        name_(std::move(name)) {
    validate();
  }

  int dimension() const { return dimension_; }
  std::size_t size() const { return components_.size(); }
  const IndexSet& index_set() const { return index_set_; }
  const std::string& label(std::size_t i) const { return index_set_.labels[i]; }
  const ComponentFunction& component(std::size_t i) const { return components_[i]; }
  const std::vector<ComponentFunction>& components() const { return components_; }
  const std::vector<PerturbationSpec>& perturbations() const { return perturbations_; }
  const std::optional<ParametricLinearSource>& parametric_source() const { return source_; }
  const std::string& name() const { return name_; }

  bool is_affine() const {
    return std::all_of(components_.begin(), components_.end(),
                       [](const auto& c) { return std::holds_alternative<Affine>(c); });
  }

  /// Sum of all perturbation shifts at x.
  double shift(const Vector& x) const {
    double s = 0.0;
    for (const auto& p : perturbations_) s += p.shift(x);
    return s;
  }

  /// Gradient of the shift (constant).
  Vector shift_gradient() const {
    Vector g = Vector::Zero(dimension_);
    for (const auto& p : perturbations_) g += p.epsilon * p.u_star;
    return g;
  }

  double value(std::size_t i, const Vector& x) const {
    const double base = component_value(components_[i], x);
    return perturbations_.empty() ? base : base + shift(x);
  }

  Vector gradient(std::size_t i, const Vector& x) const {
    Vector g = component_gradient(components_[i], x);
    if (!perturbations_.empty()) g += shift_gradient();
    return g;
  }

  /// For affine systems: the effective rows a_t, b_t with the perturbation
  /// folded in, so that g_t(x) = <a_t, x> - b_t.
  struct AffineRows {
    Matrix A;  // one row per component
    Vector b;
  };

  AffineRows affine_rows() const {
    if (!is_affine()) throw Error(ErrorKind::Data, "system has non-affine components");
    AffineRows rows{Matrix(size(), dimension_), Vector(size())};
    const Vector sg = shift_gradient();
    double sc = 0.0;
    for (const auto& p : perturbations_) sc += p.epsilon * p.u_star.dot(p.anchor);
    for (std::size_t i = 0; i < size(); ++i) {
      const auto& f = std::get<Affine>(components_[i]);
      rows.A.row(static_cast<Eigen::Index>(i)) = (f.a + sg).transpose();
      rows.b[static_cast<Eigen::Index>(i)] = f.b + sc;
    }
    return rows;
  }

  System with_perturbation(const PerturbationSpec& p) const {
    auto perts = perturbations_;
    perts.push_back(p);
    return System(dimension_, index_set_, components_, std::move(perts), source_, name_);
  }

 private:
  void validate() const {
    if (dimension_ < 1) throw Error(ErrorKind::Data, "dimension must be positive", "dimension");
    if (components_.empty()) throw Error(ErrorKind::Data, "empty component list");
    if (index_set_.labels.size() != components_.size())
      throw Error(ErrorKind::Data, "every label needs exactly one component");
    std::vector<std::string> sorted = index_set_.labels;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw Error(ErrorKind::Data, "index labels must be distinct");
    for (std::size_t i = 0; i < components_.size(); ++i) {
      const std::string path = "components[" + std::to_string(i) + "]";
      if (component_dimension(components_[i]) != dimension_)
        throw Error(ErrorKind::Data, "dimension mismatch", path);
      if (const auto* q = std::get_if<QuadraticConvex>(&components_[i])) {
        if (q->Q.rows() != dimension_ || q->Q.cols() != dimension_)
          throw Error(ErrorKind::Data, "dimension mismatch in Q", path);
        if ((q->Q - q->Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, q->Q.cwiseAbs().maxCoeff()))
          throw Error(ErrorKind::Data, "Q is not symmetric", path);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(q->Q, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -1e-10) throw Error(ErrorKind::Data, "Q is not PSD", path);
      }
    }
    for (std::size_t k = 0; k < perturbations_.size(); ++k) {
      const auto& p = perturbations_[k];
      const std::string path = "perturbation";
      if (p.u_star.size() != dimension_ || p.anchor.size() != dimension_)
        throw Error(ErrorKind::Data, "dimension mismatch", path);
      if (p.u_star.norm() > 1.0 + 1e-12) throw Error(ErrorKind::Data, "||u*|| > 1", path);
      if (!(p.epsilon >= 0.0)) throw Error(ErrorKind::Data, "epsilon must be >= 0", path);
    }
  }

  int dimension_;
  IndexSet index_set_;
  std::vector<ComponentFunction> components_;
  std::vector<PerturbationSpec> perturbations_;
  std::optional<ParametricLinearSource> source_;
  std::string name_;
};

/// Expands a parametric linear family a(t), b(t) onto the grid.
inline System expand_parametric(int dimension, const GridOnInterval& grid, const ParametricLinearSource& src,
                                std::string name = {}) {
  if (static_cast<int>(src.a_coeffs.size()) != dimension)
    throw Error(ErrorKind::Data, "dimension mismatch: need one polynomial per coordinate", "parameter.a_coeffs");
  if (grid.points < 1) throw Error(ErrorKind::Data, "grid must have at least one point", "parameter.grid");
  if (!(grid.lower <= grid.upper)) throw Error(ErrorKind::Data, "interval lower > upper", "parameter.interval");
  for (std::size_t i = 0; i < src.a_coeffs.size(); ++i)
    if (src.a_coeffs[i].empty())
      throw Error(ErrorKind::Data, "malformed polynomial coefficients: empty coefficient list",
                  "parameter.a_coeffs[" + std::to_string(i) + "]");
  if (src.b_coeffs.empty())
    throw Error(ErrorKind::Data, "malformed polynomial coefficients: empty coefficient list", "parameter.b_coeffs");
  std::vector<ComponentFunction> comps;
  comps.reserve(static_cast<std::size_t>(grid.points));
  for (int k = 0; k < grid.points; ++k) {
    const double t = grid.node(k);
    Affine f{Vector(dimension), eval_polynomial(src.b_coeffs, t)};
    for (int i = 0; i < dimension; ++i) f.a[i] = eval_polynomial(src.a_coeffs[static_cast<std::size_t>(i)], t);
    comps.emplace_back(std::move(f));
  }
  return System(dimension, IndexSet::grid(grid), std::move(comps), {}, src, std::move(name));
}

struct Evaluation {
  double f_value = -kInf;
  std::vector<double> component_values;
};

/// f(x) = max_t f_t(x) together with every component value.
inline Evaluation evaluate(const System& sys, const Vector& x) {
  if (x.size() != sys.dimension()) throw Error(ErrorKind::Usage, "point dimension does not match system");
  require_finite(x, "point");
  Evaluation e;
  e.component_values.resize(sys.size());
  for (std::size_t i = 0; i < sys.size(); ++i) {
    e.component_values[i] = sys.value(i, x);
    e.f_value = std::max(e.f_value, e.component_values[i]);
  }
  return e;
}

/// max_t f_t(x) without the per-component table.
inline double max_value(const System& sys, const Vector& x) {
  double f = -kInf;
  for (std::size_t i = 0; i < sys.size(); ++i) f = std::max(f, sys.value(i, x));
  return f;
}

// ---------------------------------------------------------------------------
// Solution set handle and feasibility probing.

enum class FeasibilityStatus { NonEmpty, Empty, Unknown };

inline const char* to_string(FeasibilityStatus s) {
  switch (s) {
    case FeasibilityStatus::NonEmpty: return "NonEmpty";
    case FeasibilityStatus::Empty: return "Empty";
    case FeasibilityStatus::Unknown: return "Unknown";
  }
  return "Unknown";
}

struct SolutionSetHandle {
  FeasibilityStatus status = FeasibilityStatus::Unknown;
  std::optional<Vector> witness;
  double witness_value = kInf;

  static SolutionSetHandle empty_certified() { return {FeasibilityStatus::Empty, std::nullopt, kInf}; }
};

namespace detail {

/// Polyak-style subgradient steps on f, clamped to the box.
inline Vector descend_max(const System& sys, Vector x, const Box& box, int steps) {
  double fx = max_value(sys, x);
  for (int k = 0; k < steps; ++k) {
    std::size_t arg = 0;
    double best = -kInf;
    for (std::size_t i = 0; i < sys.size(); ++i) {
      const double v = sys.value(i, x);
      if (v > best) {
        best = v;
        arg = i;
      }
    }
    const Vector g = sys.gradient(arg, x);
    const double gg = g.squaredNorm();
    if (gg < 1e-300) break;
    // Aiming at f = 0 lands exactly on thin (e.g. lower-dimensional) solution
    // sets of piecewise-linear f; aiming below 0 makes progress elsewhere.
    Vector best_y = x;
    double best_f = fx;
    for (double target : {0.0, -0.1 * std::abs(fx) - 1e-3}) {
      const Vector y = box.clamp(x - ((fx - target) / gg) * g);
      const double fy = max_value(sys, y);
      if (fy < best_f) {
        best_f = fy;
        best_y = y;
      }
    }
    if (!(best_f < fx)) break;
    x = best_y;
    fx = best_f;
    if (fx <= 0.0) break;
  }
  return x;
}

}  // namespace detail

/// Samples the box for a feasible point. Never reports Empty from sampling.
inline SolutionSetHandle feasibility_probe(const System& sys, const Box& box, int samples, std::uint64_t seed) {
  box.validate(sys.dimension());
  if (samples < 1) throw Error(ErrorKind::Usage, "samples must be >= 1");
  std::vector<double> values(static_cast<std::size_t>(samples));
  std::vector<Vector> points(static_cast<std::size_t>(samples));
  parallel_for(points.size(), [&](std::size_t i) {
    auto rng = stream_rng(seed, 0x0FEA5, i);
    points[i] = uniform_in_box(box, rng);
    values[i] = max_value(sys, points[i]);
  });
  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  const Vector refined = detail::descend_max(sys, points[best], box, 25);
  const double f_refined = max_value(sys, refined);
  SolutionSetHandle h;
  if (f_refined <= kFeasibilityTol) {
    h.status = FeasibilityStatus::NonEmpty;
    h.witness = refined;
    h.witness_value = f_refined;
  }
  return h;
}

}  // namespace ebstab
