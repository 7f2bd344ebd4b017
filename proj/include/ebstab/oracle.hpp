#pragma once

// Cross-checks between independent routes: exact vs sphere-search minimax,
// the min-norm duality identity, the Wolfe certificate, and ratio vs beta
// modulus estimates.

#include "ebstab/report.hpp"

#include <numbers>

namespace ebstab {

inline System linear_system(const Matrix& A, const Vector& b, std::string name = {}) {
  std::vector<ComponentFunction> comps;
  for (Eigen::Index i = 0; i < A.rows(); ++i) comps.push_back(Affine{A.row(i).transpose(), b[i]});
  auto labels = IndexSet::finite(comps.size());
  return System(static_cast<int>(A.cols()), std::move(labels), std::move(comps), {}, std::nullopt, std::move(name));
}

struct RandomAffineSpec {
  std::vector<int> dimensions{2, 3};
  int min_rows = 2;
  int max_rows = 6;
  double coefficient = 3.0;  // a_t in [-c, c]^n
  double b_low = 0.0;        // b_t in [b_low, b_high]; b >= 0 keeps the origin feasible
  double b_high = 3.0;
};

inline System random_affine_system(std::mt19937_64& rng, const RandomAffineSpec& spec = {}) {
  std::uniform_int_distribution<std::size_t> pick_dim(0, spec.dimensions.size() - 1);
  std::uniform_int_distribution<int> pick_rows(spec.min_rows, spec.max_rows);
  std::uniform_real_distribution<double> coef(-spec.coefficient, spec.coefficient);
  std::uniform_real_distribution<double> rhs(spec.b_low, spec.b_high);
  const int n = spec.dimensions[pick_dim(rng)];
  const int m = pick_rows(rng);
  Matrix A(m, n);
  Vector b(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) A(i, j) = coef(rng);
    b[i] = rhs(rng);
  }
  return linear_system(A, b, "random");
}

struct OracleCheck {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = true;
  bool skipped = false;
  std::string note;
  Json detail = Json::object();
};

inline OracleCheck named_check(std::string name) {
  OracleCheck c;
  c.name = std::move(name);
  return c;
}

struct OracleOptions {
  int sphere_resolution = 100'000;
  int samples = 2000;
  std::optional<Box> box;  // ratio vs beta; default [-5, 5]^n
  double eta = -1.0;
  std::uint64_t seed = 42;
  double duality_tolerance = 1e-8;
  double wolfe_tolerance = 1e-10;
  double modulus_rel_tolerance = 0.1;
};

/// Grid spacing of the sphere search, in radians.
inline double sphere_spacing(int n, int resolution) {
  if (n == 2) return 2.0 * std::numbers::pi / resolution;
  return std::sqrt(4.0 * std::numbers::pi / resolution);
}

inline std::vector<OracleCheck> minimax_checks(std::span<const Vector> g, const OracleOptions& opt) {
  std::vector<OracleCheck> out;
  double scale = 0.0;
  for (const auto& p : g) scale = std::max(scale, p.norm());
  const int n = static_cast<int>(g.front().size());
  const MinimaxResult exact = minimax_of_points(g);

  OracleCheck sphere = named_check("exact_vs_sphere_minimax");
  if (n > 3 || n == 1) {
    sphere.skipped = true;
    sphere.note = n == 1 ? "one-dimensional: both routes enumerate the two directions" : "no exact route above dimension 3";
  } else {
    const auto s = sphere_search_minimax(g, opt.sphere_resolution, 200, opt.seed);
    sphere.residual = std::abs(s.value - exact.value);
    sphere.tolerance = 3.0 * sphere_spacing(n, opt.sphere_resolution) * std::max(1.0, scale) + 1e-6;
    const bool below = s.value < exact.value - 1e-12 * std::max(1.0, scale);
    sphere.passed = sphere.residual <= sphere.tolerance && !below;
    if (below) sphere.note = "sphere value lies below the exact infimum";
    sphere.detail = {{"exact", num(exact.value)}, {"sphere", num(s.value)}, {"resolution", opt.sphere_resolution}};
  }
  out.push_back(sphere);

  OracleCheck dual = named_check("duality");
  const double attained = detail::support(g, exact.direction);
  dual.residual = std::abs(attained - exact.value);
  if (exact.branch == MinimaxBranch::NegativeViaMinNormPoint)
    dual.residual = std::max(dual.residual, std::abs(exact.value + exact.min_norm_distance));
  dual.tolerance = opt.duality_tolerance * std::max(1.0, scale);
  dual.passed = dual.residual <= dual.tolerance;
  dual.detail = {{"value", num(exact.value)},
                 {"direction_attains", num(attained)},
                 {"min_norm_distance", num(exact.min_norm_distance)},
                 {"branch", to_string(exact.branch)}};
  out.push_back(dual);

  OracleCheck wolfe = named_check("wolfe_certificate");
  wolfe.residual = exact.wolfe_residual;
  wolfe.tolerance = opt.wolfe_tolerance;
  wolfe.passed = exact.wolfe_converged && wolfe.residual <= wolfe.tolerance;
  if (!wolfe.passed) wolfe.note = "min-norm point certificate not met; generators may be ill-conditioned";
  wolfe.detail = {{"converged", exact.wolfe_converged}};
  out.push_back(wolfe);
  return out;
}

inline OracleCheck modulus_check(const System& sys, const OracleOptions& opt) {
  const Box box = opt.box ? *opt.box : Box::cube(sys.dimension(), -5.0, 5.0);
  const ModulusEstimate ratio = global_modulus(sys, box, opt.samples, opt.seed);
  const ModulusEstimate beta = beta_modulus(sys, GlobalRegion{box}, opt.samples, opt.seed);
  OracleCheck c = named_check("ratio_vs_beta");
  c.detail = {{"ratio", num(ratio.value)}, {"beta", num(beta.value)}, {"samples", opt.samples}};
  if (std::isinf(ratio.value) && std::isinf(beta.value)) {
    c.note = "no infeasible samples in the box";
    return c;
  }
  c.residual = std::abs(ratio.value - beta.value);
  c.tolerance = opt.modulus_rel_tolerance * std::max(1.0, std::isfinite(beta.value) ? beta.value : 1.0);
  c.passed = std::isfinite(c.residual) && c.residual <= c.tolerance;
  return c;
}

/// Checks at a point: minimax over the active gradients, then ratio vs beta.
inline std::vector<OracleCheck> oracle_at(const System& sys, const Vector& x, const OracleOptions& opt) {
  if (x.size() != sys.dimension()) throw Error(ErrorKind::Usage, "point dimension does not match system");
  const ActiveSet act = active_set(sys, x, opt.eta);
  std::vector<OracleCheck> out;
  if (act.indices.empty()) {
    for (const char* name : {"exact_vs_sphere_minimax", "duality", "wolfe_certificate"})
    {
      OracleCheck c = named_check(name);
      c.skipped = true;
      c.note = "no active components at the point";
      out.push_back(c);
    }
  } else {
    const GeneratorSet gen = generators(sys, act);
    out = minimax_checks(gen.gradients, opt);
  }
  out.push_back(modulus_check(sys, opt));
  return out;
}

/// Checks on one generated system: minimax over all rows, then ratio vs beta.
inline std::vector<OracleCheck> oracle_on_system(const System& sys, const OracleOptions& opt) {
  std::vector<Vector> g;
  const auto rows = sys.affine_rows();
  for (Eigen::Index i = 0; i < rows.A.rows(); ++i) g.push_back(rows.A.row(i).transpose());
  auto out = minimax_checks(g, opt);
  out.push_back(modulus_check(sys, opt));
  return out;
}

inline Json to_json(const OracleCheck& c) {
  Json j{{"check", c.name},
         {"residual", num(c.residual)},
         {"tolerance", num(c.tolerance)},
         {"passed", c.passed},
         {"skipped", c.skipped},
         {"detail", c.detail}};
  j["note"] = c.note.empty() ? Json(nullptr) : Json(c.note);
  return j;
}

}  // namespace ebstab
