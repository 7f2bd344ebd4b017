#pragma once

// Stability of error bounds under uniform linear perturbations
//   g_t(x) = f_t(x) + eps <u*, x - xb>,   |u*| <= 1.
// Local verdicts read the sign of gamma(T_f(xb), xb); global verdicts harvest
// boundary points and probe the interior-sequence condition by thresholds.

#include "ebstab/moduli.hpp"

namespace ebstab {

inline System apply_perturbation(const System& sys, const PerturbationSpec& p) {
  if (p.u_star.size() != sys.dimension() || p.anchor.size() != sys.dimension())
    throw Error(ErrorKind::Data, "perturbation dimension mismatch");
  if (p.u_star.norm() > 1.0 + 1e-12) throw Error(ErrorKind::Data, "||u*|| > 1");
  if (!(p.epsilon >= 0.0)) throw Error(ErrorKind::Data, "epsilon must be >= 0");
  return sys.with_perturbation(p);
}

/// gamma classification tolerance: 1e-7 * max(1, max |g_t|).
inline double stability_zero_tolerance(std::span<const Vector> gradients) {
  double s = 0.0;
  for (const auto& g : gradients) s = std::max(s, g.norm());
  return 1e-7 * std::max(1.0, s);
}

enum class Classification { StableSingleton, Stable, Unstable, Indeterminate };

inline const char* to_string(Classification c) {
  switch (c) {
    case Classification::StableSingleton: return "StableSingleton";
    case Classification::Stable: return "Stable";
    case Classification::Unstable: return "Unstable";
    case Classification::Indeterminate: return "Indeterminate";
  }
  return "?";
}

struct ThresholdRecord {
  double threshold = 0.0;
  int qualifying = 0;              // interior samples with slack below the threshold
  std::optional<double> min_abs_gamma;
};

struct SequenceCheck {
  std::vector<ThresholdRecord> records;
  bool passed = true;  // last recorded minimum >= tau / 2 (vacuous when nothing qualified)
};

struct AdversarialResult {
  PerturbationSpec spec;
  double er_estimate = kInf;
  int evaluated = 0;
  ModulusScope scope = ModulusScope::Local;
};

struct StabilityVerdict {
  ModulusScope scope = ModulusScope::Local;
  std::optional<Vector> anchor;
  double gamma = 0.0;  // local: gamma; global: tau estimate
  Vector direction;
  std::vector<std::size_t> active;
  Classification classification = Classification::Indeterminate;
  std::optional<double> guaranteed_modulus;  // |gamma| - eps when positive
  std::optional<AdversarialResult> witness;
  std::optional<SequenceCheck> sequence_check;
  double zero_tolerance = 0.0;
  double epsilon = 0.0;
  FeasibilityStatus feasibility = FeasibilityStatus::NonEmpty;
  int boundary_points = 0;
  std::optional<Vector> tau_point;
};

// ---------------------------------------------------------------------------
// Searching for a destabilizing u*.

struct LocalScope {
  Vector anchor;
  std::vector<double> radii;  // empty: default schedule
};
struct GlobalScope {
  Box box;
  Vector anchor;  // boundary point the perturbation is anchored at
};
using PerturbationScope = std::variant<LocalScope, GlobalScope>;

struct AdversarialOptions {
  int search_samples = 300;  // per radius (local) or per box (global) during the search
  int final_samples = 2000;  // re-evaluation of the winner
  int refine_rounds = 12;
};

namespace detail {

inline double perturbed_estimate(const System& sys, const PerturbationScope& scope, const Vector& u, double eps,
                                 int samples, std::uint64_t seed) {
  SamplingOptions opt;
  opt.max_refinements = 8;
  if (const auto* l = std::get_if<LocalScope>(&scope)) {
    const System g = apply_perturbation(sys, {u, eps, l->anchor});
    return local_modulus(g, l->anchor, l->radii, samples, seed, opt).value;
  }
  const auto& gs = std::get<GlobalScope>(scope);
  const System g = apply_perturbation(sys, {u, eps, gs.anchor});
  return global_modulus(g, gs.box, samples, seed, opt).value;
}

}  // namespace detail

/// Seeded multi-start over unit u* (axes, minimax directions, normalized
/// active gradients, random directions) followed by a shrinking local
/// rotation search around the best start. `budget` bounds the number of
/// perturbed systems evaluated.
inline AdversarialResult adversarial_perturbation(const System& sys, const PerturbationScope& scope, double eps,
                                                  int budget, std::uint64_t seed,
                                                  const AdversarialOptions& opt = {}) {
  if (budget < 1) throw Error(ErrorKind::Usage, "budget must be >= 1");
  if (!(eps >= 0.0)) throw Error(ErrorKind::Usage, "epsilon must be >= 0");
  const int n = sys.dimension();
  const Vector anchor =
      std::holds_alternative<LocalScope>(scope) ? std::get<LocalScope>(scope).anchor : std::get<GlobalScope>(scope).anchor;

  std::vector<Vector> starts;
  auto push = [&](Vector v) {
    if (v.norm() < 1e-12) return;
    v.normalize();
    for (const auto& s : starts)
      if ((s - v).norm() < 1e-9) return;
    starts.push_back(std::move(v));
  };
  for (int i = 0; i < n; ++i) {
    push(Vector::Unit(n, i));
    push(-Vector::Unit(n, i));
  }
  const ActiveSet act = active_set(sys, anchor);
  const GeneratorSet gen = generators(sys, act);
  const MinimaxResult mm = minimax_of_points(gen.gradients);
  push(mm.direction);
  push(-mm.direction);
  for (const auto& g : gen.gradients) {
    push(g);
    push(-g);
  }
  if (n > 1) {
    for (std::uint64_t k = 0; static_cast<int>(starts.size()) < budget && k < static_cast<std::uint64_t>(4 * budget); ++k) {
      auto rng = stream_rng(seed, 0xADE5, k);
      push(random_unit(n, rng));
    }
  }
  const int start_count = std::min<int>(static_cast<int>(starts.size()), budget);
  starts.resize(static_cast<std::size_t>(start_count));

  std::vector<double> values(starts.size(), kInf);
  parallel_for(starts.size(), [&](std::size_t i) {
    values[i] = detail::perturbed_estimate(sys, scope, starts[i], eps, opt.search_samples, seed);
  });
  std::size_t best_i = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] < values[best_i]) best_i = i;
  Vector best = starts[best_i];
  double best_val = values[best_i];
  int evaluated = start_count;

  if (n > 1) {
    double angle = 0.25;
    auto rng = stream_rng(seed, 0xADE6, 0);
    for (int round = 0; round < opt.refine_rounds && evaluated < budget; ++round) {
      Vector d = random_unit(n, rng);
      d -= d.dot(best) * best;
      if (d.norm() < 1e-12) continue;
      d.normalize();
      bool improved = false;
      for (double s : {1.0, -1.0}) {
        if (evaluated >= budget) break;
        const Vector cand = (std::cos(angle) * best + s * std::sin(angle) * d).normalized();
        const double v = detail::perturbed_estimate(sys, scope, cand, eps, opt.search_samples, seed);
        ++evaluated;
        if (v < best_val) {
          best_val = v;
          best = cand;
          improved = true;
          break;
        }
      }
      if (!improved) angle *= 0.5;
    }
  }

  AdversarialResult res;
  res.spec = {best, eps, anchor};
  res.evaluated = evaluated;
  res.scope = std::holds_alternative<LocalScope>(scope) ? ModulusScope::Local : ModulusScope::Global;
  res.er_estimate = detail::perturbed_estimate(sys, scope, best, eps, opt.final_samples, seed);
  return res;
}

// ---------------------------------------------------------------------------
// Local verdict.

struct VerdictOptions {
  double zero_tolerance = -1.0;  // negative: 1e-7 * max(1, max |g_t|)
  double eta = -1.0;             // activity tolerance; negative: default
  int budget = 200;
  std::uint64_t seed = 42;
  bool attach_witness = true;
};

inline StabilityVerdict local_stability_verdict(const System& sys, const Vector& anchor, double eps,
                                                const VerdictOptions& opt = {}) {
  require_boundary_point(sys, anchor);
  if (!(eps >= 0.0)) throw Error(ErrorKind::Usage, "epsilon must be >= 0");
  const ActiveSet act = active_set(sys, anchor, opt.eta);
  const GeneratorSet gen = generators(sys, act);
  const MinimaxResult mm = minimax_of_points(gen.gradients);

  StabilityVerdict v;
  v.scope = ModulusScope::Local;
  v.anchor = anchor;
  v.gamma = mm.value;
  v.direction = mm.direction;
  v.active = act.indices;
  v.epsilon = eps;
  v.zero_tolerance = opt.zero_tolerance >= 0.0 ? opt.zero_tolerance : stability_zero_tolerance(gen.gradients);
  if (mm.value > v.zero_tolerance) {
    v.classification = Classification::StableSingleton;
  } else if (mm.value < -v.zero_tolerance) {
    v.classification = Classification::Stable;
  } else {
    v.classification = Classification::Unstable;
  }
  if (v.classification != Classification::Unstable) {
    const double c = std::abs(mm.value) - eps;
    if (c > 0.0) v.guaranteed_modulus = c;
  } else if (opt.attach_witness) {
    v.witness = adversarial_perturbation(sys, LocalScope{anchor, {}}, eps, opt.budget, opt.seed);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Global verdict.

struct GlobalVerdictOptions {
  double zero_tolerance = -1.0;
  int boundary_samples = 2000;
  int interior_samples = 2000;
  int budget = 60;
  std::uint64_t seed = 42;
  bool attach_witness = true;
  std::vector<double> thresholds{1e-1, 1e-2, 1e-3};
};

struct BoundaryPoint {
  Vector x;
  std::vector<std::size_t> active;
  double abs_gamma = 0.0;
  double max_gradient = 0.0;
};

namespace detail {

inline BoundaryPoint classify_boundary(const System& sys, const Vector& x) {
  BoundaryPoint b;
  b.x = x;
  const ActiveSet act = active_set(sys, x, activity_tolerance(sys, x));
  b.active = act.indices;
  const GeneratorSet gen = generators(sys, act);
  b.abs_gamma = std::abs(minimax_of_points(gen.gradients).value);
  for (const auto& g : gen.gradients) b.max_gradient = std::max(b.max_gradient, g.norm());
  return b;
}

/// From a boundary point, greedily pin further components to zero so the
/// walk reaches lower-dimensional faces (edges, vertices).
inline std::vector<BoundaryPoint> walk_boundary(const System& sys, const Vector& start, const Box& box) {
  std::vector<BoundaryPoint> out;
  out.push_back(classify_boundary(sys, start));
  const int n = sys.dimension();
  Vector y = start;
  std::vector<std::size_t> K = out.back().active;
  for (int round = 0; round < n && static_cast<int>(K.size()) < n; ++round) {
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t t = 0; t < sys.size(); ++t)
      if (std::find(K.begin(), K.end(), t) == K.end()) cand.push_back({std::abs(sys.value(t, y)), t});
    std::sort(cand.begin(), cand.end());
    bool moved = false;
    for (std::size_t c = 0; c < std::min<std::size_t>(cand.size(), 4) && !moved; ++c) {
      std::vector<std::size_t> set = K;
      set.push_back(cand[c].second);
      std::sort(set.begin(), set.end());
      const auto z = newton_on_equalities(sys, y, set, true);
      if (!z || !box.contains(*z)) continue;
      if (std::abs(max_value(sys, *z)) > kFeasibilityTol) continue;
      BoundaryPoint b = classify_boundary(sys, *z);
      if (!std::includes(b.active.begin(), b.active.end(), set.begin(), set.end())) continue;
      y = *z;
      K = b.active;
      out.push_back(std::move(b));
      moved = true;
    }
    if (!moved) break;
  }
  return out;
}

}  // namespace detail

/// Harvests boundary points (bisection from infeasible samples toward a
/// feasible witness, then walks to edges and vertices), takes
/// tau = min |gamma| over them, and probes interior sequences whose slack
/// |f(z)| / |z - x| falls below each threshold.
inline StabilityVerdict global_stability_verdict(const System& sys, const Box& box, double eps,
                                                 const GlobalVerdictOptions& opt = {}) {
  box.validate(sys.dimension());
  if (!(eps >= 0.0)) throw Error(ErrorKind::Usage, "epsilon must be >= 0");
  if (opt.boundary_samples < 1 || opt.interior_samples < 1) throw Error(ErrorKind::Usage, "samples must be >= 1");
  StabilityVerdict v;
  v.scope = ModulusScope::Global;
  v.epsilon = eps;

  const auto probe = feasibility_probe(sys, box, std::max(1000, opt.boundary_samples), opt.seed);
  if (probe.status != FeasibilityStatus::NonEmpty) {
    v.feasibility = probe.status;
    v.classification = Classification::Indeterminate;
    return v;
  }
  const Vector w = *probe.witness;

  // Harvest.
  std::vector<Vector> pts(static_cast<std::size_t>(opt.boundary_samples));
  std::vector<std::vector<BoundaryPoint>> walks(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    auto rng = stream_rng(opt.seed, 0xB0B, i);
    pts[i] = uniform_in_box(box, rng);
    if (max_value(sys, pts[i]) <= kFeasibilityTol) return;
    const Vector b = detail::bisect_to_boundary(sys, w, pts[i]);
    walks[i] = detail::walk_boundary(sys, b, box);
  });
  std::vector<BoundaryPoint> boundary;
  for (auto& wk : walks)
    for (auto& b : wk) boundary.push_back(std::move(b));
  v.boundary_points = static_cast<int>(boundary.size());
  if (boundary.empty()) throw Error(ErrorKind::Data, "no boundary points harvested in the box");

  double max_grad = 0.0;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    max_grad = std::max(max_grad, boundary[i].max_gradient);
    if (boundary[i].abs_gamma < boundary[arg].abs_gamma) arg = i;
  }
  v.gamma = boundary[arg].abs_gamma;
  v.tau_point = boundary[arg].x;
  v.active = boundary[arg].active;
  v.anchor = boundary[arg].x;
  v.zero_tolerance = opt.zero_tolerance >= 0.0 ? opt.zero_tolerance : 1e-7 * std::max(1.0, max_grad);

  // Interior sequence probe.
  std::vector<Vector> interior;
  for (int i = 0; i < opt.interior_samples; ++i) {
    auto rng = stream_rng(opt.seed, 0x1D7, static_cast<std::uint64_t>(i));
    interior.push_back(uniform_in_box(box, rng));
  }
  for (const auto& b : boundary)
    for (double lam : {1e-1, 1e-2, 1e-3}) interior.push_back(b.x + lam * (w - b.x));
  std::vector<double> slack(interior.size(), kInf), gam(interior.size(), kInf);
  parallel_for(interior.size(), [&](std::size_t i) {
    const Vector& z = interior[i];
    const double fz = max_value(sys, z);
    if (fz >= -kFeasibilityTol) return;
    double dmin = kInf;
    for (const auto& b : boundary) dmin = std::min(dmin, (z - b.x).norm());
    if (!(dmin > 0.0)) return;
    slack[i] = -fz / dmin;
    gam[i] = std::abs(minimax_at(sys, z).value);
  });
  SequenceCheck sc;
  for (double th : opt.thresholds) {
    ThresholdRecord r;
    r.threshold = th;
    for (std::size_t i = 0; i < interior.size(); ++i) {
      if (slack[i] <= th) {
        ++r.qualifying;
        r.min_abs_gamma = std::min(r.min_abs_gamma.value_or(kInf), gam[i]);
      }
    }
    sc.records.push_back(r);
  }
  for (const auto& r : sc.records)
    if (r.min_abs_gamma) sc.passed = *r.min_abs_gamma >= 0.5 * v.gamma;
  v.sequence_check = sc;

  if (v.gamma <= v.zero_tolerance) {
    v.classification = Classification::Unstable;
  } else if (v.gamma > eps && sc.passed) {
    v.classification = Classification::Stable;
  } else {
    v.classification = Classification::Indeterminate;
  }
  if (v.classification != Classification::Unstable) {
    if (v.gamma - eps > 0.0) v.guaranteed_modulus = v.gamma - eps;
  } else if (opt.attach_witness) {
    v.witness = adversarial_perturbation(sys, GlobalScope{box, *v.tau_point}, eps, opt.budget, opt.seed);
  }
  return v;
}

}  // namespace ebstab
