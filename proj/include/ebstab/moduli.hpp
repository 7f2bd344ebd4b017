#pragma once

// Error bound moduli
//   Er f      = inf_{f(x) > 0} f(x) / d(x, S)
//   Er f(xb)  = liminf_{x -> xb, f(x) > 0} f(x) / d(x, S)
// estimated by sampling the ratio directly and, independently, through
// inf_{f(x) > 0} d(0, conv of active gradients at x).

#include "ebstab/minimax.hpp"
#include "ebstab/projection.hpp"

#include <optional>
#include <sstream>

namespace ebstab {

// ---------------------------------------------------------------------------
// Distance to S = {f <= 0}.

struct DistanceResult {
  double distance = kInf;
  Vector nearest;         // point of S at that distance (empty when infinite)
  double lower_bound = 0.0;
  bool exact = false;     // polyhedral route; otherwise `distance` is an upper bound
  FeasibilityStatus status = FeasibilityStatus::NonEmpty;
  int iterations = 0;
};

namespace detail {

/// Bisection on the segment [feasible, infeasible]; returns the feasible end.
inline Vector bisect_to_boundary(const System& sys, Vector feasible, Vector infeasible, int max_iter = 200) {
  const double stop = 1e-14 * std::max(1.0, std::max(feasible.norm(), infeasible.norm()));
  for (int k = 0; k < max_iter && (infeasible - feasible).norm() > stop; ++k) {
    const Vector mid = 0.5 * (feasible + infeasible);
    if (max_value(sys, mid) <= kFeasibilityTol)
      feasible = mid;
    else
      infeasible = mid;
  }
  return feasible;
}

inline void append_cut(std::vector<Vector>& rows, std::vector<double>& rhs, const Vector& g, double value,
                       const Vector& at) {
  if (g.norm() < 1e-300) return;
  rows.push_back(g);
  rhs.push_back(g.dot(at) - value);
}

}  // namespace detail

/// Distance oracle bound to one system. Affine systems are projected exactly;
/// others use an outer cutting-plane approximation (lower bound) paired with
/// bisection toward a feasible witness (upper bound, which is returned).
class SublevelDistance {
 public:
  explicit SublevelDistance(const System& sys, std::optional<Vector> witness = std::nullopt)
      : sys_(&sys), witness_(std::move(witness)) {
    if (sys.is_affine()) rows_ = sys.affine_rows();
    if (witness_ && max_value(sys, *witness_) > kFeasibilityTol)
      throw Error(ErrorKind::Usage, "distance witness is not feasible");
  }

  bool exact() const { return rows_.has_value(); }

  DistanceResult operator()(const Vector& x) const {
    DistanceResult r;
    if (max_value(*sys_, x) <= 0.0) {
      r.distance = 0.0;
      r.nearest = x;
      r.exact = true;
      return r;
    }
    if (rows_) {
      const ProjectionResult p = project_onto_polyhedron(rows_->A, rows_->b, x);
      r.exact = true;
      if (!p.feasible) {
        r.status = FeasibilityStatus::Empty;
        return r;
      }
      r.distance = p.distance;
      r.lower_bound = p.distance;
      r.nearest = p.projection;
      r.iterations = p.iterations;
      return r;
    }
    if (!witness_) {
      r.status = FeasibilityStatus::Unknown;
      return r;
    }
    return cutting_plane(x);
  }

 private:
  DistanceResult cutting_plane(const Vector& x) const {
    const System& sys = *sys_;
    const int n = sys.dimension();
    std::vector<Vector> rows;
    std::vector<double> rhs;
    DistanceResult r;
    r.nearest = *witness_;
    r.distance = (x - *witness_).norm();
    Vector y = x;
    Vector prev = x;
    for (int it = 0; it < 200; ++it) {
      r.iterations = it + 1;
      if (max_value(sys, y) <= kFeasibilityTol) {
        const double d = (x - y).norm();
        if (d < r.distance) {
          r.distance = d;
          r.nearest = y;
        }
        r.lower_bound = std::min(r.lower_bound, r.distance);
        break;
      }
      const Vector q = detail::bisect_to_boundary(sys, *witness_, y);
      const double dq = (x - q).norm();
      if (dq < r.distance) {
        r.distance = dq;
        r.nearest = q;
      }
      for (std::size_t t = 0; t < sys.size(); ++t) {
        const double vy = sys.value(t, y);
        if (vy > 0.0) detail::append_cut(rows, rhs, sys.gradient(t, y), vy, y);
        const double vq = sys.value(t, q);
        if (vq > -1e-6 * std::max(1.0, std::abs(vq))) detail::append_cut(rows, rhs, sys.gradient(t, q), vq, q);
      }
      if (rows.empty()) break;
      Matrix A(static_cast<Eigen::Index>(rows.size()), n);
      for (std::size_t i = 0; i < rows.size(); ++i) A.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
      const Vector b = Eigen::Map<const Vector>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
      const ProjectionResult p = project_onto_polyhedron(A, b, x);
      if (!p.feasible) {
        // The cuts are valid for S, so S is empty; the witness contradicts this
        // only through round-off.
        r.lower_bound = r.distance;
        break;
      }
      r.lower_bound = std::max(r.lower_bound, p.distance);
      prev = y;
      y = p.projection;
      if (r.distance - r.lower_bound <= 1e-10 * std::max(1.0, r.distance)) break;
      if ((y - prev).norm() <= 1e-12 * std::max(1.0, y.norm())) break;
    }
    r.lower_bound = std::min(r.lower_bound, r.distance);
    r.exact = false;
    return r;
  }

  const System* sys_;
  std::optional<Vector> witness_;
  std::optional<System::AffineRows> rows_;
};

/// d(x, S). Non-affine systems need a feasible witness; without one, a
/// feasibility probe around x supplies it (status Unknown if that fails).
inline DistanceResult distance_to_sublevel_set(const System& sys, const Vector& x,
                                               std::optional<Vector> witness = std::nullopt, std::uint64_t seed = 42) {
  if (x.size() != sys.dimension()) throw Error(ErrorKind::Usage, "point dimension does not match system");
  require_finite(x, "point");
  if (max_value(sys, x) <= 0.0) return SublevelDistance(sys)(x);
  if (!sys.is_affine() && !witness) {
    const double half = std::max(10.0, 2.0 * x.cwiseAbs().maxCoeff());
    const Box box{x.array() - half, x.array() + half};
    const auto probe = feasibility_probe(sys, box, 4096, seed);
    if (probe.status == FeasibilityStatus::NonEmpty) witness = probe.witness;
  }
  return SublevelDistance(sys, witness)(x);
}

// ---------------------------------------------------------------------------
// Modulus estimates.

enum class ModulusMethod { RatioSampling, BetaFormula };
enum class ModulusScope { Local, Global };

inline const char* to_string(ModulusMethod m) {
  return m == ModulusMethod::RatioSampling ? "RatioSampling" : "BetaFormula";
}
inline const char* to_string(ModulusScope s) { return s == ModulusScope::Local ? "Local" : "Global"; }

struct SampleRecord {
  std::size_t index = 0;
  Vector x;
  double f = 0.0;
  double distance = kInf;  // ratio route only
  double value = kInf;     // ratio, or min-norm distance for the beta route
  bool refined = false;
};

struct ModulusEstimate {
  ModulusScope scope = ModulusScope::Global;
  std::optional<Vector> anchor;
  double value = kInf;
  ModulusMethod method = ModulusMethod::RatioSampling;
  int samples_used = 0;
  int infeasible_samples = 0;
  std::vector<double> radius_schedule;
  double radius_used = 0.0;  // local: radius whose samples produced the value
  std::uint64_t seed = 0;
  std::optional<Vector> argmin;
  bool distance_exact = true;
  FeasibilityStatus feasibility = FeasibilityStatus::NonEmpty;
  std::vector<SampleRecord> trace;
};

struct SamplingOptions {
  bool refine = true;          // ratio route: coordinate pattern search on near-minimal samples
  int max_refinements = 48;
  double refine_gate = 0.05;   // refine when ratio < (1 + gate) * running minimum
  bool snap_ties = true;       // also evaluate samples moved onto nearby ties of the active components
  bool record_trace = false;
  int witness_samples = 4000;  // feasibility probe size for non-affine systems
};

inline std::vector<double> default_radii(const Vector& anchor) {
  const double s = std::max(1.0, anchor.norm());
  return {1e-1 * s, 1e-2 * s, 1e-3 * s};
}

/// On the boundary of S means |f(x)| <= kFeasibilityTol.
inline void require_boundary_point(const System& sys, const Vector& x) {
  if (x.size() != sys.dimension()) throw Error(ErrorKind::Usage, "point dimension does not match system");
  require_finite(x, "point");
  const double f = max_value(sys, x);
  if (std::abs(f) > kFeasibilityTol) {
    std::ostringstream os;
    os << "point not on boundary (f=" << f << ")";
    throw Error(ErrorKind::Data, os.str());
  }
}

namespace detail {

inline constexpr std::uint64_t kLocalStream = 0x10CA1;
inline constexpr std::uint64_t kGlobalStream = 0x610BA1;

/// Region membership used by refinement and snapping.
struct Region {
  std::optional<Box> box;
  std::optional<std::pair<Vector, double>> ball;

  bool contains(const Vector& y) const {
    if (box) return box->contains(y);
    return (y - ball->first).norm() <= ball->second;
  }
};

inline double positivity_floor(const System&, const Vector& x) {
  return std::max(kFeasibilityTol, 1e-10 * std::max(1.0, x.norm()));
}

inline std::optional<Vector> witness_for(const System& sys, const Box& box, const SamplingOptions& opt,
                                         std::uint64_t seed, FeasibilityStatus& status) {
  status = FeasibilityStatus::NonEmpty;
  if (sys.is_affine()) return std::nullopt;
  const auto probe = feasibility_probe(sys, box, opt.witness_samples, seed);
  if (probe.status != FeasibilityStatus::NonEmpty) {
    status = probe.status;
    return std::nullopt;
  }
  return probe.witness;
}

/// Newton steps (minimum-norm corrections) toward a point where the listed
/// components take equal values (zero_level = false) or all vanish
/// (zero_level = true).
inline std::optional<Vector> newton_on_equalities(const System& sys, Vector z, const std::vector<std::size_t>& set,
                                                  bool zero_level) {
  const int n = sys.dimension();
  const std::size_t rows = zero_level ? set.size() : set.size() - 1;
  if (rows == 0) return z;
  if (static_cast<int>(rows) > n) return std::nullopt;
  double scale = 1.0;
  for (auto k : set) scale = std::max(scale, std::abs(sys.value(k, z)));
  for (int it = 0; it < 30; ++it) {
    Vector r(static_cast<Eigen::Index>(rows));
    Matrix J(static_cast<Eigen::Index>(rows), n);
    for (std::size_t j = 0; j < rows; ++j) {
      const auto row = static_cast<Eigen::Index>(j);
      if (zero_level) {
        r[row] = sys.value(set[j], z);
        J.row(row) = sys.gradient(set[j], z).transpose();
      } else {
        r[row] = sys.value(set[j + 1], z) - sys.value(set[0], z);
        J.row(row) = (sys.gradient(set[j + 1], z) - sys.gradient(set[0], z)).transpose();
      }
    }
    if (r.cwiseAbs().maxCoeff() <= 1e-13 * scale) return z;
    const Vector step = J.completeOrthogonalDecomposition().solve(r);
    if (!step.allFinite()) return std::nullopt;
    z -= step;
    if (!z.allFinite()) return std::nullopt;
  }
  return std::nullopt;
}

/// Pattern search on the ratio, staying in the region with f > 0. Besides the
/// coordinate directions it tries a snap onto the tie set of the components
/// within one step of the maximum, and moves along that tie set, where the
/// ratio is typically smallest.
inline double refine_ratio(const System& sys, const SublevelDistance& dist, const Region& region, Vector x,
                           double ratio, double initial_step, double final_step, Vector* best_point) {
  const int n = sys.dimension();
  double step = initial_step;
  int evaluations = 0;
  auto accept = [&](const Vector& y) {
    ++evaluations;
    if (!y.allFinite() || !region.contains(y)) return false;
    const double fy = max_value(sys, y);
    if (fy <= positivity_floor(sys, y)) return false;
    const DistanceResult d = dist(y);
    if (!(d.distance > 0.0) || d.distance == kInf) return false;
    const double r = fy / d.distance;
    if (!(r < ratio)) return false;
    ratio = r;
    x = y;
    return true;
  };
  while (step >= final_step && evaluations < 600) {
    std::vector<Vector> dirs;
    for (int i = 0; i < n; ++i) dirs.push_back(Vector::Unit(n, i));
    const double fx = max_value(sys, x);
    double gscale = 0.0;
    for (std::size_t t = 0; t < sys.size(); ++t) gscale = std::max(gscale, sys.gradient(t, x).norm());
    std::vector<std::size_t> near;
    for (std::size_t t = 0; t < sys.size(); ++t)
      if (sys.value(t, x) >= fx - step * gscale) near.push_back(t);
    bool improved = false;
    if (near.size() >= 2 && static_cast<int>(near.size()) <= n) {
      const auto z = newton_on_equalities(sys, x, near, false);
      if (z && (*z - x).norm() <= 10.0 * step) improved = accept(*z);
      Matrix D(static_cast<Eigen::Index>(near.size() - 1), n);
      for (std::size_t j = 1; j < near.size(); ++j)
        D.row(static_cast<Eigen::Index>(j - 1)) = (sys.gradient(near[j], x) - sys.gradient(near[0], x)).transpose();
      Eigen::JacobiSVD<Matrix> svd(D, Eigen::ComputeFullV);
      const double cut = 1e-10 * std::max(1.0, svd.singularValues().size() ? svd.singularValues()[0] : 0.0);
      int rank = 0;
      for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) rank += svd.singularValues()[k] > cut;
      for (int k = rank; k < n; ++k) dirs.push_back(svd.matrixV().col(k));
    }
    for (std::size_t k = 0; k < dirs.size() && !improved; ++k)
      for (double s : {-1.0, 1.0})
        if (accept(x + s * step * dirs[k])) {
          improved = true;
          break;
        }
    if (!improved) step *= 0.5;
  }
  if (best_point) *best_point = x;
  return ratio;
}

inline double activity_tolerance(const System& sys, const Vector& z) {
  return std::max(default_eta(max_value(sys, z)), 1e-11 * std::max(1.0, z.norm()));
}

/// Greedy path of tie snaps from x: each step adds the non-active component
/// closest to the maximum and moves (Newton) onto the set where all selected
/// components agree, as long as the point stays infeasible, inside the
/// region, and keeps the selected set active.
inline std::vector<Vector> tie_snap_path(const System& sys, const Vector& x, const Region& region) {
  std::vector<Vector> path;
  const int n = sys.dimension();
  Vector y = x;
  std::vector<std::size_t> K = active_set(sys, x).indices;
  for (int round = 0; round < n && static_cast<int>(K.size()) <= n; ++round) {
    const double fy = max_value(sys, y);
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t t = 0; t < sys.size(); ++t)
      if (std::find(K.begin(), K.end(), t) == K.end()) cand.push_back({fy - sys.value(t, y), t});
    std::sort(cand.begin(), cand.end());
    bool moved = false;
    for (std::size_t c = 0; c < std::min<std::size_t>(cand.size(), 4) && !moved; ++c) {
      std::vector<std::size_t> set = K;
      set.push_back(cand[c].second);
      std::sort(set.begin(), set.end());
      const auto z = newton_on_equalities(sys, y, set, false);
      if (!z || !region.contains(*z)) continue;
      const double fz = max_value(sys, *z);
      if (fz <= positivity_floor(sys, *z)) continue;
      const ActiveSet az = active_set(sys, *z, activity_tolerance(sys, *z));
      if (!std::includes(az.indices.begin(), az.indices.end(), set.begin(), set.end())) continue;
      y = *z;
      K = az.indices;
      moved = true;
      path.push_back(y);
    }
    if (!moved) break;
  }
  return path;
}

/// Minimum of d(0, conv of active gradients) at x and along its tie-snap path.
inline double snapped_min_norm(const System& sys, const Vector& x, const Region& region, bool snap,
                               Vector* best_point) {
  double best = min_norm_point(generators(sys, active_set(sys, x)).gradients).distance;
  if (best_point) *best_point = x;
  if (!snap) return best;
  for (const auto& z : tie_snap_path(sys, x, region)) {
    const ActiveSet az = active_set(sys, z, activity_tolerance(sys, z));
    const double d = min_norm_point(generators(sys, az).gradients).distance;
    if (d < best) {
      best = d;
      if (best_point) *best_point = z;
    }
  }
  return best;
}

struct SampleSet {
  std::vector<Vector> points;
  std::vector<double> f;
};

inline SampleSet draw_box(const System& sys, const Box& box, int samples, std::uint64_t seed) {
  SampleSet s;
  s.points.resize(static_cast<std::size_t>(samples));
  s.f.resize(static_cast<std::size_t>(samples));
  parallel_for(s.points.size(), [&](std::size_t i) {
    auto rng = stream_rng(seed, kGlobalStream, i);
    s.points[i] = uniform_in_box(box, rng);
    s.f[i] = max_value(sys, s.points[i]);
  });
  return s;
}

inline SampleSet draw_ball(const System& sys, const Vector& center, double radius, std::size_t radius_index,
                           int samples, std::uint64_t seed) {
  SampleSet s;
  s.points.resize(static_cast<std::size_t>(samples));
  s.f.resize(static_cast<std::size_t>(samples));
  parallel_for(s.points.size(), [&](std::size_t i) {
    auto rng = stream_rng(seed, kLocalStream + radius_index, i);
    s.points[i] = uniform_in_ball(center, radius, rng);
    s.f[i] = max_value(sys, s.points[i]);
  });
  return s;
}

/// Ratio route over one sample set. Refinement runs sequentially in index
/// order, gated by the running minimum, so a longer sample list with the same
/// prefix never reports a larger value.
inline void ratio_over(const System& sys, const SublevelDistance& dist, const Region& region, const SampleSet& s,
                       double refine_span, const SamplingOptions& opt, ModulusEstimate& est) {
  const std::size_t m = s.points.size();
  std::vector<double> dval(m, kInf), ratio(m, kInf);
  std::vector<char> exact(m, 1), infeasible(m, 0);
  std::vector<Vector> start(s.points);
  parallel_for(m, [&](std::size_t i) {
    if (s.f[i] <= positivity_floor(sys, s.points[i])) return;
    infeasible[i] = 1;
    const DistanceResult d = dist(s.points[i]);
    dval[i] = d.distance;
    exact[i] = d.exact ? 1 : 0;
    ratio[i] = d.distance == kInf ? 0.0 : s.f[i] / d.distance;
    if (!opt.snap_ties || d.distance == kInf) return;
    for (const auto& z : tie_snap_path(sys, s.points[i], region)) {
      const DistanceResult dz = dist(z);
      if (!(dz.distance > 0.0) || dz.distance == kInf) continue;
      if (!dz.exact) exact[i] = 0;
      const double rz = max_value(sys, z) / dz.distance;
      if (rz < ratio[i]) {
        ratio[i] = rz;
        start[i] = z;
      }
    }
  });
  double best = est.value;
  int refinements = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!infeasible[i]) continue;
    ++est.infeasible_samples;
    if (!exact[i]) est.distance_exact = false;
    double r = ratio[i];
    Vector at = start[i];
    bool refined = false;
    if (opt.refine && refinements < opt.max_refinements && dval[i] != kInf && r < (1.0 + opt.refine_gate) * best) {
      ++refinements;
      refined = true;
      r = refine_ratio(sys, dist, region, start[i], r, 0.05 * refine_span, 1e-7 * refine_span, &at);
    }
    if (opt.record_trace) est.trace.push_back({i, s.points[i], s.f[i], dval[i], ratio[i], refined});
    if (r < best) {
      best = r;
      est.argmin = at;
    }
  }
  est.value = best;
}

inline void beta_over(const System& sys, const Region& region, const SampleSet& s, const SamplingOptions& opt,
                      ModulusEstimate& est) {
  const std::size_t m = s.points.size();
  std::vector<double> val(m, kInf);
  std::vector<Vector> at(m);
  parallel_for(m, [&](std::size_t i) {
    if (s.f[i] <= positivity_floor(sys, s.points[i])) return;
    val[i] = snapped_min_norm(sys, s.points[i], region, opt.snap_ties, &at[i]);
  });
  for (std::size_t i = 0; i < m; ++i) {
    if (val[i] == kInf) continue;
    ++est.infeasible_samples;
    if (opt.record_trace) est.trace.push_back({i, s.points[i], s.f[i], kInf, val[i], opt.snap_ties});
    if (val[i] < est.value) {
      est.value = val[i];
      est.argmin = at[i];
    }
  }
}

}  // namespace detail

/// Ratio-sampling estimate of Er f(xb) along a decreasing radius schedule: the
/// minimum ratio at the smallest radius that produced an infeasible sample.
inline ModulusEstimate local_modulus(const System& sys, const Vector& anchor, std::vector<double> radii,
                                     int samples_per_radius, std::uint64_t seed, const SamplingOptions& opt = {}) {
  require_boundary_point(sys, anchor);
  if (radii.empty()) radii = default_radii(anchor);
  for (std::size_t k = 0; k < radii.size(); ++k)
    if (!(radii[k] > 0.0) || (k > 0 && !(radii[k] < radii[k - 1])))
      throw Error(ErrorKind::Usage, "radii must be positive and strictly decreasing");
  if (samples_per_radius < 1) throw Error(ErrorKind::Usage, "samples per radius must be >= 1");

  ModulusEstimate est;
  est.scope = ModulusScope::Local;
  est.anchor = anchor;
  est.method = ModulusMethod::RatioSampling;
  est.radius_schedule = radii;
  est.seed = seed;
  std::optional<Vector> witness;
  if (!sys.is_affine() && max_value(sys, anchor) <= kFeasibilityTol) witness = anchor;
  const SublevelDistance dist(sys, witness);
  SamplingOptions local = opt;
  local.refine = false;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const auto s = detail::draw_ball(sys, anchor, radii[k], k, samples_per_radius, seed);
    est.samples_used += samples_per_radius;
    ModulusEstimate at_radius = est;
    at_radius.value = kInf;
    at_radius.infeasible_samples = 0;
    at_radius.trace.clear();
    detail::Region region{std::nullopt, std::make_pair(anchor, radii[k])};
    detail::ratio_over(sys, dist, region, s, radii[k], local, at_radius);
    est.trace.insert(est.trace.end(), at_radius.trace.begin(), at_radius.trace.end());
    est.distance_exact = est.distance_exact && at_radius.distance_exact;
    if (at_radius.infeasible_samples > 0) {
      est.value = at_radius.value;
      est.argmin = at_radius.argmin;
      est.radius_used = radii[k];
      est.infeasible_samples = at_radius.infeasible_samples;
    }
  }
  return est;
}

/// Ratio-sampling upper estimate of Er f restricted to the box.
inline ModulusEstimate global_modulus(const System& sys, const Box& box, int samples, std::uint64_t seed,
                                      const SamplingOptions& opt = {}) {
  box.validate(sys.dimension());
  if (samples < 1) throw Error(ErrorKind::Usage, "samples must be >= 1");
  ModulusEstimate est;
  est.scope = ModulusScope::Global;
  est.method = ModulusMethod::RatioSampling;
  est.seed = seed;
  est.samples_used = samples;
  const auto witness = detail::witness_for(sys, box, opt, seed, est.feasibility);
  if (est.feasibility != FeasibilityStatus::NonEmpty) return est;
  const SublevelDistance dist(sys, witness);
  const auto s = detail::draw_box(sys, box, samples, seed);
  detail::Region region{box, std::nullopt};
  double span = (box.upper - box.lower).maxCoeff();
  if (span <= 0.0) span = 1.0;
  detail::ratio_over(sys, dist, region, s, span, opt, est);
  if (sys.is_affine() && est.infeasible_samples > 0 && est.value == 0.0) est.feasibility = FeasibilityStatus::Empty;
  return est;
}

struct LocalRegion {
  Vector anchor;
  std::vector<double> radii;
};
struct GlobalRegion {
  Box box;
};
using ModulusRegion = std::variant<LocalRegion, GlobalRegion>;

/// inf over sampled infeasible x of d(0, conv active gradients), with each
/// sample first moved onto nearby ties of its active components.
inline ModulusEstimate beta_modulus(const System& sys, const ModulusRegion& where, int samples, std::uint64_t seed,
                                    const SamplingOptions& opt = {}) {
  if (samples < 1) throw Error(ErrorKind::Usage, "samples must be >= 1");
  ModulusEstimate est;
  est.method = ModulusMethod::BetaFormula;
  est.seed = seed;
  if (const auto* g = std::get_if<GlobalRegion>(&where)) {
    g->box.validate(sys.dimension());
    est.scope = ModulusScope::Global;
    est.samples_used = samples;
    const auto s = detail::draw_box(sys, g->box, samples, seed);
    detail::beta_over(sys, detail::Region{g->box, std::nullopt}, s, opt, est);
    return est;
  }
  const auto& l = std::get<LocalRegion>(where);
  require_boundary_point(sys, l.anchor);
  est.scope = ModulusScope::Local;
  est.anchor = l.anchor;
  est.radius_schedule = l.radii.empty() ? default_radii(l.anchor) : l.radii;
  for (std::size_t k = 0; k < est.radius_schedule.size(); ++k) {
    const double r = est.radius_schedule[k];
    if (!(r > 0.0) || (k > 0 && !(r < est.radius_schedule[k - 1])))
      throw Error(ErrorKind::Usage, "radii must be positive and strictly decreasing");
    const auto s = detail::draw_ball(sys, l.anchor, r, k, samples, seed);
    est.samples_used += samples;
    ModulusEstimate at_radius;
    detail::beta_over(sys, detail::Region{std::nullopt, std::make_pair(l.anchor, r)}, s, opt, at_radius);
    est.trace.insert(est.trace.end(), at_radius.trace.begin(), at_radius.trace.end());
    if (at_radius.infeasible_samples > 0) {
      est.value = at_radius.value;
      est.argmin = at_radius.argmin;
      est.radius_used = r;
      est.infeasible_samples = at_radius.infeasible_samples;
    }
  }
  return est;
}

}  // namespace ebstab
