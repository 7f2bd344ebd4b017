#pragma once

// Hoffman constants of linear systems <a_t, x> <= b_t:
//   sigma(a, b) = inf_{x not in S} f(x) / d(x, S),
// the subset bound tau = min_J |theta_J| with
//   theta_J = inf_{|h|=1} max_{t in J} <a_t, h>,
// and sigma of the perturbed data a_t + eps u, b_t + eps <u, x~>.

#include "ebstab/stability.hpp"

#include <map>
#include <set>

namespace ebstab {

enum class BoundaryKind { Interior, Boundary, Outside };

inline const char* to_string(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::Interior: return "Interior";
    case BoundaryKind::Boundary: return "Boundary";
    case BoundaryKind::Outside: return "Outside";
  }
  return "?";
}

struct BoundaryClass {
  BoundaryKind kind = BoundaryKind::Interior;
  std::vector<std::size_t> active;  // Boundary only
};

inline void require_affine(const System& sys) {
  if (!sys.is_affine()) throw Error(ErrorKind::Data, "Hoffman analysis needs a purely linear system");
}

inline BoundaryClass boundary_classify(const System& sys, const Vector& x, double eta = 1e-9) {
  require_affine(sys);
  if (x.size() != sys.dimension()) throw Error(ErrorKind::Usage, "point dimension does not match system");
  const auto rows = sys.affine_rows();
  const Vector v = rows.A * x - rows.b;
  BoundaryClass c;
  if ((v.array() > eta).any()) {
    c.kind = BoundaryKind::Outside;
    return c;
  }
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) <= eta) c.active.push_back(static_cast<std::size_t>(i));
  c.kind = c.active.empty() ? BoundaryKind::Interior : BoundaryKind::Boundary;
  return c;
}

// ---------------------------------------------------------------------------
// Realizable active sets (faces of the feasible polyhedron, n <= 3).

struct RealizableFace {
  Vector point;  // a relative-interior point of the face
  std::vector<std::size_t> active;
};

inline constexpr std::size_t kMaxFaceCombinations = 5'000'000;

namespace detail {

template <class Fn>
void for_each_combination(std::size_t n, std::size_t k, Fn&& fn) {
  if (k > n) return;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    fn(static_cast<const std::vector<std::size_t>&>(idx));
    if (k == 0) return;
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

}  // namespace detail

/// Enumerates the faces of {x : A x <= b} through the vertices and extreme
/// rays of its pointed part; every face has a relative-interior point of the
/// form mean(vertices) + sum(rays) over at most rank(A) generators. Returns
/// one face per distinct non-empty active set, in lexicographic order.
inline std::vector<RealizableFace> realizable_faces(const System& sys) {
  require_affine(sys);
  const int n = sys.dimension();
  if (n > 3) throw Error(ErrorKind::Usage, "realizable active-set enumeration needs dimension <= 3");
  const auto rows = sys.affine_rows();
  const Matrix& A = rows.A;
  const Vector& b = rows.b;
  const auto m = static_cast<std::size_t>(A.rows());

  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullV);
  const Vector sv = svd.singularValues();
  const double smax = sv.size() ? sv[0] : 0.0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-12 * std::max(1.0, smax)) ++r;

  std::map<std::vector<std::size_t>, Vector> faces;
  if (r == 0) {
    std::vector<std::size_t> J;
    for (std::size_t t = 0; t < m; ++t) {
      if (b[static_cast<Eigen::Index>(t)] < -1e-9) throw Error(ErrorKind::Data, "infeasible system");
      if (std::abs(b[static_cast<Eigen::Index>(t)]) <= 1e-9) J.push_back(t);
    }
    std::vector<RealizableFace> out;
    if (!J.empty()) out.push_back({Vector::Zero(n), J});
    return out;
  }
  const Matrix U = svd.matrixV().leftCols(r);
  const Matrix B = A * U;  // constraints in coordinates of the row space
  Vector row_norm(static_cast<Eigen::Index>(m));
  for (std::size_t t = 0; t < m; ++t) row_norm[static_cast<Eigen::Index>(t)] = B.row(static_cast<Eigen::Index>(t)).norm();

  auto tight = [&](std::size_t t, const Vector& w) {
    const auto i = static_cast<Eigen::Index>(t);
    const double tol = 1e-9 * std::max({1.0, std::abs(b[i]), row_norm[i] * w.norm()});
    return std::abs(B.row(i).dot(w) - b[i]) <= tol;
  };
  auto feasible = [&](const Vector& w) {
    for (std::size_t t = 0; t < m; ++t) {
      const auto i = static_cast<Eigen::Index>(t);
      if (B.row(i).dot(w) - b[i] > 1e-9 * std::max({1.0, std::abs(b[i]), row_norm[i] * w.norm()})) return false;
    }
    return true;
  };

  // Vertices.
  std::vector<Vector> verts;
  std::vector<std::vector<std::size_t>> vert_active;
  if (detail::binomial(m, static_cast<std::size_t>(r)) > static_cast<double>(kMaxFaceCombinations))
    throw Error(ErrorKind::Data, "realizable enumeration exceeds its size cap");
  detail::for_each_combination(m, static_cast<std::size_t>(r), [&](const std::vector<std::size_t>& K) {
    Matrix BK(r, r);
    Vector bK(r);
    for (int i = 0; i < r; ++i) {
      BK.row(i) = B.row(static_cast<Eigen::Index>(K[static_cast<std::size_t>(i)]));
      bK[i] = b[static_cast<Eigen::Index>(K[static_cast<std::size_t>(i)])];
    }
    Eigen::FullPivLU<Matrix> lu(BK);
    lu.setThreshold(1e-10);
    if (lu.rank() < r) return;
    const Vector w = lu.solve(bK);
    if (!w.allFinite() || !feasible(w)) return;
    for (const auto& v : verts)
      if ((v - w).norm() <= 1e-9 * std::max(1.0, w.norm())) return;
    std::vector<std::size_t> J;
    for (std::size_t t = 0; t < m; ++t)
      if (tight(t, w)) J.push_back(t);
    verts.push_back(w);
    vert_active.push_back(std::move(J));
  });
  if (verts.empty()) throw Error(ErrorKind::Data, "infeasible system");

  // Extreme rays: one-dimensional kernels of r - 1 independent tight rows.
  std::vector<Vector> rays;
  std::vector<std::vector<std::size_t>> ray_zero;
  detail::for_each_combination(m, static_cast<std::size_t>(r - 1), [&](const std::vector<std::size_t>& K) {
    Vector d;
    if (r == 1) {
      d = Vector::Ones(1);
    } else {
      Matrix BK(r - 1, r);
      for (int i = 0; i < r - 1; ++i) BK.row(i) = B.row(static_cast<Eigen::Index>(K[static_cast<std::size_t>(i)]));
      Eigen::JacobiSVD<Matrix> s(BK, Eigen::ComputeFullV);
      const Vector ksv = s.singularValues();
      if (ksv[ksv.size() - 1] <= 1e-10 * std::max(1.0, ksv[0])) return;
      d = s.matrixV().col(r - 1);
    }
    for (double sign : {1.0, -1.0}) {
      const Vector e = sign * d;
      bool ok = true;
      for (std::size_t t = 0; t < m && ok; ++t)
        if (B.row(static_cast<Eigen::Index>(t)).dot(e) > 1e-10 * row_norm[static_cast<Eigen::Index>(t)]) ok = false;
      if (!ok) continue;
      bool dup = false;
      for (const auto& q : rays)
        if ((q - e).norm() <= 1e-9) dup = true;
      if (dup) continue;
      std::vector<std::size_t> Z;
      for (std::size_t t = 0; t < m; ++t)
        if (std::abs(B.row(static_cast<Eigen::Index>(t)).dot(e)) <= 1e-10 * row_norm[static_cast<Eigen::Index>(t)])
          Z.push_back(t);
      rays.push_back(e);
      ray_zero.push_back(std::move(Z));
    }
  });

  double combos = 0.0;
  for (int k = 1; k <= r; ++k)
    for (int l = 0; k + l <= r; ++l)
      combos += detail::binomial(verts.size(), static_cast<std::size_t>(k)) *
                detail::binomial(rays.size(), static_cast<std::size_t>(l));
  if (combos > static_cast<double>(kMaxFaceCombinations))
    throw Error(ErrorKind::Data, "realizable enumeration exceeds its size cap");

  for (int k = 1; k <= r; ++k) {
    for (int l = 0; k + l <= r; ++l) {
      detail::for_each_combination(verts.size(), static_cast<std::size_t>(k), [&](const std::vector<std::size_t>& V) {
        detail::for_each_combination(rays.size(), static_cast<std::size_t>(l), [&](const std::vector<std::size_t>& R) {
          std::vector<std::size_t> J = vert_active[V[0]];
          Vector w = Vector::Zero(r);
          for (auto vi : V) {
            w += verts[vi] / static_cast<double>(V.size());
            if (vi != V[0]) {
              std::vector<std::size_t> keep;
              std::set_intersection(J.begin(), J.end(), vert_active[vi].begin(), vert_active[vi].end(),
                                    std::back_inserter(keep));
              J = std::move(keep);
            }
          }
          for (auto ri : R) {
            w += rays[ri];
            std::vector<std::size_t> keep;
            std::set_intersection(J.begin(), J.end(), ray_zero[ri].begin(), ray_zero[ri].end(),
                                  std::back_inserter(keep));
            J = std::move(keep);
          }
          if (J.empty() || faces.count(J)) return;
          faces.emplace(std::move(J), U * w);
        });
      });
    }
  }
  std::vector<RealizableFace> out;
  for (auto& [J, p] : faces) out.push_back({p, J});
  return out;
}

// ---------------------------------------------------------------------------
// Subset table.

enum class SubsetMode { AllSubsets, RealizableActiveSets };

inline const char* to_string(SubsetMode m) {
  return m == SubsetMode::AllSubsets ? "AllSubsets" : "RealizableActiveSets";
}

struct SubsetRow {
  std::vector<std::size_t> subset;
  double theta = 0.0;
  Vector direction;
  MinimaxBranch branch = MinimaxBranch::NegativeViaMinNormPoint;
  std::optional<bool> realizable;  // known when faces could be enumerated
};

enum class HoffmanVerdict { UniformlyBounded, NotUniformlyBounded, Indeterminate };

inline const char* to_string(HoffmanVerdict v) {
  switch (v) {
    case HoffmanVerdict::UniformlyBounded: return "UniformlyBounded";
    case HoffmanVerdict::NotUniformlyBounded: return "NotUniformlyBounded";
    case HoffmanVerdict::Indeterminate: return "Indeterminate";
  }
  return "?";
}

struct PerturbationTrial {
  Vector x_tilde;
  Vector u_tilde;
  double epsilon = 0.0;
  double sigma = kInf;
};

struct HoffmanReport {
  std::string system_id;
  SubsetMode mode = SubsetMode::AllSubsets;
  std::vector<SubsetRow> subset_table;
  double tau = kInf;
  double hoffman_lower_bound = kInf;
  std::optional<double> realizable_tau;
  std::optional<double> sampled_sigma;
  HoffmanVerdict verdict = HoffmanVerdict::Indeterminate;
  std::vector<PerturbationTrial> perturbation_trials;
  double zero_tolerance = 0.0;
  std::vector<RealizableFace> faces;
};

inline constexpr int kDefaultSubsetCap = 20;

namespace detail {

inline std::vector<std::vector<std::size_t>> lexicographic_subsets(std::size_t m) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  auto rec = [&](auto&& self, std::size_t from) -> void {
    for (std::size_t t = from; t < m; ++t) {
      cur.push_back(t);
      out.push_back(cur);
      self(self, t + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

inline std::vector<SubsetRow> theta_rows(const System& sys, std::vector<std::vector<std::size_t>> subsets) {
  const auto rows = sys.affine_rows();
  std::vector<SubsetRow> table(subsets.size());
  parallel_for(subsets.size(), [&](std::size_t i) {
    std::vector<Vector> g;
    for (auto t : subsets[i]) g.push_back(rows.A.row(static_cast<Eigen::Index>(t)).transpose());
    const MinimaxResult r = minimax_of_points(g);
    table[i] = {std::move(subsets[i]), r.value, r.direction, r.branch, std::nullopt};
  });
  return table;
}

}  // namespace detail

/// theta_J for every non-empty J (AllSubsets, |T| <= cap) or for every
/// realizable active set; tau = min |theta_J| is the Hoffman lower bound.
inline HoffmanReport subset_tau(const System& sys, SubsetMode mode, int cap = kDefaultSubsetCap) {
  require_affine(sys);
  if (sys.size() == 0) throw Error(ErrorKind::Data, "empty index set");
  HoffmanReport rep;
  rep.system_id = sys.name();
  rep.mode = mode;
  std::optional<std::set<std::vector<std::size_t>>> realizable;
  if (sys.dimension() <= 3) {
    rep.faces = realizable_faces(sys);
    realizable.emplace();
    for (const auto& f : rep.faces) realizable->insert(f.active);
  }
  if (mode == SubsetMode::AllSubsets) {
    if (static_cast<int>(sys.size()) > cap)
      throw Error(ErrorKind::Data, "AllSubsets needs |T| <= " + std::to_string(cap) + " (got " +
                                       std::to_string(sys.size()) + "); use --mode realizable");
    rep.subset_table = detail::theta_rows(sys, detail::lexicographic_subsets(sys.size()));
  } else {
    if (!realizable) throw Error(ErrorKind::Usage, "realizable active-set enumeration needs dimension <= 3");
    rep.subset_table = detail::theta_rows(sys, {realizable->begin(), realizable->end()});
  }
  for (auto& row : rep.subset_table) {
    if (realizable) row.realizable = realizable->count(row.subset) > 0;
    rep.tau = std::min(rep.tau, std::abs(row.theta));
    if (row.realizable.value_or(false)) rep.realizable_tau = std::min(rep.realizable_tau.value_or(kInf), std::abs(row.theta));
  }
  if (realizable && mode == SubsetMode::AllSubsets && !rep.realizable_tau) rep.realizable_tau = kInf;
  rep.hoffman_lower_bound = rep.tau;
  return rep;
}

/// Sampled upper estimate of sigma(a, b) on the box.
inline double hoffman_estimate(const System& sys, const Box& box, int samples, std::uint64_t seed) {
  require_affine(sys);
  box.validate(sys.dimension());
  const auto rows = sys.affine_rows();
  if (!project_onto_polyhedron(rows.A, rows.b, box.clamp(Vector::Zero(sys.dimension()))).feasible)
    throw Error(ErrorKind::Data, "infeasible system: Hoffman constant undefined");
  const ModulusEstimate est = global_modulus(sys, box, samples, seed);
  if (est.infeasible_samples == 0) throw Error(ErrorKind::Data, "no infeasible samples in the box");
  return est.value;
}

/// sigma of a_t + eps u, b_t + eps <u, x~> (x~ stays on the boundary).
inline double perturbed_hoffman(const System& sys, const Vector& x_tilde, const Vector& u_tilde, double eps,
                                const Box& box, int samples, std::uint64_t seed) {
  require_affine(sys);
  require_boundary_point(sys, x_tilde);
  return hoffman_estimate(apply_perturbation(sys, {u_tilde, eps, x_tilde}), box, samples, seed);
}

struct HoffmanOptions {
  SubsetMode mode = SubsetMode::AllSubsets;
  int cap = kDefaultSubsetCap;
  bool estimate = true;
  std::optional<Box> box;  // default: [-5, 5]^n
  int samples = 2000;
  int trials = 8;
  int trial_samples = 1000;
  double epsilon = 0.1;
  double zero_tolerance = -1.0;
  std::uint64_t seed = 42;
};

inline HoffmanReport hoffman_verdict(const System& sys, const HoffmanOptions& opt = {}) {
  HoffmanReport rep = subset_tau(sys, opt.mode, opt.cap);
  const auto rows = sys.affine_rows();
  double amax = 0.0;
  for (Eigen::Index i = 0; i < rows.A.rows(); ++i) amax = std::max(amax, rows.A.row(i).norm());
  rep.zero_tolerance = opt.zero_tolerance >= 0.0 ? opt.zero_tolerance : 1e-7 * std::max(1.0, amax);

  bool realizable_zero = false;
  for (const auto& row : rep.subset_table)
    if (row.realizable.value_or(false) && std::abs(row.theta) <= rep.zero_tolerance) realizable_zero = true;
  if (rep.tau > rep.zero_tolerance)
    rep.verdict = HoffmanVerdict::UniformlyBounded;
  else if (realizable_zero)
    rep.verdict = HoffmanVerdict::NotUniformlyBounded;
  else
    rep.verdict = HoffmanVerdict::Indeterminate;

  const Box box = opt.box.value_or(Box::cube(sys.dimension(), -5.0, 5.0));
  if (opt.estimate) rep.sampled_sigma = hoffman_estimate(sys, box, opt.samples, opt.seed);

  if (opt.trials > 0) {
    // Boundary points: face points first, then projections of sampled points.
    std::vector<Vector> anchors;
    for (const auto& f : rep.faces) anchors.push_back(f.point);
    if (anchors.empty()) {
      for (int i = 0; i < 16; ++i) {
        auto rng = stream_rng(opt.seed, 0x4F, static_cast<std::uint64_t>(i));
        const Vector x = uniform_in_box(box, rng);
        const auto p = project_onto_polyhedron(rows.A, rows.b, x);
        if (p.feasible && p.distance > 0.0) anchors.push_back(p.projection);
      }
    }
    const int n = sys.dimension();
    std::vector<Vector> dirs;
    for (int i = 0; i < n; ++i) dirs.push_back(Vector::Unit(n, i));
    const SubsetRow* weakest = nullptr;
    for (const auto& row : rep.subset_table)
      if (!weakest || std::abs(row.theta) < std::abs(weakest->theta)) weakest = &row;
    if (weakest) dirs.push_back(weakest->direction);
    for (int i = 0; i < n; ++i) dirs.push_back(-Vector::Unit(n, i));
    std::vector<PerturbationTrial> trials;
    for (std::size_t a = 0; a < anchors.size() && static_cast<int>(trials.size()) < opt.trials; ++a)
      for (std::size_t d = 0; d < dirs.size() && static_cast<int>(trials.size()) < opt.trials; ++d)
        trials.push_back({anchors[a], dirs[d], opt.epsilon, kInf});
    parallel_for(trials.size(), [&](std::size_t i) {
      try {
        trials[i].sigma = hoffman_estimate(apply_perturbation(sys, {trials[i].u_tilde, trials[i].epsilon,
                                                                    trials[i].x_tilde}),
                                           box, opt.trial_samples, opt.seed);
      } catch (const Error&) {
        trials[i].sigma = kInf;  // no infeasible samples for this perturbation
      }
    });
    rep.perturbation_trials = std::move(trials);
  }
  return rep;
}

}  // namespace ebstab
