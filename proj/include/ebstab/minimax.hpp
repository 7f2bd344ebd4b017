#pragma once

// gamma(J, x) = inf_{|h|=1} max_{t in J} <grad f_t(x), h>.
//
// With G the active gradients and C = conv(G):
//   * 0 not in C: gamma = -dist(0, C), attained at h = -w/|w| where w is the
//     min-norm point of C (Wolfe's algorithm).
//   * 0 in C: gamma = min_h support_C(h) >= 0, which is the radius of the
//     largest origin-centred ball inside C; found by exact facet enumeration
//     for n <= 3 and by sphere search otherwise.

#include "ebstab/calculus.hpp"

#include <numeric>
#include <span>
#include <variant>

namespace ebstab {

// ---------------------------------------------------------------------------
// Minimum-norm point of a convex hull.

struct MinNormResult {
  Vector w;
  double distance = 0.0;
  std::vector<double> weights;  // barycentric weights, one per input point
  bool converged = false;
  int iterations = 0;
  double certificate_residual = 0.0;  // max_p (|w|^2 - <w, p>), clipped at 0
};

namespace detail {

inline void check_points(std::span<const Vector> points) {
  if (points.empty()) throw Error(ErrorKind::Usage, "point list must be non-empty");
  const auto dim = points.front().size();
  for (const auto& p : points)
    if (p.size() != dim) throw Error(ErrorKind::Usage, "points must share one dimension");
}

/// Minimizer of |sum a_i p_i| over the affine hull (sum a_i = 1), solved as
/// least squares in the differences p_i - p_0 so large, nearly parallel
/// points keep their accuracy.
inline Vector affine_minimizer(const Matrix& P) {
  const auto k = P.cols();
  Vector alpha = Vector::Zero(k);
  alpha[0] = 1.0;
  if (k == 1) return alpha;
  Matrix Q(P.rows(), k - 1);
  for (Eigen::Index i = 1; i < k; ++i) Q.col(i - 1) = P.col(i) - P.col(0);
  const Vector beta = Q.completeOrthogonalDecomposition().solve(-P.col(0));
  alpha.tail(k - 1) = beta;
  alpha[0] = 1.0 - beta.sum();
  return alpha;
}

inline double certificate(std::span<const Vector> points, const Vector& w) {
  const double ww = w.squaredNorm();
  double worst = 0.0;
  for (const auto& p : points) worst = std::max(worst, ww - w.dot(p));
  return worst;
}

}  // namespace detail

/// Wolfe's min-norm-point algorithm. Major iterations are capped at
/// 10 * |points| * n; on hitting the cap the best iterate is returned with
/// converged = false and its certificate residual.
inline MinNormResult min_norm_point(std::span<const Vector> points) {
  detail::check_points(points);
  const auto m = points.size();
  const auto n = points.front().size();
  double scale = 0.0;
  for (const auto& p : points) scale = std::max(scale, p.squaredNorm());
  const double tol = 1e-12 * std::max(scale, 1e-300);
  const int cap = std::max<int>(10 * static_cast<int>(m) * static_cast<int>(n), 10);

  std::vector<std::size_t> corral;
  std::vector<double> lambda;
  std::size_t start = 0;
  for (std::size_t j = 1; j < m; ++j)
    if (points[j].squaredNorm() < points[start].squaredNorm()) start = j;
  corral.push_back(start);
  lambda.push_back(1.0);
  Vector x = points[start];

  auto current = [&] {
    Vector v = Vector::Zero(n);
    for (std::size_t i = 0; i < corral.size(); ++i) v += lambda[i] * points[corral[i]];
    return v;
  };

  MinNormResult res;
  int it = 0;
  for (; it < cap; ++it) {
    std::size_t j = 0;
    double best = kInf;
    for (std::size_t k = 0; k < m; ++k) {
      const double v = x.dot(points[k]);
      if (v < best) {
        best = v;
        j = k;
      }
    }
    if (best >= x.squaredNorm() - tol) {
      res.converged = true;
      break;
    }
    if (std::find(corral.begin(), corral.end(), j) != corral.end()) {
      // Round-off stall: the entering point is already in the corral.
      res.converged = detail::certificate(points, x) <= 1e-10;
      break;
    }
    corral.push_back(j);
    lambda.push_back(0.0);

    for (int minor = 0; minor <= static_cast<int>(n) + 2; ++minor) {
      Matrix P(n, static_cast<Eigen::Index>(corral.size()));
      for (std::size_t i = 0; i < corral.size(); ++i) P.col(static_cast<Eigen::Index>(i)) = points[corral[i]];
      const Vector alpha = detail::affine_minimizer(P);
      bool interior = true;
      for (Eigen::Index i = 0; i < alpha.size(); ++i)
        if (alpha[i] <= 1e-14) interior = false;
      if (interior) {
        lambda.assign(alpha.data(), alpha.data() + alpha.size());
        break;
      }
      double theta = 1.0;
      for (std::size_t i = 0; i < corral.size(); ++i) {
        const double a = alpha[static_cast<Eigen::Index>(i)];
        if (a <= 1e-14) {
          const double denom = lambda[i] - a;
          if (denom > 0.0) theta = std::min(theta, lambda[i] / denom);
        }
      }
      theta = std::clamp(theta, 0.0, 1.0);
      for (std::size_t i = 0; i < corral.size(); ++i)
        lambda[i] = theta * alpha[static_cast<Eigen::Index>(i)] + (1.0 - theta) * lambda[i];
      // Drop points with vanishing weight (at least the one that hit zero).
      std::size_t worst = 0;
      for (std::size_t i = 1; i < lambda.size(); ++i)
        if (lambda[i] < lambda[worst]) worst = i;
      std::vector<std::size_t> nc;
      std::vector<double> nl;
      for (std::size_t i = 0; i < corral.size(); ++i) {
        if (i == worst || lambda[i] <= 1e-14) continue;
        nc.push_back(corral[i]);
        nl.push_back(lambda[i]);
      }
      if (nc.empty()) {
        nc.push_back(corral[worst]);
        nl.push_back(1.0);
      }
      const double s = std::accumulate(nl.begin(), nl.end(), 0.0);
      for (auto& v : nl) v /= s;
      corral = std::move(nc);
      lambda = std::move(nl);
    }
    x = current();
  }
  res.iterations = it;
  res.w = x;
  res.distance = x.norm();
  res.weights.assign(m, 0.0);
  for (std::size_t i = 0; i < corral.size(); ++i) res.weights[corral[i]] += lambda[i];
  res.certificate_residual = detail::certificate(points, x);
  return res;
}

// ---------------------------------------------------------------------------
// Inradius about the origin (0 in conv(points), n <= 3).

struct Facet {
  Vector normal;  // unit outward normal
  double offset = 0.0;  // <normal, p> <= offset for every point
};

struct InradiusResult {
  double radius = 0.0;
  Facet facet;
  bool degenerate = false;  // affine dimension < n; facet is the containing hyperplane
};

namespace detail {

inline double point_scale(std::span<const Vector> points) {
  double s = 0.0;
  for (const auto& p : points) s = std::max(s, p.norm());
  return s;
}

/// Keeps the facet with the smaller offset; ties go to the lexicographically
/// smaller normal.
inline void consider_facet(std::optional<Facet>& best, const Facet& f, double tie_tol) {
  if (!best || f.offset < best->offset - tie_tol ||
      (std::abs(f.offset - best->offset) <= tie_tol && lex_less(f.normal, best->normal))) {
    best = f;
  }
}

inline Vector lex_smaller_sign(const Vector& v) {
  Vector neg = -v;
  return lex_less(neg, v) ? neg : v;
}

/// Gift wrapping (Jarvis march) over distinct points; counter-clockwise.
inline std::vector<Vector> gift_wrap(std::vector<Vector> pts, double tol) {
  std::vector<Vector> uniq;
  for (auto& p : pts) {
    bool dup = false;
    for (const auto& q : uniq)
      if ((p - q).norm() <= tol) dup = true;
    if (!dup) uniq.push_back(p);
  }
  if (uniq.size() < 3) return uniq;
  std::size_t start = 0;
  for (std::size_t i = 1; i < uniq.size(); ++i)
    if (uniq[i][0] < uniq[start][0] || (uniq[i][0] == uniq[start][0] && uniq[i][1] < uniq[start][1])) start = i;
  auto cross = [](const Vector& o, const Vector& a, const Vector& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<Vector> hull;
  std::size_t cur = start;
  for (std::size_t guard = 0; guard <= uniq.size(); ++guard) {
    hull.push_back(uniq[cur]);
    std::size_t next = (cur + 1) % uniq.size();
    for (std::size_t k = 0; k < uniq.size(); ++k) {
      if (k == cur) continue;
      const double c = cross(uniq[cur], uniq[next], uniq[k]);
      // k is clockwise of next: wrap tighter. Collinear: keep the farthest.
      if (c < -tol * tol ||
          (std::abs(c) <= tol * tol && (uniq[k] - uniq[cur]).norm() > (uniq[next] - uniq[cur]).norm()))
        next = k;
    }
    cur = next;
    if (cur == start) break;
  }
  return hull;
}

}  // namespace detail

/// Largest rho with rho * (unit ball) inside conv(points); requires 0 in the
/// hull and n <= 3. The returned facet normal h attains
/// max_t <p_t, h> = radius.
inline InradiusResult inradius_about_origin(std::span<const Vector> points, double zero_tolerance = -1.0) {
  detail::check_points(points);
  const auto n = points.front().size();
  if (n > 3) throw Error(ErrorKind::Usage, "exact inradius needs dimension <= 3; use sphere search");
  const double scale = std::max(detail::point_scale(points), 1e-300);
  const double zt = zero_tolerance >= 0.0 ? zero_tolerance : 1e-8 * std::max(1.0, scale);
  const MinNormResult mn = min_norm_point(points);
  if (mn.distance > zt) throw Error(ErrorKind::Usage, "origin is not in the convex hull; inradius undefined");

  const double tol = 1e-12 * std::max(1.0, scale);
  InradiusResult res;

  // Affine hull passes through the origin, so it is span(points).
  Matrix P(n, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) P.col(static_cast<Eigen::Index>(i)) = points[i];
  Eigen::JacobiSVD<Matrix> svd(P, Eigen::ComputeFullU);
  const Vector sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv[0] : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-12 * std::max(smax, 1e-300) && sv[i] > 1e-300) ++rank;
  if (rank < static_cast<Eigen::Index>(n)) {
    res.degenerate = true;
    res.radius = 0.0;
    // Candidates: the null-space basis vectors of span(points), sign-normalized.
    std::optional<Vector> best;
    for (Eigen::Index c = rank; c < static_cast<Eigen::Index>(n); ++c) {
      Vector v = detail::lex_smaller_sign(svd.matrixU().col(c));
      if (!best || lex_less(v, *best)) best = v;
    }
    res.facet = {*best, 0.0};
    return res;
  }

  std::optional<Facet> best;
  if (n == 1) {
    double lo = kInf, hi = -kInf;
    for (const auto& p : points) {
      lo = std::min(lo, p[0]);
      hi = std::max(hi, p[0]);
    }
    detail::consider_facet(best, Facet{Vector::Constant(1, -1.0), -lo}, tol);
    detail::consider_facet(best, Facet{Vector::Constant(1, 1.0), hi}, tol);
  } else if (n == 2) {
    const auto hull = detail::gift_wrap(std::vector<Vector>(points.begin(), points.end()), tol);
    for (std::size_t i = 0; i < hull.size(); ++i) {
      const Vector& a = hull[i];
      const Vector& b = hull[(i + 1) % hull.size()];
      Vector nrm(2);
      nrm << (b[1] - a[1]), -(b[0] - a[0]);
      const double len = nrm.norm();
      if (len <= tol) continue;
      nrm /= len;
      detail::consider_facet(best, Facet{nrm, nrm.dot(a)}, tol);
    }
  } else {
    // Every supporting plane through three hull points is a facet plane.
    const auto m = points.size();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j)
        for (std::size_t k = j + 1; k < m; ++k) {
          Vector nrm = (points[j] - points[i]).head<3>().cross((points[k] - points[i]).head<3>());
          const double len = nrm.norm();
          if (len <= tol * std::max(1.0, scale)) continue;
          nrm /= len;
          for (int sgn : {1, -1}) {
            const Vector v = sgn * nrm;
            const double off = v.dot(points[i]);
            bool supporting = true;
            for (const auto& p : points)
              if (v.dot(p) > off + tol) {
                supporting = false;
                break;
              }
            if (supporting) detail::consider_facet(best, Facet{v, off}, tol);
          }
        }
  }
  if (!best) throw Error(ErrorKind::Numerical, "facet enumeration found no supporting facet");
  res.facet = *best;
  res.radius = std::max(0.0, best->offset);
  return res;
}

// ---------------------------------------------------------------------------
// Sphere search: brute-force upper bound on gamma.

struct SphereSearchResult {
  double value = kInf;
  Vector direction;
  int resolution = 0;
};

namespace detail {

inline double support(std::span<const Vector> points, const Vector& h) {
  double v = -kInf;
  for (const auto& p : points) v = std::max(v, p.dot(h));
  return v;
}

/// Direction k of a quasi-uniform set: uniform angles (n = 2), a seeded
/// rotation of the Fibonacci lattice (n = 3), seeded Gaussian directions (n > 3).
inline Vector sphere_direction(int n, int k, int resolution, std::uint64_t seed, const Matrix& rotation) {
  if (n == 1) return Vector::Constant(1, (k % 2 == 0) ? -1.0 : 1.0);
  if (n == 2) {
    const double th = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(resolution);
    Vector v(2);
    v << std::cos(th), std::sin(th);
    return v;
  }
  if (n == 3) {
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    const double z = 1.0 - 2.0 * (static_cast<double>(k) + 0.5) / static_cast<double>(resolution);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    Vector v(3);
    v << r * std::cos(golden * k), r * std::sin(golden * k), z;
    return rotation * v;
  }
  auto rng = stream_rng(seed, 0x5FE7E, static_cast<std::uint64_t>(k));
  return random_unit(n, rng);
}

inline Matrix seeded_rotation(int n, std::uint64_t seed) {
  auto rng = stream_rng(seed, 0x7071, 0);
  std::normal_distribution<double> g;
  Matrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = g(rng);
  Eigen::HouseholderQR<Matrix> qr(A);
  return qr.householderQ();
}

}  // namespace detail

/// Evaluates max_t <p_t, h> over `resolution` directions, then refines the
/// best by shrinking local patches on the sphere. The result is always a value
/// attained at a unit vector, hence an upper bound on the true infimum.
inline SphereSearchResult sphere_search_minimax(std::span<const Vector> points, int resolution, int refine_iters,
                                                std::uint64_t seed) {
  detail::check_points(points);
  if (resolution < 100) throw Error(ErrorKind::Usage, "resolution must be >= 100");
  const int n = static_cast<int>(points.front().size());
  SphereSearchResult res;
  res.resolution = resolution;
  if (n == 1) {
    for (double s : {-1.0, 1.0}) {
      const Vector h = Vector::Constant(1, s);
      const double v = detail::support(points, h);
      if (v < res.value) {
        res.value = v;
        res.direction = h;
      }
    }
    return res;
  }
  const Matrix rot = n == 3 ? detail::seeded_rotation(3, seed) : Matrix();

  // Chunked scan; the reduction keeps the lowest value, ties to the lowest index.
  const unsigned workers = std::max(1u, std::min<unsigned>(default_threads(), 64));
  const std::size_t chunks = workers;
  std::vector<std::pair<double, int>> best(chunks, {kInf, -1});
  const int per = (resolution + static_cast<int>(chunks) - 1) / static_cast<int>(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    const int lo = static_cast<int>(c) * per;
    const int hi = std::min(resolution, lo + per);
    for (int k = lo; k < hi; ++k) {
      const double v = detail::support(points, detail::sphere_direction(n, k, resolution, seed, rot));
      if (v < best[c].first) best[c] = {v, k};
    }
  });
  std::pair<double, int> winner{kInf, -1};
  for (const auto& b : best)
    if (b.second >= 0 && (b.first < winner.first || (b.first == winner.first && b.second < winner.second))) winner = b;
  Vector h = detail::sphere_direction(n, winner.second, resolution, seed, rot);
  h.normalize();
  double val = detail::support(points, h);

  // Local refinement: random tangent perturbations in a shrinking patch.
  const double spacing = n == 2 ? 2.0 * M_PI / resolution : std::pow(4.0 * M_PI / resolution, 1.0 / (n - 1));
  double radius = 4.0 * spacing;
  auto rng = stream_rng(seed, 0x2EF1, 0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const int tries = 24;
  for (int it = 0; it < refine_iters && radius > 1e-13; ++it) {
    bool improved = false;
    for (int k = 0; k < tries; ++k) {
      Vector d = random_unit(n, rng);
      d -= d.dot(h) * h;
      if (d.norm() < 1e-14) continue;
      d *= radius * std::abs(unif(rng)) / d.norm();
      Vector cand = (h + d).normalized();
      const double v = detail::support(points, cand);
      if (v < val) {
        val = v;
        h = cand;
        improved = true;
      }
    }
    if (!improved) radius *= 0.5;
  }
  res.value = val;
  res.direction = h;
  return res;
}

// ---------------------------------------------------------------------------
// The minimax value itself.

enum class MinimaxBranch { NegativeViaMinNormPoint, NonnegativeViaInradius, SphereSearch };

inline const char* to_string(MinimaxBranch b) {
  switch (b) {
    case MinimaxBranch::NegativeViaMinNormPoint: return "NegativeViaMinNormPoint";
    case MinimaxBranch::NonnegativeViaInradius: return "NonnegativeViaInradius";
    case MinimaxBranch::SphereSearch: return "SphereSearch";
  }
  return "?";
}

struct MinimaxOptions {
  int sphere_resolution = 20000;  // used only for n > 3 when 0 is in the hull
  int sphere_refine_iters = 200;
  std::uint64_t seed = 42;
};

struct MinimaxResult {
  double value = 0.0;
  Vector direction;
  MinimaxBranch branch = MinimaxBranch::NegativeViaMinNormPoint;
  std::variant<Vector, Facet, int> certificate;  // min-norm point | facet | grid resolution
  double zero_tolerance = 0.0;
  double min_norm_distance = 0.0;
  double wolfe_residual = 0.0;
  bool wolfe_converged = true;
};

/// Branch switch: dist(0, conv G) <= 1e-8 * max(1, max |g|).
inline double minimax_zero_tolerance(std::span<const Vector> points) {
  return 1e-8 * std::max(1.0, detail::point_scale(points));
}

inline MinimaxResult minimax_of_points(std::span<const Vector> points, const MinimaxOptions& opt = {}) {
  detail::check_points(points);
  const int n = static_cast<int>(points.front().size());
  MinimaxResult r;
  r.zero_tolerance = minimax_zero_tolerance(points);
  const MinNormResult mn = min_norm_point(points);
  r.min_norm_distance = mn.distance;
  r.wolfe_residual = mn.certificate_residual;
  r.wolfe_converged = mn.converged;
  if (mn.distance > r.zero_tolerance) {
    r.value = -mn.distance;
    r.direction = -mn.w / mn.distance;
    r.branch = MinimaxBranch::NegativeViaMinNormPoint;
    r.certificate = mn.w;
    return r;
  }
  if (n <= 3) {
    const InradiusResult ir = inradius_about_origin(points, r.zero_tolerance);
    r.value = ir.radius;
    r.direction = ir.facet.normal;
    r.branch = MinimaxBranch::NonnegativeViaInradius;
    r.certificate = ir.facet;
    return r;
  }
  const auto sr = sphere_search_minimax(points, opt.sphere_resolution, opt.sphere_refine_iters, opt.seed);
  r.value = std::max(0.0, sr.value);
  r.direction = sr.direction;
  r.branch = MinimaxBranch::SphereSearch;
  r.certificate = sr.resolution;
  return r;
}

/// gamma(J, x) for a label subset J of the system (given as component indices).
inline MinimaxResult directional_minimax(const System& sys, const Vector& x, std::span<const std::size_t> subset,
                                         const MinimaxOptions& opt = {}) {
  if (subset.empty()) throw Error(ErrorKind::Usage, "subset J must be non-empty");
  for (auto i : subset)
    if (i >= sys.size()) throw Error(ErrorKind::Usage, "subset index out of range");
  const GeneratorSet g = generators_of(sys, x, subset);
  return minimax_of_points(g.gradients, opt);
}

/// gamma(T_f(x), x) with the default (or given) activity tolerance.
inline MinimaxResult minimax_at(const System& sys, const Vector& x, double eta = -1.0, const MinimaxOptions& opt = {}) {
  const ActiveSet act = active_set(sys, x, eta);
  return directional_minimax(sys, x, act.indices, opt);
}

}  // namespace ebstab
