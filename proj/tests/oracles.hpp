#pragma once

// Test-side reference computations. None of them call the library routines
// they are used to check: projections and min-norm points come from subset
// enumeration, minimax values from dense direction grids.

#include "ebstab/ebstab.hpp"

#include <string>

namespace oracle {

using ebstab::Matrix;
using ebstab::Vector;

inline std::string data_path(const std::string& name) { return std::string(EBSTAB_DATA_DIR) + "/" + name; }

inline Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

inline Vector v3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

inline double support(const std::vector<Vector>& g, const Vector& h) {
  double s = -std::numeric_limits<double>::infinity();
  for (const auto& p : g) s = std::max(s, p.dot(h));
  return s;
}

/// Calls f(subset) for every non-empty subset of {0..m-1} (bitmask order).
template <class F>
void for_each_subset(std::size_t m, F&& f) {
  for (std::size_t mask = 1; mask < (std::size_t{1} << m); ++mask) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < m; ++i)
      if (mask & (std::size_t{1} << i)) s.push_back(i);
    f(s);
  }
}

/// Euclidean projection onto {y : A y <= b} by enumerating candidate active
/// sets: project onto each equality subsystem, keep the feasible candidates
/// with nonnegative multipliers, return the closest. Returns nullopt when
/// no candidate is feasible (empty polyhedron, for small m).
inline std::optional<Vector> brute_projection(const Matrix& A, const Vector& b, const Vector& x) {
  const auto m = static_cast<std::size_t>(A.rows());
  const double tol = 1e-9 * std::max(1.0, std::max(A.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()));
  std::optional<Vector> best;
  double best_d = std::numeric_limits<double>::infinity();
  auto consider = [&](const Vector& y) {
    if (((A * y - b).array() > tol * std::max(1.0, y.norm())).any()) return;
    const double d = (y - x).norm();
    if (d < best_d) {
      best_d = d;
      best = y;
    }
  };
  consider(x);
  for_each_subset(m, [&](const std::vector<std::size_t>& s) {
    if (static_cast<Eigen::Index>(s.size()) > A.cols()) return;
    Matrix As(static_cast<Eigen::Index>(s.size()), A.cols());
    Vector bs(static_cast<Eigen::Index>(s.size()));
    for (std::size_t k = 0; k < s.size(); ++k) {
      As.row(static_cast<Eigen::Index>(k)) = A.row(static_cast<Eigen::Index>(s[k]));
      bs[static_cast<Eigen::Index>(k)] = b[static_cast<Eigen::Index>(s[k])];
    }
    Eigen::FullPivLU<Matrix> lu(As);
    if (lu.rank() < As.rows()) return;
    const Matrix G = As * As.transpose();
    const Vector mu = G.ldlt().solve(As * x - bs);
    if ((mu.array() < -1e-9).any()) return;
    consider(x - As.transpose() * mu);
  });
  return best;
}

/// Minimum-norm point of conv(points) by enumerating affinely independent
/// subsets and keeping minimizers with nonnegative weights.
inline double brute_min_norm(const std::vector<Vector>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for_each_subset(pts.size(), [&](const std::vector<std::size_t>& s) {
    const auto k = static_cast<Eigen::Index>(s.size());
    Matrix K = Matrix::Zero(k + 1, k + 1);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) K(i, j) = pts[s[i]].dot(pts[s[j]]);
    K.topRightCorner(k, 1).setOnes();
    K.bottomLeftCorner(1, k).setOnes();
    Vector rhs = Vector::Zero(k + 1);
    rhs[k] = 1.0;
    Eigen::FullPivLU<Matrix> lu(K);
    if (!lu.isInvertible()) return;
    const Vector sol = lu.solve(rhs);
    if ((sol.head(k).array() < -1e-12).any()) return;
    Vector w = Vector::Zero(pts.front().size());
    for (Eigen::Index i = 0; i < k; ++i) w += sol[i] * pts[s[i]];
    best = std::min(best, w.norm());
  });
  return best;
}

/// min over unit h of max_t <g_t, h> in 2-D on a uniform angle grid, then
/// golden-section refinement around the best angle.
inline double grid_minimax_2d(const std::vector<Vector>& g, int resolution = 200000) {
  auto value = [&](double th) { return support(g, v2(std::cos(th), std::sin(th))); };
  double best = std::numeric_limits<double>::infinity(), at = 0.0;
  const double step = 2.0 * std::numbers::pi / resolution;
  for (int k = 0; k < resolution; ++k) {
    const double v = value(k * step);
    if (v < best) {
      best = v;
      at = k * step;
    }
  }
  double lo = at - step, hi = at + step;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 100; ++it) {
    const double a = hi - r * (hi - lo), b = lo + r * (hi - lo);
    if (value(a) < value(b))
      hi = b;
    else
      lo = a;
  }
  return std::min(best, value(0.5 * (lo + hi)));
}

/// Smallest support value over the stationary directions of the sphere
/// problem: -g_i/|g_i|, the best unit direction on each pairwise tie plane,
/// and both unit directions on each triple tie line (n = 3).
inline double tie_candidates_minimax(const std::vector<Vector>& g) {
  const auto n = g.front().size();
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](Vector h) {
    if (h.norm() < 1e-12) return;
    h.normalize();
    best = std::min(best, support(g, h));
  };
  const std::size_t m = g.size();
  for (std::size_t i = 0; i < m; ++i) {
    consider(-g[i]);
    for (std::size_t j = i + 1; j < m; ++j) {
      const Vector d = g[i] - g[j];
      if (d.norm() < 1e-12) continue;
      const Vector dn = d.normalized();
      consider(-(g[i] - g[i].dot(dn) * dn));
      if (n != 3) continue;
      for (std::size_t k = j + 1; k < m; ++k) {
        const Vector e = g[i] - g[k];
        const Vector line = v3(d[1] * e[2] - d[2] * e[1], d[2] * e[0] - d[0] * e[2], d[0] * e[1] - d[1] * e[0]);
        consider(line);
        consider(-line);
      }
    }
  }
  // In 2-D a tie "plane" is a line with two unit directions.
  if (n == 2)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        const Vector d = g[i] - g[j];
        consider(v2(-d[1], d[0]));
        consider(v2(d[1], -d[0]));
      }
  return best;
}

/// 3-D version: latitude/longitude grid followed by shrinking random
/// perturbations of the best direction, then the tie candidates.
inline double grid_minimax_3d(const std::vector<Vector>& g, int per_axis = 600, std::uint64_t seed = 1) {
  double best = tie_candidates_minimax(g);
  Vector at = v3(0, 0, 1);
  for (int i = 0; i <= per_axis; ++i) {
    const double phi = std::numbers::pi * i / per_axis;
    const int ring = std::max(1, static_cast<int>(2 * per_axis * std::sin(phi)));
    for (int j = 0; j < ring; ++j) {
      const double th = 2.0 * std::numbers::pi * j / ring;
      const Vector h = v3(std::sin(phi) * std::cos(th), std::sin(phi) * std::sin(th), std::cos(phi));
      const double v = support(g, h);
      if (v < best) {
        best = v;
        at = h;
      }
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  double radius = 2.0 * std::numbers::pi / per_axis;
  while (radius > 1e-12) {
    bool improved = false;
    for (int k = 0; k < 60; ++k) {
      Vector h = at + radius * v3(n01(rng), n01(rng), n01(rng));
      h.normalize();
      const double v = support(g, h);
      if (v < best) {
        best = v;
        at = h;
        improved = true;
      }
    }
    if (!improved) radius *= 0.5;
  }
  return best;
}

}  // namespace oracle
