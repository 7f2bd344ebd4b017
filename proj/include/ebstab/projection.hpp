#pragma once

// Euclidean projection onto {y : A y <= b}.
//
// Dual active-set method of Goldfarb and Idnani specialised to the identity
// Hessian: start from the unconstrained minimizer y = x, repeatedly add the
// most violated constraint, and drop active constraints whose multipliers
// would turn negative. Inconsistent systems are detected when a violated
// constraint can be neither satisfied by a primal step nor made room for by
// dropping a constraint.

#include "ebstab/core.hpp"

namespace ebstab {

struct ProjectionResult {
  bool feasible = true;  // false: polyhedron empty, distance = +inf
  Vector projection;
  double distance = kInf;
  Vector multipliers;  // one per row; zero for inactive rows
  std::vector<std::size_t> active;
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Scaled KKT residual of (y, lambda) for min 0.5 |y - x|^2 s.t. A y <= b.
inline double projection_kkt_residual(const Matrix& A, const Vector& b, const Vector& x, const Vector& y,
                                      const Vector& lambda) {
  const double scale = std::max({1.0, x.cwiseAbs().maxCoeff(), b.size() ? b.cwiseAbs().maxCoeff() : 0.0});
  const Vector slack = A * y - b;
  double r = (y - x + A.transpose() * lambda).cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    r = std::max(r, std::max(0.0, slack[i]));
    r = std::max(r, std::max(0.0, -lambda[i]));
    r = std::max(r, std::abs(lambda[i] * slack[i]));
  }
  return r / scale;
}

/// Projection without size caps. Throws Numerical on iteration-cap breakdown.
inline ProjectionResult project_onto_polyhedron(const Matrix& A, const Vector& b, const Vector& x) {
  const auto m = A.rows();
  const auto n = A.cols();
  if (b.size() != m || x.size() != n) throw Error(ErrorKind::Usage, "projection: dimension mismatch");

  Vector row_norm(m);
  for (Eigen::Index i = 0; i < m; ++i) row_norm[i] = A.row(i).norm();
  const double scale = std::max({1.0, x.cwiseAbs().maxCoeff(), m ? b.cwiseAbs().maxCoeff() : 0.0});

  ProjectionResult res;
  Vector y = x;
  std::vector<Eigen::Index> act;
  std::vector<double> u;  // multipliers of act

  auto violation = [&](Eigen::Index i) { return A.row(i).dot(y) - b[i]; };

  const int cap = 50 * static_cast<int>(m + n) + 100;
  int it = 0;
  for (; it < cap; ++it) {
    Eigen::Index p = -1;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (row_norm[i] == 0.0) {
        if (-b[i] > 1e-12 * scale) {
          // 0 <= b_i fails for every y.
          res.feasible = false;
          res.iterations = it;
          return res;
        }
        continue;
      }
      if (std::find(act.begin(), act.end(), i) != act.end()) continue;
      const double v = violation(i) / row_norm[i];
      if (v > 1e-13 * scale && v > worst) {
        worst = v;
        p = i;
      }
    }
    if (p < 0) break;

    // Insert p. In the identity-Hessian setting the primal step direction is
    // the component of -a_p orthogonal to the active normals.
    double up = 0.0;
    for (int inner = 0; inner <= static_cast<int>(n) + static_cast<int>(act.size()) + 2; ++inner) {
      const Vector np = -A.row(p).transpose();
      Vector z = np;
      Vector r;
      if (!act.empty()) {
        Matrix N(n, static_cast<Eigen::Index>(act.size()));
        for (std::size_t k = 0; k < act.size(); ++k) N.col(static_cast<Eigen::Index>(k)) = -A.row(act[k]).transpose();
        r = N.colPivHouseholderQr().solve(np);
        z = np - N * r;
      }
      const bool z_zero = z.norm() <= 1e-12 * row_norm[p];
      double t1 = kInf;
      std::size_t drop = 0;
      for (std::size_t k = 0; k < act.size(); ++k) {
        if (r[static_cast<Eigen::Index>(k)] > 1e-14) {
          const double cand = u[k] / r[static_cast<Eigen::Index>(k)];
          if (cand < t1) {
            t1 = cand;
            drop = k;
          }
        }
      }
      const double sp = b[p] - A.row(p).dot(y);  // negative while violated
      const double t2 = z_zero ? kInf : std::max(0.0, -sp / z.dot(np));
      const double t = std::min(t1, t2);
      if (t == kInf) {
        res.feasible = false;
        res.iterations = it;
        return res;
      }
      if (!z_zero) y += t * z;
      for (std::size_t k = 0; k < act.size(); ++k) u[k] -= t * r[static_cast<Eigen::Index>(k)];
      up += t;
      if (t2 <= t1) {
        act.push_back(p);
        u.push_back(up);
        break;
      }
      act.erase(act.begin() + static_cast<std::ptrdiff_t>(drop));
      u.erase(u.begin() + static_cast<std::ptrdiff_t>(drop));
    }
  }
  if (it >= cap) throw Error(ErrorKind::Numerical, "projection active-set iteration cap reached");

  res.iterations = it;
  res.projection = y;
  res.distance = (y - x).norm();
  res.multipliers = Vector::Zero(m);
  for (std::size_t k = 0; k < act.size(); ++k) {
    res.multipliers[act[k]] = std::max(0.0, u[k]);
    res.active.push_back(static_cast<std::size_t>(act[k]));
  }
  std::sort(res.active.begin(), res.active.end());
  res.kkt_residual = projection_kkt_residual(A, b, x, y, res.multipliers);
  return res;
}

inline constexpr int kMaxProjectionRows = 32;
inline constexpr int kMaxProjectionDimension = 8;

/// Desk-scale exact projection: at most 32 constraints in dimension <= 8,
/// KKT residual certified <= 1e-8.
inline ProjectionResult distance_to_polyhedron(const Matrix& A, const Vector& b, const Vector& x) {
  if (A.rows() == 0) throw Error(ErrorKind::Usage, "constraint list must be non-empty");
  if (A.rows() > kMaxProjectionRows || A.cols() > kMaxProjectionDimension)
    throw Error(ErrorKind::Usage, "projection size cap exceeded (<= 32 constraints, n <= 8)");
  require_finite(x, "point");
  ProjectionResult r = project_onto_polyhedron(A, b, x);
  if (r.feasible && r.kkt_residual > 1e-8)
    throw Error(ErrorKind::Numerical, "projection KKT residual " + std::to_string(r.kkt_residual) + " exceeds 1e-8");
  return r;
}

}  // namespace ebstab
