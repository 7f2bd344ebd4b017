#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ebstab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// f(x) <= kFeasibilityTol counts as feasible.
inline constexpr double kFeasibilityTol = 1e-9;

inline constexpr const char* kLibraryVersion = "1.0.0";

enum class ErrorKind {
  Usage,      // bad arguments to an operation or command
  Data,       // malformed or inconsistent input data
  Numerical,  // solver breakdown, iteration caps
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::string path = {})
      : std::runtime_error(path.empty() ? what : path + ": " + what),
        kind_(kind),
        path_(std::move(path)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& path() const noexcept { return path_; }

 private:
  ErrorKind kind_;
  std::string path_;
};

/// Axis-aligned box [lower, upper].
struct Box {
  Vector lower;
  Vector upper;

  static Box cube(int dim, double lo, double hi) {
    return {Vector::Constant(dim, lo), Vector::Constant(dim, hi)};
  }

  int dimension() const { return static_cast<int>(lower.size()); }

  void validate(int dim) const {
    if (lower.size() != dim || upper.size() != dim)
      throw Error(ErrorKind::Usage, "box dimension does not match system dimension");
    for (int i = 0; i < dim; ++i) {
      if (!(lower[i] <= upper[i]))
        throw Error(ErrorKind::Usage, "degenerate box (lower > upper) on axis " + std::to_string(i));
    }
  }

  double diameter() const { return (upper - lower).norm(); }

  bool contains(const Vector& x) const {
    for (int i = 0; i < x.size(); ++i)
      if (x[i] < lower[i] || x[i] > upper[i]) return false;
    return true;
  }

  Vector clamp(Vector x) const {
    for (int i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
    return x;
  }
};

// ---------------------------------------------------------------------------
// Seeding. Every sample index gets its own generator derived from
// (seed, stream, index), so results never depend on worker count or on how
// many samples follow.

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return std::mt19937_64(derive_seed(seed, stream, index));
}

inline Vector uniform_in_box(const Box& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector x(box.dimension());
  for (int i = 0; i < x.size(); ++i) x[i] = box.lower[i] + u(rng) * (box.upper[i] - box.lower[i]);
  return x;
}

inline Vector random_unit(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(dim);
  do {
    for (int i = 0; i < dim; ++i) v[i] = g(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

/// Uniform sample from the closed ball B(center, radius).
inline Vector uniform_in_ball(const Vector& center, double radius, std::mt19937_64& rng) {
  const int dim = static_cast<int>(center.size());
  Vector dir = random_unit(dim, rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double rho = radius * std::pow(u(rng), 1.0 / dim);
  return center + rho * dir;
}

// ---------------------------------------------------------------------------
// Worker pool sizing. The CLI sets this from --threads.

inline unsigned& default_threads() {
  static unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  return threads;
}

/// Runs body(i) for i in [0, n) over contiguous chunks. body must only write
/// to slot i of caller-owned storage; the first exception (by chunk order) is
/// rethrown.
template <class Body>
void parallel_for(std::size_t n, Body&& body, unsigned threads = default_threads()) {
  if (n == 0) return;
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(n, lo + chunk);
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Lexicographic comparison with an absolute tolerance per coordinate.
inline bool lex_less(const Vector& a, const Vector& b, double tol = 1e-12) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] < b[i] - tol) return true;
    if (a[i] > b[i] + tol) return false;
  }
  return false;
}

inline void require_finite(const Vector& x, const char* what) {
  for (int i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i])) throw Error(ErrorKind::Data, std::string("non-finite coordinate in ") + what);
}

}  // namespace ebstab
