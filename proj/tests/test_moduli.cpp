#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace ebstab;
using oracle::v2;

namespace {

const double kHalfRoot2 = std::sqrt(2.0) / 2.0;

/// Left root of exp(x) - 1 - 0.1 x by plain bisection.
double remark_root() {
  double lo = -20.0, hi = -1.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (std::exp(mid) - 1.0 - 0.1 * mid > 0.0 ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace

TEST(Distance, AffineUsesExactProjection) {
  const System sys = fixtures::example1();
  const DistanceResult d = distance_to_sublevel_set(sys, v2(3, 3));
  EXPECT_TRUE(d.exact);
  const auto rows = sys.affine_rows();
  EXPECT_NEAR(d.distance, (v2(3, 3) - *oracle::brute_projection(rows.A, rows.b, v2(3, 3))).norm(), 1e-12);
  EXPECT_EQ(distance_to_sublevel_set(sys, v2(0, 0)).distance, 0.0);
}

TEST(Distance, OneDimensionalExponential) {
  const System g = fixtures::remark32();
  const double root = remark_root();
  const DistanceResult d = distance_to_sublevel_set(g, Vector::Constant(1, -30.0), Vector::Zero(1));
  EXPECT_FALSE(d.exact);
  EXPECT_NEAR(d.distance, root + 30.0, 1e-7);
  EXPECT_LE(d.lower_bound, d.distance);
  const double f = max_value(g, Vector::Constant(1, -30.0));
  EXPECT_NEAR(f / d.distance, 0.1, 1e-3);
}

TEST(Distance, QuadraticBallHasBracketingBounds) {
  const System disk = parse_system_text(R"({"dimension": 2, "kind": "max_convex", "components": [
      {"type": "quadratic", "Q": [[2, 0], [0, 2]], "q": [0, 0], "r": -1}]})");
  std::mt19937_64 rng(2);
  for (int k = 0; k < 30; ++k) {
    const Vector x = (1.5 + k * 0.1) * random_unit(2, rng);
    const DistanceResult d = distance_to_sublevel_set(disk, x, Vector::Zero(2));
    EXPECT_LE(d.lower_bound, x.norm() - 1.0 + 1e-9);
    EXPECT_NEAR(d.distance, x.norm() - 1.0, 1e-6);
  }
}

TEST(Distance, EmptyAffineSetIsInfinite) {
  const System sys = load_system(oracle::data_path("infeasible_pair.json"));
  const DistanceResult d = distance_to_sublevel_set(sys, Vector::Constant(1, 2.0));
  EXPECT_EQ(d.distance, kInf);
  EXPECT_EQ(d.status, FeasibilityStatus::Empty);
}

TEST(Moduli, ExampleOneGlobal) {
  const System sys = fixtures::example1();
  const Box box = Box::cube(2, -5, 5);
  const ModulusEstimate r = global_modulus(sys, box, 2000, 42);
  const ModulusEstimate b = beta_modulus(sys, GlobalRegion{box}, 2000, 42);
  EXPECT_NEAR(r.value, kHalfRoot2, 1e-6);
  EXPECT_NEAR(b.value, kHalfRoot2, 1e-9);
  EXPECT_GE(r.value, kHalfRoot2 - 1e-9);
  EXPECT_TRUE(r.distance_exact);
}

TEST(Moduli, LocalAtSingleActiveConstraint) {
  const System sys = fixtures::example1();
  const ModulusEstimate r = local_modulus(sys, v2(1, 0), {}, 1000, 42);
  EXPECT_NEAR(r.value, std::sqrt(2.0), 1e-6);
  EXPECT_EQ(r.radius_schedule.size(), 3u);
  EXPECT_EQ(r.radius_used, r.radius_schedule.back());
  const ModulusEstimate b = beta_modulus(sys, LocalRegion{v2(1, 0), {}}, 1000, 42);
  EXPECT_NEAR(b.value, std::sqrt(2.0), 1e-9);
}

TEST(Moduli, IdenticallyZeroHasInfiniteLocalModulus) {
  const System sys = fixtures::remark31();
  EXPECT_EQ(local_modulus(sys, Vector::Zero(1), {}, 500, 42).value, kInf);
  EXPECT_EQ(beta_modulus(sys, LocalRegion{Vector::Zero(1), {}}, 500, 42).value, kInf);
}

TEST(Moduli, ExponentialWithPerturbation) {
  const System g = fixtures::remark32();
  const Box box = Box::cube(1, -50, 10);
  const ModulusEstimate r = global_modulus(g, box, 5000, 42);
  EXPECT_LE(r.value, 0.11);
  EXPECT_GE(r.value, 0.099);
  EXPECT_FALSE(r.distance_exact);
  EXPECT_NEAR(beta_modulus(g, GlobalRegion{box}, 5000, 42).value, r.value, 1e-3);
}

TEST(Moduli, NotOnBoundaryIsAnError) {
  try {
    local_modulus(fixtures::example1(), v2(0, 0), {}, 10, 42);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Data);
    EXPECT_NE(std::string(e.what()).find("point not on boundary (f=-1)"), std::string::npos);
  }
}

TEST(Moduli, RejectsBadSchedules) {
  const System sys = fixtures::example1();
  EXPECT_THROW(local_modulus(sys, v2(1, 0), {0.1, 0.2}, 10, 1), Error);
  EXPECT_THROW(local_modulus(sys, v2(1, 0), {0.1, -1.0}, 10, 1), Error);
  EXPECT_THROW(global_modulus(sys, Box::cube(2, 1, 0), 10, 1), Error);
  EXPECT_THROW(global_modulus(sys, Box::cube(3, -1, 1), 10, 1), Error);
}

TEST(Moduli, SameSeedSameBits) {
  const System sys = fixtures::remark32();
  const Box box = Box::cube(1, -50, 10);
  const auto a = global_modulus(sys, box, 800, 9);
  const auto b = global_modulus(sys, box, 800, 9);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(*a.argmin, *b.argmin);
}

TEST(Moduli, MoreSamplesNeverRaiseTheEstimate) {
  std::mt19937_64 rng(33);
  for (int k = 0; k < 10; ++k) {
    const System sys = random_affine_system(rng);
    const Box box = Box::cube(sys.dimension(), -5, 5);
    const double small = global_modulus(sys, box, 300, 4).value;
    const double large = global_modulus(sys, box, 1200, 4).value;
    EXPECT_LE(large, small) << "case " << k;
  }
}

TEST(Moduli, ThreadCountDoesNotChangeResults) {
  const System sys = fixtures::example1();
  const Box box = Box::cube(2, -5, 5);
  const unsigned saved = default_threads();
  default_threads() = 1;
  const auto one = global_modulus(sys, box, 1500, 8);
  default_threads() = 4;
  const auto four = global_modulus(sys, box, 1500, 8);
  default_threads() = saved;
  EXPECT_EQ(one.value, four.value);
  EXPECT_EQ(*one.argmin, *four.argmin);
}

TEST(Moduli, RatioAndBetaAgreeOnRandomAffineSystems) {
  std::mt19937_64 rng(12);
  int agree = 0;
  const int total = 20;
  for (int k = 0; k < total; ++k) {
    const System sys = random_affine_system(rng);
    const Box box = Box::cube(sys.dimension(), -5, 5);
    const double r = global_modulus(sys, box, 2000, 42).value;
    const double b = beta_modulus(sys, GlobalRegion{box}, 2000, 42).value;
    if (std::abs(r - b) <= 0.1 * std::max(1.0, b)) ++agree;
  }
  EXPECT_GE(agree, 19);
}
