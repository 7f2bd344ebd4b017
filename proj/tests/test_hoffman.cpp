#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace ebstab;
using oracle::v2;

namespace {

const double kHalfRoot2 = std::sqrt(2.0) / 2.0;

HoffmanOptions quick() {
  HoffmanOptions o;
  o.samples = 1000;
  o.trial_samples = 400;
  return o;
}

}  // namespace

TEST(Hoffman, TriangleSubsetTable) {
  const System sys = fixtures::example1();
  const HoffmanReport r = hoffman_verdict(sys, quick());
  ASSERT_EQ(r.subset_table.size(), 7u);
  const std::vector<std::vector<std::size_t>> order{{0}, {0, 1}, {0, 1, 2}, {0, 2}, {1}, {1, 2}, {2}};
  const std::vector<double> theta{-std::sqrt(2.0), -1.0, kHalfRoot2, -1.0, -std::sqrt(5.0), -kHalfRoot2,
                                  -std::sqrt(5.0)};
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_EQ(r.subset_table[i].subset, order[i]);
    EXPECT_NEAR(r.subset_table[i].theta, theta[i], 1e-9) << i;
    ASSERT_TRUE(r.subset_table[i].realizable);
    EXPECT_EQ(*r.subset_table[i].realizable, order[i].size() < 3) << i;
  }
  EXPECT_NEAR(r.tau, kHalfRoot2, 1e-9);
  ASSERT_TRUE(r.realizable_tau);
  EXPECT_NEAR(*r.realizable_tau, kHalfRoot2, 1e-9);
  EXPECT_EQ(r.verdict, HoffmanVerdict::UniformlyBounded);
  ASSERT_TRUE(r.sampled_sigma);
  EXPECT_GE(*r.sampled_sigma, r.tau - 1e-6);
  EXPECT_EQ(r.faces.size(), 6u);
}

TEST(Hoffman, LineIsNotUniformlyBounded) {
  const HoffmanReport r = hoffman_verdict(fixtures::example2(), quick());
  EXPECT_NEAR(r.tau, 0.0, 1e-8);
  EXPECT_EQ(r.verdict, HoffmanVerdict::NotUniformlyBounded);
  ASSERT_FALSE(r.perturbation_trials.empty());
  EXPECT_LE(static_cast<int>(r.perturbation_trials.size()), 8);
  double smallest = kInf;
  for (const auto& t : r.perturbation_trials) smallest = std::min(smallest, t.sigma);
  EXPECT_LE(smallest, 0.1 / std::sqrt(2.0) + 0.01);
}

TEST(Hoffman, PerturbedLineMatchesClosedForm) {
  // Tilting the line leaves a wedge whose Hoffman constant is eps/sqrt2.
  const double eps = 0.1;
  const double s = perturbed_hoffman(fixtures::example2(), v2(0, 0), v2(0, 1), eps, Box::cube(2, -5, 5), 5000, 42);
  EXPECT_LE(s, eps / std::sqrt(2.0) + 0.01);
  EXPECT_GE(s, eps / std::sqrt(2.0) - 1e-6);
}

TEST(Hoffman, SubsetCapRefusesLargeIndexSets) {
  const System sys = load_system(oracle::data_path("parametric200.json"));
  try {
    subset_tau(sys, SubsetMode::AllSubsets);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Data);
    EXPECT_NE(std::string(e.what()).find("realizable"), std::string::npos);
  }
}

TEST(Hoffman, RealizableModeOnParametricFamily) {
  const System sys = load_system(oracle::data_path("parametric200.json"));
  HoffmanOptions o = quick();
  o.mode = SubsetMode::RealizableActiveSets;
  o.trials = 0;
  const HoffmanReport r = hoffman_verdict(sys, o);
  EXPECT_FALSE(r.subset_table.empty());
  for (const auto& row : r.subset_table) {
    ASSERT_TRUE(row.realizable);
    EXPECT_TRUE(*row.realizable);
    EXPECT_LE(row.subset.size(), 2u);
  }
  EXPECT_GT(r.tau, 0.0);
  EXPECT_EQ(r.verdict, HoffmanVerdict::UniformlyBounded);
}

TEST(Hoffman, RejectsNonAffineSystems) {
  try {
    hoffman_verdict(fixtures::remark32(), quick());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Data);
  }
}

TEST(Hoffman, BoundaryClassification) {
  const System sys = fixtures::example1();
  EXPECT_EQ(boundary_classify(sys, v2(0, 0)).kind, BoundaryKind::Interior);
  EXPECT_EQ(boundary_classify(sys, v2(5, 5)).kind, BoundaryKind::Outside);
  const BoundaryClass c = boundary_classify(sys, v2(-2, -2));
  EXPECT_EQ(c.kind, BoundaryKind::Boundary);
  EXPECT_EQ(c.active, (std::vector<std::size_t>{1, 2}));
}

TEST(Hoffman, SampledSigmaDominatesTau) {
  std::mt19937_64 rng(101);
  int checked = 0;
  for (int k = 0; k < 15; ++k) {
    const System sys = random_affine_system(rng);
    HoffmanOptions o = quick();
    o.trials = 0;
    const HoffmanReport r = hoffman_verdict(sys, o);
    if (!r.sampled_sigma) continue;
    EXPECT_GE(*r.sampled_sigma, r.tau - 1e-6) << "case " << k;
    ++checked;
  }
  EXPECT_GE(checked, 10);
}

TEST(Hoffman, TauMatchesIndependentMinimax) {
  std::mt19937_64 rng(55);
  for (int k = 0; k < 20; ++k) {
    const System sys = random_affine_system(rng);
    const auto rows = sys.affine_rows();
    const HoffmanReport r = subset_tau(sys, SubsetMode::AllSubsets);
    double tau = kInf;
    oracle::for_each_subset(sys.size(), [&](const std::vector<std::size_t>& J) {
      std::vector<Vector> g;
      for (auto t : J) g.push_back(rows.A.row(static_cast<Eigen::Index>(t)).transpose());
      const double v = sys.dimension() == 2 ? oracle::grid_minimax_2d(g) : oracle::grid_minimax_3d(g, 120);
      tau = std::min(tau, std::abs(v));
    });
    EXPECT_NEAR(r.tau, tau, 1e-6) << "case " << k;
  }
}
