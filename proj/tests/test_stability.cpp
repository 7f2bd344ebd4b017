#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace ebstab;
using oracle::v2;

TEST(LocalVerdict, SingleActiveConstraintIsStable) {
  const StabilityVerdict v = local_stability_verdict(fixtures::example1(), v2(1, 0), 0.1);
  EXPECT_EQ(v.classification, Classification::Stable);
  EXPECT_NEAR(v.gamma, -std::sqrt(2.0), 1e-12);
  ASSERT_TRUE(v.guaranteed_modulus);
  EXPECT_NEAR(*v.guaranteed_modulus, std::sqrt(2.0) - 0.1, 1e-12);
  EXPECT_FALSE(v.witness);
}

TEST(LocalVerdict, TriangleVertexIsStable) {
  // The generators (-2,1), (1,-2) do not contain 0 in their hull.
  const StabilityVerdict v = local_stability_verdict(fixtures::example1(), v2(-2, -2), 0.1);
  EXPECT_EQ(v.classification, Classification::Stable);
  EXPECT_NEAR(v.gamma, -std::sqrt(2.0) / 2.0, 1e-12);
}

TEST(LocalVerdict, IsolatedSolutionIsStableSingleton) {
  const System cone = parse_system_text(R"({"dimension": 2, "kind": "linear", "constraints": [
      {"a": [1, 0], "b": 0}, {"a": [0, 1], "b": 0}, {"a": [-1, -1], "b": 0}]})");
  const StabilityVerdict v = local_stability_verdict(cone, v2(0, 0), 0.1);
  EXPECT_EQ(v.classification, Classification::StableSingleton);
  EXPECT_GT(v.gamma, 0.0);
}

TEST(LocalVerdict, LineIsUnstableWithWitness) {
  const double eps = 0.1;
  const StabilityVerdict v = local_stability_verdict(fixtures::example2(), v2(0, 0), eps);
  EXPECT_EQ(v.classification, Classification::Unstable);
  EXPECT_NEAR(v.gamma, 0.0, 1e-12);
  ASSERT_TRUE(v.witness);
  EXPECT_LE(v.witness->spec.u_star.norm(), 1.0 + 1e-12);
  // Replay the witness independently of the search.
  const System g = apply_perturbation(fixtures::example2(), v.witness->spec);
  const double replay = local_modulus(g, v2(0, 0), {}, 2000, 42).value;
  EXPECT_LE(replay, 5 * eps + 0.05);
  EXPECT_NEAR(replay, v.witness->er_estimate, 1e-12);
}

TEST(LocalVerdict, ZeroFunctionIsUnstable) {
  const double eps = 0.1;
  const StabilityVerdict v = local_stability_verdict(fixtures::remark31(), Vector::Zero(1), eps);
  EXPECT_EQ(v.classification, Classification::Unstable);
  EXPECT_EQ(v.gamma, 0.0);
  ASSERT_TRUE(v.witness);
  EXPECT_LE(v.witness->er_estimate, 5 * eps + 0.05);
}

TEST(LocalVerdict, RequiresBoundaryPoint) {
  EXPECT_THROW(local_stability_verdict(fixtures::example1(), v2(0, 0), 0.1), Error);
  EXPECT_THROW(local_stability_verdict(fixtures::example1(), v2(1, 0), -0.1), Error);
}

TEST(LocalVerdict, ZeroToleranceOverrideChangesClassification) {
  VerdictOptions opt;
  opt.zero_tolerance = 2.0;
  opt.attach_witness = false;
  const StabilityVerdict v = local_stability_verdict(fixtures::example1(), v2(1, 0), 0.1, opt);
  EXPECT_EQ(v.classification, Classification::Unstable);
  EXPECT_FALSE(v.witness);
}

TEST(LocalVerdict, StableBoundAgainstRandomPerturbations) {
  const System sys = fixtures::example1();
  const Vector x = v2(1, 0);
  const double eps = 0.1;
  const double gamma = local_stability_verdict(sys, x, eps).gamma;
  std::mt19937_64 rng(4);
  for (int k = 0; k < 10; ++k) {
    const Vector u = random_unit(2, rng);
    const double er = local_modulus(apply_perturbation(sys, {u, eps, x}), x, {}, 500, 42).value;
    EXPECT_GE(er, std::abs(gamma) - eps - 0.05);
  }
}

TEST(Adversarial, ZeroEpsilonReproducesBaseEstimate) {
  const System sys = fixtures::example2();
  const AdversarialResult a = adversarial_perturbation(sys, LocalScope{v2(0, 0), {}}, 0.0, 10, 42);
  const double base = local_modulus(sys, v2(0, 0), {}, 2000, 42).value;
  EXPECT_NEAR(a.er_estimate, base, 1e-6);
}

TEST(Adversarial, DeterministicAndWithinBudget) {
  const System sys = fixtures::example2();
  const auto a = adversarial_perturbation(sys, LocalScope{v2(0, 0), {}}, 0.1, 25, 7);
  const auto b = adversarial_perturbation(sys, LocalScope{v2(0, 0), {}}, 0.1, 25, 7);
  EXPECT_EQ(a.spec.u_star, b.spec.u_star);
  EXPECT_EQ(a.er_estimate, b.er_estimate);
  EXPECT_LE(a.evaluated, 25);
  EXPECT_THROW(adversarial_perturbation(sys, LocalScope{v2(0, 0), {}}, 0.1, 0, 7), Error);
}

TEST(GlobalVerdict, TriangleIsStable) {
  const StabilityVerdict v = global_stability_verdict(fixtures::example1(), Box::cube(2, -5, 5), 0.1);
  EXPECT_EQ(v.classification, Classification::Stable);
  EXPECT_NEAR(v.gamma, std::sqrt(2.0) / 2.0, 1e-6);
  ASSERT_TRUE(v.sequence_check);
  EXPECT_TRUE(v.sequence_check->passed);
}

TEST(GlobalVerdict, LineIsUnstable) {
  const StabilityVerdict v = global_stability_verdict(fixtures::example2(), Box::cube(2, -5, 5), 0.1);
  EXPECT_EQ(v.classification, Classification::Unstable);
  EXPECT_NEAR(v.gamma, 0.0, 1e-7);
  ASSERT_TRUE(v.witness);
  EXPECT_LE(v.witness->er_estimate, 4 * 0.1 + 0.05);
}

TEST(GlobalVerdict, ExponentialIsNotCertifiedStable) {
  const Box box = Box::cube(1, -50, 10);
  const StabilityVerdict g = global_stability_verdict(fixtures::remark32(), box, 0.1);
  EXPECT_NE(g.classification, Classification::Stable);
  ASSERT_TRUE(g.sequence_check);
  EXPECT_EQ(g.sequence_check->records.size(), 3u);
  const StabilityVerdict f = global_stability_verdict(fixtures::exp_base(), box, 0.1);
  EXPECT_NE(f.classification, Classification::Stable);
}

TEST(GlobalVerdict, InfeasibleSystemIsIndeterminate) {
  const StabilityVerdict v =
      global_stability_verdict(load_system(oracle::data_path("infeasible_pair.json")), Box::cube(1, -5, 5), 0.1);
  EXPECT_EQ(v.classification, Classification::Indeterminate);
  EXPECT_NE(v.feasibility, FeasibilityStatus::NonEmpty);
}

TEST(GlobalVerdict, ExponentialDestabilizerInGlobalScope) {
  const Box box = Box::cube(1, -50, 10);
  const auto adv = adversarial_perturbation(fixtures::exp_base(), GlobalScope{box, Vector::Zero(1)}, 0.1, 20, 42);
  EXPECT_LT(adv.er_estimate, 0.2);
  EXPECT_EQ(adv.scope, ModulusScope::Global);
}
