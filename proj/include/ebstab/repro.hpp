#pragma once

// Reproduction cases: bundled systems with their published reference values,
// the computed values, and a note wherever the two disagree.

#include "ebstab/fixtures.hpp"
#include "ebstab/report.hpp"

namespace ebstab {

struct ReproOptions {
  std::uint64_t seed = 42;
  double epsilon = 0.1;
  int samples = 5000;
  int sphere_resolution = 1'000'000;
};

namespace detail {

inline double support_value(const System& sys, const std::vector<std::size_t>& J, const Vector& h) {
  const auto rows = sys.affine_rows();
  double v = -kInf;
  for (auto t : J) v = std::max(v, rows.A.row(static_cast<Eigen::Index>(t)).dot(h));
  return v;
}

inline Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace detail

inline Json repro_example1(const ReproOptions& opt = {}) {
  const System sys = fixtures::example1();
  const double r2 = std::sqrt(2.0) / 2.0;
  struct Ref {
    const char* name;
    std::vector<std::size_t> J;
    double value;
    Vector direction;
  };
  const std::vector<Ref> refs{{"theta_1", {0, 1}, -1.0, detail::vec2(0, -1)},
                              {"theta_2", {1, 2}, -r2, detail::vec2(-r2, -r2)},
                              {"theta_3", {0, 2}, -1.0, detail::vec2(-1, 0)},
                              {"theta_4", {0, 1, 2}, std::sqrt(2.0), detail::vec2(-r2, -r2)}};
  HoffmanOptions hopt;
  hopt.seed = opt.seed;
  hopt.samples = opt.samples;
  hopt.epsilon = opt.epsilon;
  const HoffmanReport rep = hoffman_verdict(sys, hopt);

  Json rows = Json::array();
  for (const auto& ref : refs) {
    const MinimaxResult mm = directional_minimax(sys, Vector::Zero(2), ref.J);
    const double attained = detail::support_value(sys, ref.J, ref.direction);
    Json row{{"name", ref.name},
             {"subset", labels_json(sys, ref.J)},
             {"reference_value", num(ref.value)},
             {"reference_direction", vec(ref.direction)},
             {"computed", to_json(mm)},
             {"value_discrepancy", num(std::abs(mm.value - ref.value))},
             {"reference_direction_attains", num(attained)}};
    std::string note;
    if (std::abs(mm.value - ref.value) > 1e-9)
      note += "reference value disagrees with facet enumeration and the sphere oracle; computed value kept. ";
    if (std::abs(attained - mm.value) > 1e-9)
      note += "reference direction gives max_t <a_t, h> = " + csv_number(attained) + ", so it does not attain the value.";
    row["note"] = note.empty() ? Json(nullptr) : Json(note);
    if (ref.J.size() == 3) {
      std::vector<Vector> g;
      for (auto t : ref.J) g.push_back(sys.gradient(t, Vector::Zero(2)));
      const auto sphere = sphere_search_minimax(g, opt.sphere_resolution, 200, opt.seed);
      row["sphere_oracle"] = {{"resolution", opt.sphere_resolution},
                              {"value", num(sphere.value)},
                              {"direction", vec(sphere.direction)},
                              {"difference", num(std::abs(sphere.value - mm.value))}};
    }
    rows.push_back(row);
  }
  return {{"case", "example1"},
          {"system", emit_system(sys)},
          {"subsets", rows},
          {"tau", {{"reference_value", num(r2)}, {"computed", num(rep.tau)}}},
          {"hoffman", to_json(sys, rep)}};
}

inline Json repro_example2(const ReproOptions& opt = {}) {
  const System sys = fixtures::example2();
  const double eps = opt.epsilon;
  const std::vector<std::size_t> J{0, 1};
  const MinimaxResult mm = directional_minimax(sys, Vector::Zero(2), J);
  HoffmanOptions hopt;
  hopt.seed = opt.seed;
  hopt.samples = opt.samples;
  hopt.epsilon = eps;
  const HoffmanReport rep = hoffman_verdict(sys, hopt);

  const Vector u = detail::vec2(0, 1);
  const Vector anchor = Vector::Zero(2);
  const System pert = apply_perturbation(sys, {u, eps, anchor});
  const auto rows = pert.affine_rows();
  Json constraints = Json::array();
  for (Eigen::Index i = 0; i < rows.A.rows(); ++i)
    constraints.push_back({{"a", vec(rows.A.row(i).transpose())}, {"b", num(rows.b[i])}});
  const Box box = Box::cube(2, -1.0, 1.0);
  const double sigma = perturbed_hoffman(sys, anchor, u, eps, box, opt.samples, opt.seed);
  const Vector test = detail::vec2(-eps, eps);
  const double f = max_value(pert, test);
  const auto proj = distance_to_polyhedron(rows.A, rows.b, test);
  const double ratio = f / proj.distance;

  VerdictOptions vopt;
  vopt.seed = opt.seed;
  const StabilityVerdict local = local_stability_verdict(sys, anchor, eps, vopt);
  return {{"case", "example2"},
          {"system", emit_system(sys)},
          {"minimax",
           {{"subset", labels_json(sys, J)}, {"reference_value", 0.0}, {"computed", to_json(mm)}}},
          {"hoffman", to_json(sys, rep)},
          {"perturbed",
           {{"perturbation", to_json(PerturbationSpec{u, eps, anchor})},
            {"constraints", constraints},
            {"box", {vec(box.lower), vec(box.upper)}},
            {"sampled_sigma", num(sigma)},
            {"reference_sigma", num(eps / std::sqrt(2.0))},
            {"test_point", vec(test)},
            {"f", num(f)},
            {"distance", num(proj.distance)},
            {"projection", vec(proj.projection)},
            {"ratio", num(ratio)},
            {"reference_ratio", num(eps / std::sqrt(2.0))},
            {"ratio_discrepancy", num(std::abs(ratio - eps / std::sqrt(2.0)))}}},
          {"local_verdict", to_json(sys, local)}};
}

inline Json repro_remark31(const ReproOptions& opt = {}) {
  const System sys = fixtures::remark31();
  const Vector anchor = Vector::Zero(1);
  const ModulusEstimate ratio = local_modulus(sys, anchor, {}, 2000, opt.seed);
  const ModulusEstimate beta = beta_modulus(sys, LocalRegion{anchor, {}}, 2000, opt.seed);
  VerdictOptions vopt;
  vopt.seed = opt.seed;
  const StabilityVerdict v = local_stability_verdict(sys, anchor, opt.epsilon, vopt);
  Json out{{"case", "remark31"},
           {"system", emit_system(sys)},
           {"local_modulus", to_json(ratio)},
           {"beta_modulus", to_json(beta)},
           {"reference_local_modulus", "inf"},
           {"gamma", num(v.gamma)},
           {"verdict", to_json(sys, v)}};
  return out;
}

inline Json repro_remark32(const ReproOptions& opt = {}) {
  const System g = fixtures::remark32();
  const System f = fixtures::exp_base();
  const double eps = g.perturbations().front().epsilon;
  const Box box = Box::cube(1, -50.0, 10.0);

  const ModulusEstimate ratio = global_modulus(g, box, opt.samples, opt.seed);
  const ModulusEstimate beta = beta_modulus(g, GlobalRegion{box}, opt.samples, opt.seed);

  // Left root of g by bisection on [-20, -1], where g changes sign.
  double lo = -20.0, hi = -1.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (max_value(g, Vector::Constant(1, mid)) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const Vector x30 = Vector::Constant(1, -30.0);
  const DistanceResult d30 = distance_to_sublevel_set(g, x30, Vector::Zero(1), opt.seed);
  const double f30 = max_value(g, x30);

  GlobalVerdictOptions gopt;
  gopt.seed = opt.seed;
  const StabilityVerdict vg = global_stability_verdict(g, box, eps, gopt);
  const StabilityVerdict vf = global_stability_verdict(f, box, eps, gopt);
  const AdversarialResult adv = adversarial_perturbation(f, GlobalScope{box, Vector::Zero(1)}, eps, 200, opt.seed);

  return {{"case", "remark32"},
          {"system", emit_system(g)},
          {"box", {vec(box.lower), vec(box.upper)}},
          {"global_modulus", to_json(ratio)},
          {"beta_modulus", to_json(beta)},
          {"reference_bound", num(2.0 * eps)},
          {"within_reference_bound", ratio.value <= 2.0 * eps},
          {"left_root", num(hi)},
          {"ratio_at_minus_30",
           {{"f", num(f30)},
            {"distance", num(d30.distance)},
            {"distance_lower_bound", num(d30.lower_bound)},
            {"ratio", num(f30 / d30.distance)}}},
          {"verdict_perturbed", to_json(g, vg)},
          {"verdict_base", to_json(f, vf)},
          {"destabilizer_for_base", to_json(adv)}};
}

inline Json repro_case(const std::string& name, const ReproOptions& opt = {}) {
  if (name == "example1") return repro_example1(opt);
  if (name == "example2") return repro_example2(opt);
  if (name == "remark31") return repro_remark31(opt);
  if (name == "remark32") return repro_remark32(opt);
  throw Error(ErrorKind::Usage, "unknown repro case '" + name + "' (example1|example2|remark31|remark32)");
}

}  // namespace ebstab
