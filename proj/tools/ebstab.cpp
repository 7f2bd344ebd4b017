#include "ebstab/ebstab.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>

namespace {

using namespace ebstab;

constexpr int kExitOk = 0;
constexpr int kExitUnstable = 2;
constexpr int kExitIndeterminate = 3;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitInternal = 70;

struct Common {
  std::string system;
  std::uint64_t seed = 42;
  unsigned threads = 0;
  std::string csv;
  std::optional<double> eta;
  std::optional<double> zero_tol;
};

std::vector<double> parse_reals(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (item.empty() || used != item.size())
      throw Error(ErrorKind::Usage, std::string("cannot parse ") + what + " '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorKind::Usage, std::string("empty ") + what);
  return out;
}

Vector parse_vector(const std::string& text, int dim, const char* what) {
  const auto v = parse_reals(text, what);
  if (static_cast<int>(v.size()) != dim)
    throw Error(ErrorKind::Usage, std::string(what) + " needs " + std::to_string(dim) + " coordinates");
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// "lo,hi" broadcast to every axis, or "lo1,hi1,...,lon,hin".
Box parse_box(const std::string& text, int dim) {
  const auto v = parse_reals(text, "box");
  Box box{Vector(dim), Vector(dim)};
  if (v.size() == 2) {
    box.lower.setConstant(v[0]);
    box.upper.setConstant(v[1]);
  } else if (static_cast<int>(v.size()) == 2 * dim) {
    for (int i = 0; i < dim; ++i) {
      box.lower[i] = v[2 * i];
      box.upper[i] = v[2 * i + 1];
    }
  } else {
    throw Error(ErrorKind::Usage, "box needs 2 or " + std::to_string(2 * dim) + " numbers");
  }
  box.validate(dim);
  return box;
}

System require_system(const Common& c) {
  if (c.system.empty()) throw Error(ErrorKind::Usage, "--system is required");
  return load_system(c.system);
}

Json common_json(const Common& c) {
  return {{"system", c.system.empty() ? Json(nullptr) : Json(c.system)},
          {"seed", c.seed},
          {"eta", c.eta ? num(*c.eta) : Json("default")},
          {"zero_tol", c.zero_tol ? num(*c.zero_tol) : Json("default")},
          {"csv", c.csv.empty() ? Json(nullptr) : Json(c.csv)}};
}

std::filesystem::path csv_dir(const Common& c) {
  std::filesystem::path dir(c.csv);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Usage, "cannot create CSV directory '" + c.csv + "'");
  return dir;
}

int verdict_exit(Classification c) {
  switch (c) {
    case Classification::StableSingleton:
    case Classification::Stable: return kExitOk;
    case Classification::Unstable: return kExitUnstable;
    case Classification::Indeterminate: return kExitIndeterminate;
  }
  return kExitInternal;
}

struct Outcome {
  Json options;
  Json results;
  long long samples = 0;
  int exit_code = kExitOk;
};

// ---------------------------------------------------------------------------

struct LocalArgs {
  std::string point;
  double eps = 0.1;
  int samples = 2000;
  int budget = 200;
};

Outcome run_analyze_local(const Common& c, const LocalArgs& a) {
  const System sys = require_system(c);
  const Vector x = parse_vector(a.point, sys.dimension(), "point");
  VerdictOptions vo;
  vo.seed = c.seed;
  vo.budget = a.budget;
  if (c.eta) vo.eta = *c.eta;
  if (c.zero_tol) vo.zero_tolerance = *c.zero_tol;
  const StabilityVerdict v = local_stability_verdict(sys, x, a.eps, vo);
  SamplingOptions so;
  so.record_trace = !c.csv.empty();
  const ModulusEstimate ratio = local_modulus(sys, x, {}, a.samples, c.seed, so);
  const ModulusEstimate beta = beta_modulus(sys, LocalRegion{x, {}}, a.samples, c.seed, so);
  if (!c.csv.empty()) {
    const auto dir = csv_dir(c);
    samples_csv(ratio).write(dir / "ratio_samples.csv");
    samples_csv(beta).write(dir / "beta_samples.csv");
  }
  Outcome o;
  o.options = {{"point", vec(x)}, {"eps", num(a.eps)}, {"samples", a.samples}, {"budget", a.budget}};
  o.results = {{"verdict", to_json(sys, v)}, {"local_modulus", to_json(ratio)}, {"beta_modulus", to_json(beta)}};
  o.samples = ratio.samples_used + beta.samples_used + (v.witness ? v.witness->evaluated : 0);
  o.exit_code = verdict_exit(v.classification);
  return o;
}

struct GlobalArgs {
  std::string box = "-5,5";
  double eps = 0.1;
  int samples = 2000;
  int boundary_samples = 2000;
  int interior_samples = 2000;
  int budget = 60;
};

Outcome run_analyze_global(const Common& c, const GlobalArgs& a) {
  const System sys = require_system(c);
  const Box box = parse_box(a.box, sys.dimension());
  GlobalVerdictOptions go;
  go.seed = c.seed;
  go.boundary_samples = a.boundary_samples;
  go.interior_samples = a.interior_samples;
  go.budget = a.budget;
  if (c.zero_tol) go.zero_tolerance = *c.zero_tol;
  const StabilityVerdict v = global_stability_verdict(sys, box, a.eps, go);
  SamplingOptions so;
  so.record_trace = !c.csv.empty();
  const ModulusEstimate ratio = global_modulus(sys, box, a.samples, c.seed, so);
  const ModulusEstimate beta = beta_modulus(sys, GlobalRegion{box}, a.samples, c.seed, so);
  if (!c.csv.empty()) {
    const auto dir = csv_dir(c);
    samples_csv(ratio).write(dir / "ratio_samples.csv");
    samples_csv(beta).write(dir / "beta_samples.csv");
    if (v.sequence_check) sequence_csv(*v.sequence_check).write(dir / "sequence_check.csv");
  }
  Outcome o;
  o.options = {{"box", {vec(box.lower), vec(box.upper)}},
               {"eps", num(a.eps)},
               {"samples", a.samples},
               {"boundary_samples", a.boundary_samples},
               {"interior_samples", a.interior_samples},
               {"budget", a.budget}};
  o.results = {{"verdict", to_json(sys, v)}, {"global_modulus", to_json(ratio)}, {"beta_modulus", to_json(beta)}};
  o.samples = ratio.samples_used + beta.samples_used + a.boundary_samples + a.interior_samples;
  o.exit_code = v.feasibility == FeasibilityStatus::NonEmpty ? verdict_exit(v.classification) : kExitIndeterminate;
  return o;
}

struct HoffmanArgs {
  std::string mode = "all";
  bool estimate = true;
  std::string box;
  int samples = 2000;
  int trials = 8;
  double eps = 0.1;
  int cap = kDefaultSubsetCap;
};

Outcome run_hoffman(const Common& c, const HoffmanArgs& a) {
  const System sys = require_system(c);
  HoffmanOptions ho;
  if (a.mode == "all")
    ho.mode = SubsetMode::AllSubsets;
  else if (a.mode == "realizable")
    ho.mode = SubsetMode::RealizableActiveSets;
  else
    throw Error(ErrorKind::Usage, "--mode must be all or realizable");
  ho.cap = a.cap;
  ho.estimate = a.estimate;
  if (!a.box.empty()) ho.box = parse_box(a.box, sys.dimension());
  ho.samples = a.samples;
  ho.trials = a.trials;
  ho.epsilon = a.eps;
  ho.seed = c.seed;
  if (c.zero_tol) ho.zero_tolerance = *c.zero_tol;
  const HoffmanReport rep = hoffman_verdict(sys, ho);
  if (!c.csv.empty()) {
    const auto dir = csv_dir(c);
    subset_table_csv(sys, rep).write(dir / "subsets.csv");
    trials_csv(rep).write(dir / "trials.csv");
  }
  const Box box = ho.box ? *ho.box : Box::cube(sys.dimension(), -5.0, 5.0);
  Outcome o;
  o.options = {{"mode", to_string(ho.mode)},
               {"cap", a.cap},
               {"estimate", a.estimate},
               {"box", {vec(box.lower), vec(box.upper)}},
               {"samples", a.samples},
               {"trials", a.trials},
               {"eps", num(a.eps)}};
  o.results = to_json(sys, rep);
  o.samples = (a.estimate ? a.samples : 0) + static_cast<long long>(rep.perturbation_trials.size()) * ho.trial_samples;
  o.exit_code = rep.verdict == HoffmanVerdict::UniformlyBounded      ? kExitOk
                : rep.verdict == HoffmanVerdict::NotUniformlyBounded ? kExitUnstable
                                                                     : kExitIndeterminate;
  return o;
}

struct PerturbArgs {
  std::string point;
  double eps = 0.1;
  std::string ustar;
  int budget = 200;
  int samples = 2000;
};

Outcome run_perturb(const Common& c, const PerturbArgs& a) {
  const System sys = require_system(c);
  const Vector x = parse_vector(a.point, sys.dimension(), "point");
  require_boundary_point(sys, x);
  if (!(a.eps >= 0.0)) throw Error(ErrorKind::Usage, "--eps must be >= 0");
  const MinimaxResult mm = minimax_at(sys, x, c.eta.value_or(-1.0));
  const ModulusEstimate base = local_modulus(sys, x, {}, a.samples, c.seed);

  PerturbationSpec spec{Vector(), a.eps, x};
  Json search = nullptr;
  long long extra = 0;
  if (!a.ustar.empty()) {
    spec.u_star = parse_vector(a.ustar, sys.dimension(), "ustar");
  } else {
    const AdversarialResult adv = adversarial_perturbation(sys, LocalScope{x, {}}, a.eps, a.budget, c.seed);
    spec.u_star = adv.spec.u_star;
    search = to_json(adv);
    extra = adv.evaluated;
  }
  const System g = apply_perturbation(sys, spec);
  const ModulusEstimate pert = local_modulus(g, x, {}, a.samples, c.seed);

  const double bound = std::abs(mm.value) - a.eps;
  Json comparison{{"gamma", num(mm.value)},
                  {"abs_gamma_minus_eps", num(bound)},
                  {"perturbed_modulus", num(pert.value)},
                  {"margin", num(pert.value - bound)}};
  Outcome o;
  o.options = {{"point", vec(x)},
               {"eps", num(a.eps)},
               {"ustar", a.ustar.empty() ? Json("search") : vec(spec.u_star)},
               {"budget", a.budget},
               {"samples", a.samples}};
  o.results = {{"perturbation", to_json(spec)},
               {"search", search},
               {"base_minimax", to_json(mm)},
               {"base_modulus", to_json(base)},
               {"perturbed_modulus", to_json(pert)},
               {"comparison", comparison}};
  o.samples = base.samples_used + pert.samples_used + extra;
  return o;
}

struct OracleArgs {
  std::string point;
  int random = 0;
  std::string box;
  int samples = 2000;
  int resolution = 100'000;
};

Outcome run_oracle(const Common& c, const OracleArgs& a) {
  if (a.point.empty() == (a.random == 0)) throw Error(ErrorKind::Usage, "oracle needs exactly one of --point or --random");
  OracleOptions oo;
  oo.seed = c.seed;
  oo.samples = a.samples;
  oo.sphere_resolution = a.resolution;
  if (c.eta) oo.eta = *c.eta;
  bool all_passed = true;
  CsvTable table({"case", "check", "residual", "tolerance", "passed", "skipped"});
  Json cases = Json::array();
  auto record = [&](const std::string& label, const std::vector<OracleCheck>& checks, Json extra) {
    Json arr = Json::array();
    for (const auto& ch : checks) {
      all_passed = all_passed && ch.passed;
      arr.push_back(to_json(ch));
      table.add({label, ch.name, csv_number(ch.residual), csv_number(ch.tolerance), ch.passed ? "true" : "false",
                 ch.skipped ? "true" : "false"});
    }
    extra["checks"] = arr;
    cases.push_back(extra);
  };

  Outcome o;
  if (!a.point.empty()) {
    const System sys = require_system(c);
    const Vector x = parse_vector(a.point, sys.dimension(), "point");
    if (!a.box.empty()) oo.box = parse_box(a.box, sys.dimension());
    record("point", oracle_at(sys, x, oo), {{"point", vec(x)}});
    o.options = {{"point", vec(x)}};
    o.samples = 2LL * a.samples;
  } else {
    if (a.random < 0) throw Error(ErrorKind::Usage, "--random must be positive");
    for (int k = 0; k < a.random; ++k) {
      auto rng = stream_rng(c.seed, 0x0AC1E, static_cast<std::uint64_t>(k));
      const System sys = random_affine_system(rng);
      OracleOptions per = oo;
      if (!a.box.empty()) per.box = parse_box(a.box, sys.dimension());
      record(std::to_string(k), oracle_on_system(sys, per), {{"index", k}, {"system", emit_system(sys)}});
    }
    o.options = {{"random", a.random}};
    o.samples = 2LL * a.samples * a.random;
  }
  if (!c.csv.empty()) table.write(csv_dir(c) / "oracle_checks.csv");
  o.options["samples"] = a.samples;
  o.options["resolution"] = a.resolution;
  o.options["box"] = a.box.empty() ? Json("-5,5") : Json(a.box);
  o.results = {{"all_passed", all_passed}, {"cases", cases}};
  o.exit_code = all_passed ? kExitOk : kExitUnstable;
  return o;
}

struct ReproArgs {
  std::string name;
  double eps = 0.1;
  int samples = 5000;
};

Outcome run_repro(const Common& c, const ReproArgs& a) {
  ReproOptions ro;
  ro.seed = c.seed;
  ro.epsilon = a.eps;
  ro.samples = a.samples;
  Outcome o;
  o.results = repro_case(a.name, ro);
  o.options = {{"case", a.name}, {"eps", num(a.eps)}, {"samples", a.samples}};
  o.samples = a.samples;
  return o;
}

int exit_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return kExitUsage;
    case ErrorKind::Data: return kExitData;
    case ErrorKind::Numerical:
    case ErrorKind::Internal: return kExitInternal;
  }
  return kExitInternal;
}

void print_error(const char* kind, const std::string& message) {
  std::cerr << Json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--system", c.system, "system file (JSON)");
  sub->add_option("--seed", c.seed, "random seed")->capture_default_str();
  sub->add_option("--threads", c.threads, "worker threads (0: machine parallelism)");
  sub->add_option("--csv", c.csv, "directory for CSV dumps");
  sub->add_option("--eta", c.eta, "activity tolerance override");
  sub->add_option("--zero-tol", c.zero_tol, "zero tolerance override");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Error-bound moduli, stability verdicts and Hoffman constants for convex inequality systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kLibraryVersion);

  Common common;
  LocalArgs la;
  GlobalArgs ga;
  HoffmanArgs ha;
  PerturbArgs pa;
  OracleArgs oa;
  ReproArgs ra;

  auto* local = app.add_subcommand("analyze-local", "local stability verdict and moduli at a boundary point");
  add_common(local, common);
  local->add_option("--point", la.point, "boundary point, comma separated")->required();
  local->add_option("--eps", la.eps, "perturbation size")->capture_default_str();
  local->add_option("--samples", la.samples, "samples per radius")->capture_default_str();
  local->add_option("--budget", la.budget, "perturbed systems evaluated by the witness search")->capture_default_str();

  auto* global = app.add_subcommand("analyze-global", "global stability verdict and moduli over a box");
  add_common(global, common);
  global->add_option("--box", ga.box, "lo,hi (broadcast) or lo1,hi1,...")->capture_default_str();
  global->add_option("--eps", ga.eps, "perturbation size")->capture_default_str();
  global->add_option("--samples", ga.samples, "modulus samples")->capture_default_str();
  global->add_option("--boundary-samples", ga.boundary_samples)->capture_default_str();
  global->add_option("--interior-samples", ga.interior_samples)->capture_default_str();
  global->add_option("--budget", ga.budget)->capture_default_str();

  auto* hoff = app.add_subcommand("hoffman", "subset minimax table and uniform Hoffman boundedness");
  add_common(hoff, common);
  hoff->add_option("--mode", ha.mode, "all|realizable")->capture_default_str();
  hoff->add_flag("--estimate,!--no-estimate", ha.estimate, "sample sigma over the box");
  hoff->add_option("--box", ha.box, "estimation box (default -5,5)");
  hoff->add_option("--samples", ha.samples)->capture_default_str();
  hoff->add_option("--trials", ha.trials, "perturbation trials")->capture_default_str();
  hoff->add_option("--eps", ha.eps, "perturbation size for trials")->capture_default_str();
  hoff->add_option("--cap", ha.cap, "largest |T| for --mode all")->capture_default_str();

  auto* pert = app.add_subcommand("perturb", "apply or search a linear perturbation and compare moduli");
  add_common(pert, common);
  pert->add_option("--point", pa.point)->required();
  pert->add_option("--eps", pa.eps)->capture_default_str();
  pert->add_option("--ustar", pa.ustar, "u*, comma separated; absent: adversarial search");
  pert->add_option("--budget", pa.budget)->capture_default_str();
  pert->add_option("--samples", pa.samples)->capture_default_str();

  auto* oracle = app.add_subcommand("oracle", "cross-check independent computation routes");
  add_common(oracle, common);
  oracle->add_option("--point", oa.point);
  oracle->add_option("--random", oa.random, "number of generated affine systems");
  oracle->add_option("--box", oa.box, "ratio/beta box (default -5,5)");
  oracle->add_option("--samples", oa.samples)->capture_default_str();
  oracle->add_option("--resolution", oa.resolution, "sphere search resolution")->capture_default_str();

  auto* repro = app.add_subcommand("repro", "bundled cases with reference values");
  add_common(repro, common);
  repro->add_option("case", ra.name, "example1|example2|remark31|remark32")->required();
  repro->add_option("--eps", ra.eps)->capture_default_str();
  repro->add_option("--samples", ra.samples)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (common.threads > 0) default_threads() = common.threads;
  const auto start = std::chrono::steady_clock::now();
  std::string command;
  try {
    Outcome o;
    if (local->parsed()) {
      command = "analyze-local";
      o = run_analyze_local(common, la);
    } else if (global->parsed()) {
      command = "analyze-global";
      o = run_analyze_global(common, ga);
    } else if (hoff->parsed()) {
      command = "hoffman";
      o = run_hoffman(common, ha);
    } else if (pert->parsed()) {
      command = "perturb";
      o = run_perturb(common, pa);
    } else if (oracle->parsed()) {
      command = "oracle";
      o = run_oracle(common, oa);
    } else {
      command = "repro";
      o = run_repro(common, ra);
    }
    Json options = common_json(common);
    options.update(o.options);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    const Json report{{"command", command},
                      {"options", options},
                      {"results", o.results},
                      {"provenance",
                       {{"library_version", kLibraryVersion}, {"wall_clock_ms", ms}, {"sample_counts", o.samples}}}};
    std::cout << report.dump(2) << "\n";
    return o.exit_code;
  } catch (const Error& e) {
    print_error(e.kind() == ErrorKind::Usage       ? "usage"
                : e.kind() == ErrorKind::Data      ? "data"
                : e.kind() == ErrorKind::Numerical ? "numerical"
                                                   : "internal",
                e.what());
    return exit_for(e.kind());
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kExitInternal;
  }
}
