#pragma once

// JSON and CSV renderings of analysis results. Infinities are written as the
// strings "inf" / "-inf" in both formats.

#include "ebstab/hoffman.hpp"
#include "ebstab/model_io.hpp"

#include <filesystem>
#include <iomanip>

namespace ebstab {

inline Json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline Json vec(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

inline Json labels_json(const System& sys, const std::vector<std::size_t>& idx) {
  Json a = Json::array();
  for (auto i : idx) a.push_back(sys.label(i));
  return a;
}

inline Json to_json(const MinimaxResult& r) {
  Json j{{"value", num(r.value)},
         {"direction", vec(r.direction)},
         {"branch", to_string(r.branch)},
         {"zero_tolerance", num(r.zero_tolerance)},
         {"min_norm_distance", num(r.min_norm_distance)},
         {"wolfe_residual", num(r.wolfe_residual)}};
  if (const auto* w = std::get_if<Vector>(&r.certificate)) {
    j["certificate"] = {{"kind", "min_norm_point"}, {"w", vec(*w)}};
  } else if (const auto* f = std::get_if<Facet>(&r.certificate)) {
    j["certificate"] = {{"kind", "facet"}, {"normal", vec(f->normal)}, {"offset", num(f->offset)}};
  } else {
    j["certificate"] = {{"kind", "sphere_grid"}, {"resolution", std::get<int>(r.certificate)}};
  }
  return j;
}

inline Json to_json(const ModulusEstimate& e) {
  Json j{{"scope", to_string(e.scope)},
         {"method", to_string(e.method)},
         {"value", num(e.value)},
         {"samples_used", e.samples_used},
         {"infeasible_samples", e.infeasible_samples},
         {"seed", e.seed},
         {"distance_exact", e.distance_exact},
         {"feasibility", to_string(e.feasibility)}};
  if (e.anchor) j["anchor"] = vec(*e.anchor);
  if (e.scope == ModulusScope::Local) {
    Json rs = Json::array();
    for (double r : e.radius_schedule) rs.push_back(num(r));
    j["radius_schedule"] = rs;
    j["radius_used"] = num(e.radius_used);
  }
  j["argmin"] = e.argmin ? vec(*e.argmin) : Json(nullptr);
  return j;
}

inline Json to_json(const PerturbationSpec& p) {
  return {{"u_star", vec(p.u_star)}, {"epsilon", num(p.epsilon)}, {"anchor", vec(p.anchor)}};
}

inline Json to_json(const AdversarialResult& a) {
  return {{"perturbation", to_json(a.spec)},
          {"er_estimate", num(a.er_estimate)},
          {"evaluated", a.evaluated},
          {"scope", to_string(a.scope)}};
}

inline Json to_json(const System& sys, const StabilityVerdict& v) {
  Json j{{"scope", to_string(v.scope)},
         {"classification", to_string(v.classification)},
         {"epsilon", num(v.epsilon)},
         {"zero_tolerance", num(v.zero_tolerance)},
         {"feasibility", to_string(v.feasibility)}};
  if (v.scope == ModulusScope::Local) {
    j["gamma"] = num(v.gamma);
    j["direction"] = vec(v.direction);
    j["anchor"] = v.anchor ? vec(*v.anchor) : Json(nullptr);
  } else {
    j["tau"] = num(v.gamma);
    j["tau_point"] = v.tau_point ? vec(*v.tau_point) : Json(nullptr);
    j["boundary_points"] = v.boundary_points;
  }
  j["active"] = labels_json(sys, v.active);
  j["guaranteed_modulus"] = v.guaranteed_modulus ? num(*v.guaranteed_modulus) : Json(nullptr);
  if (v.witness) {
    Json w = to_json(*v.witness);
    const double bound = v.scope == ModulusScope::Local ? 5.0 * v.epsilon : 4.0 * v.epsilon;
    w["replay_bound"] = num(bound);
    w["within_bound"] = v.witness->er_estimate <= bound + 0.05;
    j["witness"] = w;
  } else {
    j["witness"] = nullptr;
  }
  if (v.sequence_check) {
    Json recs = Json::array();
    for (const auto& r : v.sequence_check->records)
      recs.push_back({{"threshold", num(r.threshold)},
                      {"qualifying", r.qualifying},
                      {"min_abs_gamma", r.min_abs_gamma ? num(*r.min_abs_gamma) : Json(nullptr)}});
    j["sequence_check"] = {{"records", recs}, {"passed", v.sequence_check->passed}};
  }
  return j;
}

inline Json to_json(const System& sys, const HoffmanReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.subset_table) {
    rows.push_back({{"subset", labels_json(sys, row.subset)},
                    {"theta", num(row.theta)},
                    {"direction", vec(row.direction)},
                    {"branch", to_string(row.branch)},
                    {"realizable", row.realizable ? Json(*row.realizable) : Json(nullptr)}});
  }
  Json trials = Json::array();
  for (const auto& t : r.perturbation_trials)
    trials.push_back({{"x_tilde", vec(t.x_tilde)},
                      {"u_tilde", vec(t.u_tilde)},
                      {"epsilon", num(t.epsilon)},
                      {"sigma", num(t.sigma)}});
  return {{"system_id", r.system_id},
          {"mode", to_string(r.mode)},
          {"subset_table", rows},
          {"tau", num(r.tau)},
          {"hoffman_lower_bound", num(r.hoffman_lower_bound)},
          {"realizable_tau", r.realizable_tau ? num(*r.realizable_tau) : Json(nullptr)},
          {"sampled_sigma", r.sampled_sigma ? num(*r.sampled_sigma) : Json(nullptr)},
          {"verdict", to_string(r.verdict)},
          {"zero_tolerance", num(r.zero_tolerance)},
          {"realizable_faces", static_cast<int>(r.faces.size())},
          {"perturbation_trials", trials}};
}

// ---------------------------------------------------------------------------
// CSV.

inline std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << v;
  return os.str();
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw Error(ErrorKind::Internal, "CSV row width mismatch");
    rows_.push_back(std::move(row));
  }

  std::string str() const {
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return os.str();
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Usage, "cannot write " + path.string());
    out << str();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string join_labels(const System& sys, const std::vector<std::size_t>& idx) {
  std::string s;
  for (std::size_t k = 0; k < idx.size(); ++k) s += (k ? " " : "") + sys.label(idx[k]);
  return s;
}

inline std::string join_vector(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? " " : "") + csv_number(v[i]);
  return s;
}

inline CsvTable subset_table_csv(const System& sys, const HoffmanReport& r) {
  CsvTable t({"subset", "theta", "direction", "branch", "realizable"});
  for (const auto& row : r.subset_table)
    t.add({join_labels(sys, row.subset), csv_number(row.theta), join_vector(row.direction), to_string(row.branch),
           row.realizable ? (*row.realizable ? "true" : "false") : ""});
  return t;
}

inline CsvTable trials_csv(const HoffmanReport& r) {
  CsvTable t({"x_tilde", "u_tilde", "epsilon", "sigma"});
  for (const auto& tr : r.perturbation_trials)
    t.add({join_vector(tr.x_tilde), join_vector(tr.u_tilde), csv_number(tr.epsilon), csv_number(tr.sigma)});
  return t;
}

inline CsvTable samples_csv(const ModulusEstimate& e) {
  CsvTable t({"index", "x", "f", "distance", "value", "refined"});
  for (const auto& s : e.trace)
    t.add({std::to_string(s.index), join_vector(s.x), csv_number(s.f), csv_number(s.distance), csv_number(s.value),
           s.refined ? "true" : "false"});
  return t;
}

inline CsvTable sequence_csv(const SequenceCheck& sc) {
  CsvTable t({"threshold", "qualifying", "min_abs_gamma"});
  for (const auto& r : sc.records)
    t.add({csv_number(r.threshold), std::to_string(r.qualifying),
           r.min_abs_gamma ? csv_number(*r.min_abs_gamma) : ""});
  return t;
}

}  // namespace ebstab
