#pragma once

// System file format (JSON):
//   { "dimension": n, "kind": "linear" | "max_convex" | "parametric_linear",
//     "constraints": [ {"a": [...], "b": r}, ... ]                  (linear)
//     "components":  [ {"type": "affine", "a": [...], "b": r},
//                      {"type": "exp_affine", "a": [...], "b": r, "c": r},
//                      {"type": "quadratic", "Q": [[...]], "q": [...], "r": r} ]
//     "parameter":   {"interval": [lo, hi], "grid": N,
//                     "a_coeffs": [[...] per coordinate], "b_coeffs": [...]}
//     "perturbation": {"u_star": [...], "epsilon": e, "anchor": [...]}   (optional)
//     "name": "..."                                                      (optional) }
// Unknown fields are rejected.

#include "ebstab/model.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace ebstab {

using Json = nlohmann::json;

namespace detail {

inline void reject_unknown(const Json& obj, const std::set<std::string>& allowed, const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw Error(ErrorKind::Data, "unknown field '" + it.key() + "'", path);
}

inline const Json& field(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw Error(ErrorKind::Data, "expected an object", path);
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorKind::Data, std::string("missing field '") + key + "'", path);
  return *it;
}

inline double read_real(const Json& j, const std::string& path) {
  if (!j.is_number()) throw Error(ErrorKind::Data, "expected a number", path);
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw Error(ErrorKind::Data, "non-finite number", path);
  return v;
}

inline std::vector<double> read_reals(const Json& j, const std::string& path) {
  if (!j.is_array()) throw Error(ErrorKind::Data, "expected an array of numbers", path);
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(read_real(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline Vector read_vector(const Json& j, int dim, const std::string& path) {
  const auto v = read_reals(j, path);
  if (static_cast<int>(v.size()) != dim)
    throw Error(ErrorKind::Data,
                "dimension mismatch (got " + std::to_string(v.size()) + ", expected " + std::to_string(dim) + ")", path);
  return Eigen::Map<const Vector>(v.data(), dim);
}

inline ComponentFunction read_component(const Json& j, int dim, const std::string& path) {
  if (!j.is_object()) throw Error(ErrorKind::Data, "expected an object", path);
  const Json& type = field(j, "type", path);
  if (!type.is_string()) throw Error(ErrorKind::Data, "type must be a string", path + ".type");
  const std::string t = type.get<std::string>();
  if (t == "affine") {
    reject_unknown(j, {"type", "a", "b"}, path);
    return Affine{read_vector(field(j, "a", path), dim, path + ".a"), read_real(field(j, "b", path), path + ".b")};
  }
  if (t == "exp_affine") {
    reject_unknown(j, {"type", "a", "b", "c"}, path);
    return ExpAffine{read_vector(field(j, "a", path), dim, path + ".a"), read_real(field(j, "b", path), path + ".b"),
                     read_real(field(j, "c", path), path + ".c")};
  }
  if (t == "quadratic") {
    reject_unknown(j, {"type", "Q", "q", "r"}, path);
    const Json& qj = field(j, "Q", path);
    if (!qj.is_array() || static_cast<int>(qj.size()) != dim)
      throw Error(ErrorKind::Data, "dimension mismatch: Q must have n rows", path + ".Q");
    Matrix Q(dim, dim);
    for (int r = 0; r < dim; ++r)
      Q.row(r) = read_vector(qj[static_cast<std::size_t>(r)], dim, path + ".Q[" + std::to_string(r) + "]").transpose();
    return QuadraticConvex{Q, read_vector(field(j, "q", path), dim, path + ".q"),
                           read_real(field(j, "r", path), path + ".r")};
  }
  throw Error(ErrorKind::Data, "unknown component type '" + t + "'", path + ".type");
}

}  // namespace detail

/// Parses and validates a system document. Errors carry the offending path.
inline System parse_system(const Json& doc) {
  using namespace detail;
  if (!doc.is_object()) throw Error(ErrorKind::Data, "document must be an object", "$");
  const Json& dj = field(doc, "dimension", "$");
  if (!dj.is_number_integer() || dj.get<long long>() < 1)
    throw Error(ErrorKind::Data, "dimension must be a positive integer", "dimension");
  const int dim = dj.get<int>();
  const Json& kj = field(doc, "kind", "$");
  if (!kj.is_string()) throw Error(ErrorKind::Data, "kind must be a string", "kind");
  const std::string kind = kj.get<std::string>();

  std::vector<PerturbationSpec> perts;
  if (auto it = doc.find("perturbation"); it != doc.end()) {
    reject_unknown(*it, {"u_star", "epsilon", "anchor"}, "perturbation");
    perts.push_back({read_vector(field(*it, "u_star", "perturbation"), dim, "perturbation.u_star"),
                     read_real(field(*it, "epsilon", "perturbation"), "perturbation.epsilon"),
                     read_vector(field(*it, "anchor", "perturbation"), dim, "perturbation.anchor")});
  }
  std::string name;
  if (auto it = doc.find("name"); it != doc.end()) {
    if (!it->is_string()) throw Error(ErrorKind::Data, "name must be a string", "name");
    name = it->get<std::string>();
  }

  if (kind == "linear") {
    reject_unknown(doc, {"dimension", "kind", "constraints", "perturbation", "name"}, "$");
    const Json& cj = field(doc, "constraints", "$");
    if (!cj.is_array()) throw Error(ErrorKind::Data, "constraints must be an array", "constraints");
    if (cj.empty()) throw Error(ErrorKind::Data, "empty component list", "constraints");
    std::vector<ComponentFunction> comps;
    for (std::size_t i = 0; i < cj.size(); ++i) {
      const std::string path = "constraints[" + std::to_string(i) + "]";
      if (!cj[i].is_object()) throw Error(ErrorKind::Data, "expected an object", path);
      reject_unknown(cj[i], {"a", "b"}, path);
      comps.emplace_back(Affine{read_vector(field(cj[i], "a", path), dim, path + ".a"),
                                read_real(field(cj[i], "b", path), path + ".b")});
    }
    auto labels = IndexSet::finite(comps.size());
    return System(dim, std::move(labels), std::move(comps), std::move(perts), std::nullopt, name);
  }
  if (kind == "max_convex") {
    reject_unknown(doc, {"dimension", "kind", "components", "perturbation", "name"}, "$");
    const Json& cj = field(doc, "components", "$");
    if (!cj.is_array()) throw Error(ErrorKind::Data, "components must be an array", "components");
    if (cj.empty()) throw Error(ErrorKind::Data, "empty component list", "components");
    std::vector<ComponentFunction> comps;
    for (std::size_t i = 0; i < cj.size(); ++i)
      comps.push_back(read_component(cj[i], dim, "components[" + std::to_string(i) + "]"));
    auto labels = IndexSet::finite(comps.size());
    return System(dim, std::move(labels), std::move(comps), std::move(perts), std::nullopt, name);
  }
  if (kind == "parametric_linear") {
    reject_unknown(doc, {"dimension", "kind", "parameter", "perturbation", "name"}, "$");
    const Json& pj = field(doc, "parameter", "$");
    reject_unknown(pj, {"interval", "grid", "a_coeffs", "b_coeffs"}, "parameter");
    const auto interval = read_reals(field(pj, "interval", "parameter"), "parameter.interval");
    if (interval.size() != 2) throw Error(ErrorKind::Data, "interval must be [lo, hi]", "parameter.interval");
    const Json& gj = field(pj, "grid", "parameter");
    if (!gj.is_number_integer() || gj.get<long long>() < 1)
      throw Error(ErrorKind::Data, "grid must be a positive integer", "parameter.grid");
    const Json& aj = field(pj, "a_coeffs", "parameter");
    if (!aj.is_array())
      throw Error(ErrorKind::Data, "malformed polynomial coefficients: expected list of lists", "parameter.a_coeffs");
    ParametricLinearSource src;
    for (std::size_t i = 0; i < aj.size(); ++i)
      src.a_coeffs.push_back(read_reals(aj[i], "parameter.a_coeffs[" + std::to_string(i) + "]"));
    src.b_coeffs = read_reals(field(pj, "b_coeffs", "parameter"), "parameter.b_coeffs");
    GridOnInterval grid{interval[0], interval[1], gj.get<int>()};
    System base = expand_parametric(dim, grid, src, name);
    if (perts.empty()) return base;
    return System(dim, base.index_set(), base.components(), std::move(perts), src, name);
  }
  throw Error(ErrorKind::Data, "unknown kind '" + kind + "'", "kind");
}

inline System parse_system_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::Data, std::string("malformed document: ") + e.what(), "$");
  }
  return parse_system(doc);
}

inline System load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Data, "cannot open system file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_system_text(ss.str());
}

inline Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

/// Emits the document form; parametric systems keep their polynomial source.
inline Json emit_system(const System& sys) {
  Json doc;
  doc["dimension"] = sys.dimension();
  if (!sys.name().empty()) doc["name"] = sys.name();
  const auto& src = sys.parametric_source();
  const auto* grid = std::get_if<GridOnInterval>(&sys.index_set().origin);
  if (src && grid) {
    doc["kind"] = "parametric_linear";
    doc["parameter"] = {{"interval", {grid->lower, grid->upper}},
                        {"grid", grid->points},
                        {"a_coeffs", src->a_coeffs},
                        {"b_coeffs", src->b_coeffs}};
  } else if (sys.is_affine()) {
    doc["kind"] = "linear";
    Json cs = Json::array();
    for (const auto& c : sys.components()) {
      const auto& f = std::get<Affine>(c);
      cs.push_back({{"a", vector_json(f.a)}, {"b", f.b}});
    }
    doc["constraints"] = cs;
  } else {
    doc["kind"] = "max_convex";
    Json cs = Json::array();
    for (const auto& c : sys.components()) {
      std::visit(
          [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Affine>) {
              cs.push_back({{"type", "affine"}, {"a", vector_json(f.a)}, {"b", f.b}});
            } else if constexpr (std::is_same_v<T, ExpAffine>) {
              cs.push_back({{"type", "exp_affine"}, {"a", vector_json(f.a)}, {"b", f.b}, {"c", f.c}});
            } else {
              Json Q = Json::array();
              for (int r = 0; r < f.Q.rows(); ++r) Q.push_back(vector_json(f.Q.row(r).transpose()));
              cs.push_back({{"type", "quadratic"}, {"Q", Q}, {"q", vector_json(f.q)}, {"r", f.r}});
            }
          },
          c);
    }
    doc["components"] = cs;
  }
  if (sys.perturbations().size() > 1)
    throw Error(ErrorKind::Usage, "the file format holds at most one perturbation");
  if (!sys.perturbations().empty()) {
    const auto& p = sys.perturbations().front();
    doc["perturbation"] = {{"u_star", vector_json(p.u_star)}, {"epsilon", p.epsilon}, {"anchor", vector_json(p.anchor)}};
  }
  return doc;
}

}  // namespace ebstab
