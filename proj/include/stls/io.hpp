#pragma once

// JSON instance descriptors and solution output.
//
// An instance file is either {"structure": <descriptor>, "theta": [...],
// "weight": ...} or a descriptor object carrying "theta" (and "weight")
// directly. Descriptors:
//   {"type":"hankel","m":3,"n":5}
//   {"type":"sylvester","n1":6,"n2":5,"d":2}
//   {"type":"fractional","a":[[...]],"b":[[...]]}
//   {"type":"generic","base":[[...]],"directions":[[[...]]]}
//   {"type":"triangulation","cameras":[[[...]]]}      (3x4 each)
//   {"type":"resectioning","points":[[...]]}          (4-vectors)
// Weights: {"kind":"identity"} | {"kind":"dense","matrix":[[...]]} |
// {"kind":"mask","observed":[1,0,...]}. Matrices are row-major.

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "stls/baseline.hpp"
#include "stls/extract.hpp"
#include "stls/structure.hpp"

namespace stls {

using Json = nlohmann::json;

namespace io_detail {

inline const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw std::invalid_argument(std::string("missing field '") + key + "'");
  return j.at(key);
}

inline int get_int(const Json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_number_integer()) throw std::invalid_argument(std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

inline Vector to_vector(const Json& j, const char* what) {
  if (!j.is_array()) throw std::invalid_argument(std::string(what) + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw std::invalid_argument(std::string(what) + " must contain numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline Matrix to_matrix(const Json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw std::invalid_argument(std::string(what) + " must be a non-empty array of rows");
  }
  const auto rows = j.size();
  const auto cols = j[0].size();
  Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw std::invalid_argument(std::string(what) + " rows differ in length");
    M.row(static_cast<Eigen::Index>(r)) = to_vector(j[r], what).transpose();
  }
  return M;
}

inline std::vector<Vector> to_vectors(const Json& j, const char* what) {
  if (!j.is_array()) throw std::invalid_argument(std::string(what) + " must be an array");
  std::vector<Vector> out;
  for (const auto& e : j) out.push_back(to_vector(e, what));
  return out;
}

}  // namespace io_detail

inline AffineStructure structure_from_json(const Json& j) {
  using namespace io_detail;
  const auto& t = field(j, "type");
  if (!t.is_string()) throw std::invalid_argument("field 'type' must be a string");
  const auto type = t.get<std::string>();
  if (type == "hankel") return hankel_structure(get_int(j, "m"), get_int(j, "n"));
  if (type == "sylvester") return sylvester_structure(get_int(j, "n1"), get_int(j, "n2"), get_int(j, "d"));
  if (type == "fractional") return fractional_structure(to_vectors(field(j, "a"), "a"), to_vectors(field(j, "b"), "b"));
  if (type == "generic") {
    std::vector<Matrix> dirs;
    const auto& d = field(j, "directions");
    if (!d.is_array()) throw std::invalid_argument("directions must be an array of matrices");
    for (const auto& e : d) dirs.push_back(to_matrix(e, "directions"));
    return AffineStructure(to_matrix(field(j, "base"), "base"), std::move(dirs));
  }
  if (type == "triangulation") {
    std::vector<Matrix> cams;
    for (const auto& e : field(j, "cameras")) cams.push_back(to_matrix(e, "cameras"));
    return triangulation_structure(cams);
  }
  if (type == "resectioning") {
    std::vector<Eigen::Vector4d> pts;
    for (const auto& v : to_vectors(field(j, "points"), "points")) {
      if (v.size() != 4) throw std::invalid_argument("points must be 4-vectors");
      pts.emplace_back(v);
    }
    return resectioning_structure(pts);
  }
  throw std::invalid_argument("unknown structure type '" + type + "'");
}

inline WeightSpec weight_from_json(const Json& j, int k) {
  using namespace io_detail;
  if (j.is_null()) return WeightSpec::identity(k);
  const auto& kind = field(j, "kind");
  if (!kind.is_string()) throw std::invalid_argument("weight kind must be a string");
  const auto name = kind.get<std::string>();
  if (name == "identity") return WeightSpec::identity(k);
  if (name == "dense") return WeightSpec::dense(to_matrix(field(j, "matrix"), "weight matrix"));
  if (name == "mask") return WeightSpec::mask(to_vector(field(j, "observed"), "observed"));
  throw std::invalid_argument("unknown weight kind '" + name + "'");
}

inline ProblemInstance instance_from_json(const Json& j) {
  using namespace io_detail;
  if (!j.is_object()) throw std::invalid_argument("instance must be a JSON object");
  auto s = structure_from_json(j.contains("structure") ? j.at("structure") : j);
  const Vector theta = to_vector(field(j, "theta"), "theta");
  const auto w = weight_from_json(j.contains("weight") ? j.at("weight") : Json(), s.num_params());
  return ProblemInstance(std::move(s), theta, w);
}

inline Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json to_json(const StlsSolution& s) {
  return Json{{"u", to_json(s.u_star)},
              {"objective", s.objective},
              {"rank_one_ratio", s.rank_one_ratio},
              {"certified", s.certified},
              {"gamma", s.gamma},
              {"exact", s.exact()},
              {"certificate_gap", s.certificate_gap},
              {"rank_deficiency_residual", s.rank_deficiency_residual},
              {"status", to_string(s.status)}};
}

/// Baseline result in the same layout; never certified.
inline Json to_json(const LocalResult& r, const ProblemInstance& instance) {
  return Json{{"u", to_json(r.u)},
              {"objective", r.objective},
              {"rank_one_ratio", nullptr},
              {"certified", false},
              {"gamma", nullptr},
              {"converged", r.converged},
              {"rank_deficiency_residual", rank_deficiency_residual(instance.structure.evaluate(r.u))}};
}

}  // namespace stls
