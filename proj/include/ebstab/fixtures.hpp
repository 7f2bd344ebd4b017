#pragma once

// Bundled systems used by the `repro` command. The same documents ship as
// files under data/.

#include "ebstab/model_io.hpp"

namespace ebstab::fixtures {

/// Three half-planes bounding a triangle with vertices (-2,-2), (-1/3,4/3), (4/3,-1/3).
inline constexpr const char* kExample1 = R"({
  "name": "example1",
  "dimension": 2,
  "kind": "linear",
  "constraints": [
    {"a": [1, 1], "b": 1},
    {"a": [-2, 1], "b": 2},
    {"a": [1, -2], "b": 2}
  ]
})";

/// x1 + x2 <= 0 and -x1 - x2 <= 0: the solution set is a line.
inline constexpr const char* kExample2 = R"({
  "name": "example2",
  "dimension": 2,
  "kind": "linear",
  "constraints": [
    {"a": [1, 1], "b": 0},
    {"a": [-1, -1], "b": 0}
  ]
})";

/// F identically zero on the real line.
inline constexpr const char* kRemark31 = R"({
  "name": "remark31",
  "dimension": 1,
  "kind": "linear",
  "constraints": [
    {"a": [0], "b": 0}
  ]
})";

/// g(x) = exp(x) - 1 - 0.1 x.
inline constexpr const char* kRemark32 = R"({
  "name": "remark32",
  "dimension": 1,
  "kind": "max_convex",
  "components": [
    {"type": "exp_affine", "a": [1], "b": 0, "c": 1}
  ],
  "perturbation": {"u_star": [-1], "epsilon": 0.1, "anchor": [0]}
})";

/// f(x) = exp(x) - 1.
inline constexpr const char* kExpBase = R"({
  "name": "exp_base",
  "dimension": 1,
  "kind": "max_convex",
  "components": [
    {"type": "exp_affine", "a": [1], "b": 0, "c": 1}
  ]
})";

inline System example1() { return parse_system_text(kExample1); }
inline System example2() { return parse_system_text(kExample2); }
inline System remark31() { return parse_system_text(kRemark31); }
inline System remark32() { return parse_system_text(kRemark32); }
inline System exp_base() { return parse_system_text(kExpBase); }

}  // namespace ebstab::fixtures
