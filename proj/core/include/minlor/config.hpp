#ifndef MINLOR_CONFIG_HPP_
#define MINLOR_CONFIG_HPP_

#include <string>
#include <vector>

#include "minlor/types.hpp"

namespace minlor {

enum class StudyMode { Single, Convergence, Stability, Backward };

// Flat, strictly validated key-value schema with [section] headers. Unknown
// sections or keys are errors; every field has the default shown here.
struct RunConfig {
  // [metric]
  std::string metric_type = "minkowski";  // minkowski | flrw-constant |
                                          // flrw-exponential | flrw-polynomial
  int dimension = 3;
  double metric_param = 1.0;  // a0 / H / eps per metric_type

  // [curve]
  std::string curve_type = "circle";  // circle | ellipse | file
  double radius = 1.0;
  double semi_a = 1.0;
  double semi_b = 1.0;
  double k1_time = 1.0;
  std::string curve_file;
  bool project_orthogonal = false;  // Gram-Schmidt preprocessing, off by default
  bool conformalize = true;

  // [solver]
  int n = 256;  // power of two >= 16
  double t_target = 1.0;
  double tol = 1e-10;
  int max_iter = 50;
  double delta = 0.0;  // 0 = auto
  double tol_null = 1e-10;
  double tol_causal = 1e-8;

  // [run]
  StudyMode mode = StudyMode::Single;
  int levels = 3;                         // convergence mode
  std::vector<double> epsilons = {1e-3};  // stability mode
  std::string output_dir = "out";
  std::string surface_format = "tsv";  // tsv | json

  void check() const;  // throws ConfigError on invariant violations
};

// Parses the file, applies overrides of the form "section.key=value" (same
// validation as file entries), honors MINLOR_OUTPUT_DIR.
RunConfig parse_config(const std::string& path,
                       const std::vector<std::string>& overrides = {});
RunConfig config_from_overrides(const std::vector<std::string>& overrides);

// Canonical serialization (stable ordering) echoed into reports.
std::string echo_config(const RunConfig& c);

}  // namespace minlor

#endif  // MINLOR_CONFIG_HPP_
