#ifndef HOMDEF_CONFIG_HPP
#define HOMDEF_CONFIG_HPP

#include "homdef/study.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace homdef {

inline constexpr int kConfigVersion = 1;

struct ProbeSettings {
  double radius = 0.1;
  int trials = 8;
};

/// Fixed field for the defect decay study.
struct TestFieldSettings {
  std::string kind = "sine";  // sine | spike
  double exponent = 0.5;      // spike: |x - center|^exponent near the center
};

/// Parsed and validated experiment description.
struct ExperimentConfig {
  explicit ExperimentConfig(ProblemSpec p) : problem(std::move(p)) {}

  int version = kConfigVersion;
  ProblemSpec problem;
  std::optional<double> eps;
  std::vector<double> ladder;
  std::optional<FitWindow> fit_window;
  ProbeSettings probe;
  TestFieldSettings test_field;
  std::string output = "out";
  std::uint64_t seed = 1;
  int threads = 1;
  nlohmann::json source;
};

/// Throws ConfigError naming the offending key for malformed input.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// Max element diameter of the structured mesh the config describes.
double configured_mesh_diameter(const ProblemSpec& problem);

/// sin(pi (x - a) / L) products: smooth, zero on the boundary.
DiscreteField sine_test_field(std::shared_ptr<const DomainMesh> mesh);
/// sine_test_field times |x|^exponent: gradient singular at the origin for exponent < 1.
DiscreteField spike_test_field(std::shared_ptr<const DomainMesh> mesh, double exponent);

}  // namespace homdef

#endif  // HOMDEF_CONFIG_HPP
