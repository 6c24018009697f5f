#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nhdqpt/criticality.hpp"
#include "nhdqpt/topology.hpp"

namespace nhdqpt {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

// Malformed or inconsistent configuration. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical precondition violated on the grid. Maps to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  std::string family = "ssh";  // "ssh" or "lindblad_ssh"
  double t1 = 0;
  double t2 = 0;
  double gamma_pre = 0;
  double gamma_post = 0;
  double phi = kPi / 2;  // lindblad_ssh only
};

struct StateConfig {
  StateKind kind = StateKind::PureGround;
  double beta = 0;
  Formulation formulation = Formulation::NonBiorthogonal;
  cplx p_plus = 0;   // custom only
  cplx p_minus = 1;  // custom only
};

struct AnalysisConfig {
  Normalization normalization = Normalization::SelfNorm;
  int n_max = 5;
  double cusp_threshold = 20;
  int branch = 0;
};

struct OutputConfig {
  std::string directory = "dqpt_out";
  bool csv = true;
  bool json = true;
};

struct ScenarioConfig {
  ModelConfig model;
  StateConfig state;
  KGrid k_grid;
  TGrid t_grid;
  AnalysisConfig analysis;
  OutputConfig output;

  QuenchScenario build() const;
};

// Unknown keys, wrong types and missing required keys raise ConfigError
// naming the dotted key path.
ScenarioConfig parse_config(const nlohmann::json& doc);
ScenarioConfig load_config(const std::filesystem::path& path);

// Canonical form with every default written out; parse_config inverts it.
nlohmann::json to_json(const ScenarioConfig& config);

struct GridIssue {
  double k;
  std::string what;
};

// Exceptional points of the prequench model and gap closings or exceptional
// points of the postquench model on the k grid.
std::vector<GridIssue> scan_grid(const QuenchScenario& scenario);

struct MatchedCriticalTime {
  int n;
  double k;
  double t;
  std::optional<double> cusp_t;
};

struct RunArtifacts {
  AmplitudeSeries series;
  CriticalityResult criticality;
  std::vector<Cusp> cusps;
  std::vector<MatchedCriticalTime> critical_times;
  std::vector<FisherZero> fisher_zeros;
  std::vector<OrthogonalityVectors> orthogonality;
  std::optional<ChiralQuenchFlow> vector_flow;
  WindingReport windings;
  int pole_k = 0;
};

// Full pipeline without I/O. Throws NumericalError when scan_grid finds issues.
RunArtifacts run_scenario(const ScenarioConfig& config, int threads = 0);

// Shortest decimal string that reads back to the same double.
std::string format_double(double value);

// Writes the enabled artifacts into `dir`; returns the files written.
std::vector<std::filesystem::path> write_artifacts(const ScenarioConfig& config,
                                                   const RunArtifacts& artifacts,
                                                   const std::filesystem::path& dir);

nlohmann::json summary_json(const ScenarioConfig& config, const RunArtifacts& artifacts);

// Subcommand entry points returning the process exit code.
int run_command(const std::filesystem::path& config_path,
                const std::optional<std::filesystem::path>& out_dir, int threads,
                std::ostream& out, std::ostream& err);
int validate_command(const std::filesystem::path& config_path, std::ostream& out,
                     std::ostream& err);

}  // namespace nhdqpt
