#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seu/asymptotics.hpp"
#include "seu/design.hpp"
#include "seu/montecarlo.hpp"
#include "seu/response.hpp"

namespace seu {

/// Parsed key-value run configuration. One design, one model, run
/// parameters, output controls.
struct RunConfig {
  std::string design_id;
  int arms = 2;
  std::string rho_expr;  // for the generic design

  std::string model_kind = "bernoulli";
  Vec p;          // bernoulli
  Vec mean, sd;   // normal
  std::vector<ArmSupport> finite_arms;

  std::int64_t horizon = 2000;
  std::int64_t replications = 1;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> checkpoints;
  Vec initial_composition;  // empty -> ones
  double clamp_epsilon = 1e-3;
  std::int64_t sigma_mc_samples = 1'000'000;
  int threads = 0;
  std::string mixed_term = "consistent";
  double quad_tol = 1e-10;

  std::string format = "csv";  // csv | json
  std::string out_dir = ".";
};

/// Parses the documented key=value schema. On failure returns an empty
/// optional-like flag via `errors`, each entry carrying its line number.
RunConfig parse_config(const std::string& text, std::vector<std::string>& errors);
RunConfig parse_config_file(const std::string& path, std::vector<std::string>& errors);

ResponseModel build_model(const RunConfig& cfg);
Design build_design(const RunConfig& cfg, const ResponseModel& model);
BatchConfig build_batch(const RunConfig& cfg);
ReportOptions build_report_options(const RunConfig& cfg);

}  // namespace seu
