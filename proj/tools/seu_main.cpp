#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seu/config.hpp"
#include "seu/errors.hpp"
#include "seu/montecarlo.hpp"
#include "seu/urn.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CliOverrides {
  std::string out;
  std::string format;
  std::int64_t replications = -1;
  std::int64_t horizon = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

seu::RunConfig load_config(const std::string& path, const CliOverrides& ov) {
  std::vector<std::string> errors;
  seu::RunConfig cfg = seu::parse_config_file(path, errors);
  if (!errors.empty()) {
    std::ostringstream os;
    os << "config errors in " << path << ":";
    for (const auto& e : errors) os << "\n  " << e;
    throw seu::ConfigError(os.str());
  }
  if (!ov.out.empty()) cfg.out_dir = ov.out;
  if (!ov.format.empty()) cfg.format = ov.format;
  if (ov.replications >= 0) cfg.replications = ov.replications;
  if (ov.horizon >= 0) cfg.horizon = ov.horizon;
  if (ov.seed_set) cfg.seed = ov.seed;
  return cfg;
}

std::ofstream open_output(const seu::RunConfig& cfg, const std::string& name) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.out_dir);
  if (!fs::exists(dir) || !fs::is_directory(dir))
    throw seu::SeuError("output directory does not exist: " + cfg.out_dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw seu::SeuError("cannot open output file: " + (dir / name).string());
  return out;
}

int cmd_simulate(const seu::RunConfig& cfg) {
  seu::BatchConfig batch = seu::build_batch(cfg);
  if (cfg.replications == 1) {
    seu::RngStream rng(cfg.seed, 0);
    const seu::Vec* y0 =
        batch.initial_composition.empty() ? nullptr : &batch.initial_composition;
    auto snaps = seu::run_trial(batch.design, batch.model, cfg.horizon, rng, cfg.checkpoints,
                                nullptr, y0);
    auto out = open_output(cfg, "trajectory.csv");
    seu::write_trajectory_csv(out, snaps);
    const auto& last = snaps.back();
    std::cout << "single trial: design " << batch.design.id << ", n = " << last.stage << "\n";
    for (std::size_t k = 0; k < last.Y.size(); ++k)
      std::cout << "  arm " << (k + 1) << ": N/n = "
                << static_cast<double>(last.N[k]) / std::max<double>(1.0, last.stage)
                << ", theta_hat = " << last.theta_hat[k] << "\n";
    return kExitOk;
  }

  const seu::EnsembleStats stats = seu::run_batch(batch);
  seu::AsymptoticReport report = seu::full_report(batch.design, batch.model,
                                                  seu::build_report_options(cfg));
  if (cfg.format == "json") {
    auto out = open_output(cfg, "ensemble.json");
    out << seu::ensemble_to_json(stats);
  } else {
    auto out = open_output(cfg, "ensemble.csv");
    seu::write_ensemble_csv(out, stats, &report);
  }
  const auto& term = stats.terminal();
  std::cout << "ensemble: design " << batch.design.id << ", n = " << term.stage
            << ", R = " << term.replications << "\n";
  std::cout << "  arm   v_predicted   mean(N/n)\n";
  for (std::size_t k = 0; k < stats.predicted_v.size(); ++k)
    std::cout << "  " << (k + 1) << "     " << stats.predicted_v[k] << "      "
              << term.mean_N_over_n[k] << "\n";
  return kExitOk;
}

int cmd_asymptotics(const seu::RunConfig& cfg) {
  seu::ResponseModel model = seu::build_model(cfg);
  seu::Design design = seu::build_design(cfg, model);
  const seu::AsymptoticReport report =
      seu::full_report(design, model, seu::build_report_options(cfg));
  const std::string json = seu::report_to_json(report);
  auto out = open_output(cfg, "report.json");
  out << json;
  std::cout << json;
  return kExitOk;
}

int cmd_compare(const std::vector<std::string>& config_paths, const CliOverrides& ov) {
  if (config_paths.size() < 2)
    throw seu::ConfigError("compare needs at least two --config files");
  std::vector<seu::BatchConfig> batches;
  seu::RunConfig first;
  for (std::size_t i = 0; i < config_paths.size(); ++i) {
    seu::RunConfig cfg = load_config(config_paths[i], ov);
    if (i == 0) first = cfg;
    batches.push_back(seu::build_batch(cfg));
  }
  std::vector<seu::CompareRow> rows;
  try {
    rows = seu::compare_designs(batches, seu::build_report_options(first));
  } catch (const seu::InvalidArgument& e) {
    throw seu::ConfigError(e.what());
  }
  auto out = open_output(first, "compare.csv");
  seu::write_compare_csv(out, rows);
  seu::write_compare_text(std::cout, rows);
  return kExitOk;
}

int cmd_validate(const seu::RunConfig& cfg) {
  seu::ResponseModel model = seu::build_model(cfg);
  seu::Design design = seu::build_design(cfg, model);
  const seu::ValidationReport rep = seu::validate_design(design, model);
  std::cout << "design " << design.id << " vs model " << model.describe() << "\n";
  for (const auto& c : rep.checks) {
    std::cout << "  [" << (c.pass ? "PASS" : (c.informational ? "info" : "FAIL")) << "] "
              << c.name;
    if (!c.detail.empty()) std::cout << " (" << c.detail << ")";
    std::cout << "\n";
  }
  std::cout << "  lambda = " << rep.lambda << ", lln_valid = " << (rep.lln_valid ? "yes" : "no")
            << ", clt_valid = " << (rep.clt_valid ? "yes" : "no") << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sequential estimation-adjusted urn designs: simulation and asymptotics"};
  app.require_subcommand(1);

  std::vector<std::string> config_paths;
  CliOverrides ov;

  auto add_common = [&](CLI::App* sub, bool multi) {
    auto* opt = sub->add_option("--config", config_paths, "run configuration file(s)");
    opt->required();
    if (!multi) opt->expected(1);
    sub->add_option("--out", ov.out, "output directory (must exist)");
    sub->add_option("--format", ov.format, "csv | json")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--replications", ov.replications, "override replication count");
    sub->add_option("--horizon", ov.horizon, "override trial horizon");
    sub->add_option("--seed", ov.seed, "override master seed")
        ->each([&](const std::string&) { ov.seed_set = true; });
  };

  auto* sim = app.add_subcommand("simulate", "run one trial or a replicated batch");
  add_common(sim, false);
  auto* asy = app.add_subcommand("asymptotics", "emit the limit-theory report");
  add_common(asy, false);
  auto* cmp = app.add_subcommand("compare", "side-by-side design comparison");
  add_common(cmp, true);
  auto* val = app.add_subcommand("validate", "check design/model assumptions");
  add_common(val, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? kExitConfig : kExitOk;
  }

  try {
    if (sim->parsed()) return cmd_simulate(load_config(config_paths.front(), ov));
    if (asy->parsed()) return cmd_asymptotics(load_config(config_paths.front(), ov));
    if (cmp->parsed()) return cmd_compare(config_paths, ov);
    if (val->parsed()) return cmd_validate(load_config(config_paths.front(), ov));
  } catch (const seu::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
