#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "seu/asymptotics.hpp"
#include "seu/config.hpp"
#include "seu/errors.hpp"
#include "seu/montecarlo.hpp"
#include "seu/rng.hpp"

using namespace seu;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("seu_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int run_cli(const std::string& args, const fs::path& capture) {
  const std::string cmd =
      std::string(SEU_CLI_PATH) + " " + args + " >" + capture.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const char* kExample3Config =
    "design = rpw-target\n"
    "model = bernoulli\n"
    "p = 0.7, 0.5\n"
    "horizon = 200\n"
    "replications = 1\n"
    "seed = 42\n"
    "checkpoints = 50, 100\n";

}  // namespace

TEST_CASE("minimal config picks up the documented defaults") {
  std::vector<std::string> errors;
  const RunConfig cfg = parse_config("design = rpw-target\nmodel = bernoulli\np = 0.7, 0.5\n", errors);
  REQUIRE(errors.empty());
  CHECK(cfg.clamp_epsilon == doctest::Approx(1e-3));
  CHECK(cfg.initial_composition.empty());  // defaults to all ones downstream
  CHECK(cfg.format == "csv");
  CHECK(cfg.sigma_mc_samples == 1'000'000);

  const BatchConfig batch = build_batch(cfg);
  CHECK(batch.design.id == "rpw-target");
  CHECK(batch.design.clamp_epsilon == doctest::Approx(1e-3));
  CHECK(batch.initial_composition.empty());
}

TEST_CASE("config errors carry line numbers and field names") {
  std::vector<std::string> errors;
  parse_config("design = rpw-target\nmodel = bernoulli\np = 1.2, 0.5\n", errors);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].find("line 3") != std::string::npos);
  CHECK(errors[0].find("'p'") != std::string::npos);

  errors.clear();
  parse_config("design = nosuch\nmodel = bernoulli\np = 0.5, 0.5\nbogus_key = 1\n", errors);
  CHECK(errors.size() == 2);

  errors.clear();
  parse_config("design = generic\nrho = sqrt(x1, sqrt(x2)\nmodel = bernoulli\np = 0.5, 0.4\n",
               errors);
  REQUIRE(!errors.empty());
  CHECK(errors[0].find("rho expression") != std::string::npos);
}

TEST_CASE("generic design from an expression aliases the bespoke one") {
  std::vector<std::string> errors;
  const RunConfig cfg = parse_config(
      "design = generic\nrho = sqrt(x1), sqrt(x2)\nmodel = bernoulli\np = 0.9, 0.4\n", errors);
  REQUIRE(errors.empty());
  const ResponseModel model = build_model(cfg);
  const Design generic = build_design(cfg, model);
  const Design bespoke = optimal_allocation_design(model.theta());

  RngStream rng(12, 0);
  for (int i = 0; i < 1000; ++i) {
    Vec x{rng.next_uniform(), rng.next_uniform()};
    const Vec a = generic.addition_rule(x, 0, 1.0);
    const Vec b = bespoke.addition_rule(x, 1, 0.0);
    REQUIRE(a == b);
  }
  CHECK(generic.gamma == doctest::Approx(bespoke.gamma).epsilon(1e-15));
}

TEST_CASE("finite-support model from config") {
  std::vector<std::string> errors;
  const RunConfig cfg = parse_config(
      "design = generic\nrho = x1 + 0.1, x2 + 0.1\nmodel = finite\n"
      "arm1.outcomes = 0, 1, 2\narm1.probs = 0.25, 0.5, 0.25\n"
      "arm2.outcomes = 0, 1\narm2.probs = 0.4, 0.6\n",
      errors);
  REQUIRE(errors.empty());
  const ResponseModel m = build_model(cfg);
  CHECK(m.theta()[0] == doctest::Approx(1.0));
  CHECK(m.theta()[1] == doctest::Approx(0.6));
}

TEST_CASE("report json round-trips to full precision") {
  const ResponseModel m = ResponseModel::bernoulli({0.7, 0.5});
  const AsymptoticReport rep = full_report(rpw_target_design(m.theta()), m);
  const std::string text = report_to_json(rep);
  const nlohmann::json j = nlohmann::json::parse(text);
  CHECK(j["v"][0].get<double>() == rep.v[0]);
  CHECK(j["lambda_sharp"][0][0].get<double>() == (*rep.lambda_sharp)(0, 0));
  CHECK(j["gamma"].get<double>() == rep.gamma);
  CHECK(j["mixed_term"] == "consistent");
}

TEST_CASE("cli: simulate reproduces the committed golden trajectory") {
  TempDir tmp;
  write_file(tmp.path / "cfg.ini", kExample3Config);
  const int rc = run_cli("simulate --config " + (tmp.path / "cfg.ini").string() + " --out " +
                             tmp.path.string(),
                         tmp.path / "stdout.txt");
  REQUIRE(rc == 0);
  const std::string produced = slurp(tmp.path / "trajectory.csv");
  const std::string golden = slurp(fs::path(SEU_GOLDEN_DIR) / "trajectory_rpw_target_seed42.csv");
  REQUIRE(!golden.empty());
  CHECK(produced == golden);
}

TEST_CASE("cli: asymptotics is byte-stable across invocations") {
  TempDir tmp;
  write_file(tmp.path / "cfg.ini",
             "design = opt-alloc\nmodel = bernoulli\np = 0.9, 0.4\n");
  fs::create_directories(tmp.path / "a");
  fs::create_directories(tmp.path / "b");
  REQUIRE(run_cli("asymptotics --config " + (tmp.path / "cfg.ini").string() + " --out " +
                      (tmp.path / "a").string(),
                  tmp.path / "o1.txt") == 0);
  REQUIRE(run_cli("asymptotics --config " + (tmp.path / "cfg.ini").string() + " --out " +
                      (tmp.path / "b").string(),
                  tmp.path / "o2.txt") == 0);
  const std::string r1 = slurp(tmp.path / "a" / "report.json");
  const std::string r2 = slurp(tmp.path / "b" / "report.json");
  REQUIRE(!r1.empty());
  CHECK(r1 == r2);

  const nlohmann::json j = nlohmann::json::parse(r1);
  CHECK(j["clt_valid"].get<bool>());
  CHECK(j["closed_form"]["lambda_dagger_natural"][0][0].get<double>() ==
        doctest::Approx(0.1 / 1.2).epsilon(1e-9));
}

TEST_CASE("cli: invalid gap still exits zero with clt_valid false") {
  TempDir tmp;
  write_file(tmp.path / "cfg.ini", "design = bhs\nmodel = bernoulli\np = 0.9, 0.8\n");
  REQUIRE(run_cli("asymptotics --config " + (tmp.path / "cfg.ini").string() + " --out " +
                      tmp.path.string(),
                  tmp.path / "out.txt") == 0);
  const nlohmann::json j = nlohmann::json::parse(slurp(tmp.path / "report.json"));
  CHECK_FALSE(j["clt_valid"].get<bool>());
  CHECK(j["lln_valid"].get<bool>());
  CHECK(j["lambda"].get<double>() == doctest::Approx(0.7).epsilon(1e-9));
  CHECK_FALSE(j.contains("lambda_sharp"));
}

TEST_CASE("cli: exit codes") {
  TempDir tmp;
  write_file(tmp.path / "bad.ini", "design = rpw-target\nmodel = bernoulli\np = 1.2, 0.5\n");
  CHECK(run_cli("simulate --config " + (tmp.path / "bad.ini").string(), tmp.path / "o.txt") ==
        2);

  write_file(tmp.path / "cfg.ini", kExample3Config);
  // missing output directory -> runtime failure
  CHECK(run_cli("simulate --config " + (tmp.path / "cfg.ini").string() + " --out " +
                    (tmp.path / "no_such_dir").string(),
                tmp.path / "o.txt") == 3);

  // compare with a single config -> config error
  CHECK(run_cli("compare --config " + (tmp.path / "cfg.ini").string() + " --out " +
                    tmp.path.string(),
                tmp.path / "o.txt") == 2);

  // compare with mismatched models -> config error
  write_file(tmp.path / "other.ini",
             "design = rpw-classic\nmodel = bernoulli\np = 0.6, 0.5\n");
  CHECK(run_cli("compare --config " + (tmp.path / "cfg.ini").string() + " --config " +
                    (tmp.path / "other.ini").string() + " --out " + tmp.path.string(),
                tmp.path / "o.txt") == 2);
}

TEST_CASE("cli: compare emits both variance columns") {
  TempDir tmp;
  write_file(tmp.path / "a.ini",
             "design = rpw-target\nmodel = bernoulli\np = 0.7, 0.5\nreplications = 1\n");
  write_file(tmp.path / "b.ini",
             "design = rpw-classic\nmodel = bernoulli\np = 0.7, 0.5\nreplications = 1\n");
  REQUIRE(run_cli("compare --config " + (tmp.path / "a.ini").string() + " --config " +
                      (tmp.path / "b.ini").string() + " --out " + tmp.path.string(),
                  tmp.path / "out.txt") == 0);
  const std::string csv = slurp(tmp.path / "compare.csv");
  CHECK(csv.find("2.34375") != std::string::npos);
  CHECK(csv.find("1.328125") != std::string::npos);
}

TEST_CASE("cli: validate prints a verdict per check") {
  TempDir tmp;
  write_file(tmp.path / "cfg.ini", "design = bhs\nmodel = bernoulli\np = 0.9, 0.8\n");
  REQUIRE(run_cli("validate --config " + (tmp.path / "cfg.ini").string(),
                  tmp.path / "out.txt") == 0);
  const std::string out = slurp(tmp.path / "out.txt");
  CHECK(out.find("FAIL") != std::string::npos);  // the normal-limit check
  CHECK(out.find("lambda = 0.7") != std::string::npos);
}
