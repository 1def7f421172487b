#include "seu/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "seu/errors.hpp"
#include "seu/expr.hpp"

namespace seu {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

Vec parse_double_list(const std::string& value, bool& ok) {
  Vec out;
  std::stringstream ss(value);
  std::string item;
  ok = true;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) {
      ok = false;
      return out;
    }
    char* end = nullptr;
    const double d = std::strtod(item.c_str(), &end);
    if (end != item.c_str() + item.size()) {
      ok = false;
      return out;
    }
    out.push_back(d);
  }
  ok = !out.empty();
  return out;
}

std::vector<std::int64_t> parse_int_list(const std::string& value, bool& ok) {
  std::vector<std::int64_t> out;
  bool dok = false;
  for (double d : parse_double_list(value, dok)) out.push_back(static_cast<std::int64_t>(d));
  ok = dok;
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& text, std::vector<std::string>& errors) {
  RunConfig cfg;
  std::map<std::string, std::pair<std::string, int>> finite_keys;

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto err = [&](int ln, const std::string& msg) {
    errors.push_back("line " + std::to_string(ln) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      err(lineno, "expected key = value");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) {
      err(lineno, "empty value for '" + key + "'");
      continue;
    }
    bool ok = true;
    if (key == "design") {
      cfg.design_id = value;
    } else if (key == "rho") {
      cfg.rho_expr = value;
    } else if (key == "arms") {
      cfg.arms = std::atoi(value.c_str());
      if (cfg.arms < 2) err(lineno, "arms must be >= 2");
    } else if (key == "model") {
      cfg.model_kind = value;
      if (value != "bernoulli" && value != "finite" && value != "normal")
        err(lineno, "unknown model '" + value + "' (bernoulli | finite | normal)");
    } else if (key == "p") {
      cfg.p = parse_double_list(value, ok);
      if (!ok) err(lineno, "malformed probability list for 'p'");
      for (double q : cfg.p)
        if (!(q > 0.0 && q < 1.0)) err(lineno, "field 'p': probability " + std::to_string(q) +
                                                   " outside (0,1)");
    } else if (key == "mean") {
      cfg.mean = parse_double_list(value, ok);
      if (!ok) err(lineno, "malformed list for 'mean'");
    } else if (key == "sd") {
      cfg.sd = parse_double_list(value, ok);
      if (!ok) err(lineno, "malformed list for 'sd'");
    } else if (key.rfind("arm", 0) == 0 &&
               (key.find(".outcomes") != std::string::npos ||
                key.find(".probs") != std::string::npos)) {
      finite_keys[key] = {value, lineno};
    } else if (key == "horizon") {
      cfg.horizon = std::atoll(value.c_str());
      if (cfg.horizon < 0) err(lineno, "horizon must be >= 0");
    } else if (key == "replications") {
      cfg.replications = std::atoll(value.c_str());
      if (cfg.replications < 1) err(lineno, "replications must be >= 1");
    } else if (key == "seed") {
      cfg.seed = std::strtoull(value.c_str(), nullptr, 10);
    } else if (key == "checkpoints") {
      cfg.checkpoints = parse_int_list(value, ok);
      if (!ok) err(lineno, "malformed list for 'checkpoints'");
    } else if (key == "initial_mass") {
      cfg.initial_composition = parse_double_list(value, ok);
      if (!ok) err(lineno, "malformed list for 'initial_mass'");
      for (double y : cfg.initial_composition)
        if (!(y > 0.0)) err(lineno, "initial_mass entries must be positive");
    } else if (key == "clamp_epsilon") {
      cfg.clamp_epsilon = std::strtod(value.c_str(), nullptr);
      if (!(cfg.clamp_epsilon > 0.0 && cfg.clamp_epsilon < 0.5))
        err(lineno, "clamp_epsilon must lie in (0, 0.5)");
    } else if (key == "sigma_mc_samples") {
      cfg.sigma_mc_samples = std::atoll(value.c_str());
    } else if (key == "threads") {
      cfg.threads = std::atoi(value.c_str());
    } else if (key == "mixed_term") {
      cfg.mixed_term = value;
      if (value != "consistent" && value != "literal")
        err(lineno, "mixed_term must be 'consistent' or 'literal'");
    } else if (key == "quad_tol") {
      cfg.quad_tol = std::strtod(value.c_str(), nullptr);
      if (!(cfg.quad_tol > 0.0)) err(lineno, "quad_tol must be positive");
    } else if (key == "format") {
      cfg.format = value;
      if (value != "csv" && value != "json") err(lineno, "format must be csv or json");
    } else if (key == "out") {
      cfg.out_dir = value;
    } else {
      err(lineno, "unknown key '" + key + "'");
    }
  }

  // Assemble finite-support tables: arm<k>.outcomes / arm<k>.probs pairs.
  if (!finite_keys.empty()) {
    int max_arm = 0;
    for (const auto& [key, _] : finite_keys) {
      const int arm = std::atoi(key.c_str() + 3);
      max_arm = std::max(max_arm, arm);
    }
    cfg.finite_arms.resize(max_arm);
    for (const auto& [key, vl] : finite_keys) {
      const int arm = std::atoi(key.c_str() + 3);
      if (arm < 1 || arm > max_arm) {
        err(vl.second, "bad arm index in '" + key + "'");
        continue;
      }
      bool ok = true;
      Vec list = parse_double_list(vl.first, ok);
      if (!ok) {
        err(vl.second, "malformed list for '" + key + "'");
        continue;
      }
      if (key.find(".outcomes") != std::string::npos)
        cfg.finite_arms[arm - 1].outcomes = std::move(list);
      else
        cfg.finite_arms[arm - 1].probs = std::move(list);
    }
  }

  if (cfg.design_id.empty()) errors.push_back("line 0: missing required key 'design'");

  // Early structural checks so the CLI can report everything at once.
  static const char* known[] = {"bhs", "opt-alloc", "rpw-target", "rpw-classic", "generic"};
  bool known_design = false;
  for (const char* k : known)
    if (cfg.design_id == k) known_design = true;
  if (!cfg.design_id.empty() && !known_design)
    errors.push_back("line 0: unknown design id '" + cfg.design_id +
                     "' (bhs | opt-alloc | rpw-target | rpw-classic | generic)");
  if (cfg.design_id == "generic") {
    if (cfg.rho_expr.empty()) {
      errors.push_back("line 0: generic design needs 'rho'");
    } else {
      try {
        const auto exprs = Expr::parse_list(cfg.rho_expr, 16);
        cfg.arms = static_cast<int>(exprs.size());
      } catch (const ConfigError& e) {
        errors.push_back(std::string("line 0: ") + e.what());
      }
    }
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path, std::vector<std::string>& errors) {
  std::ifstream in(path);
  if (!in) {
    errors.push_back("cannot open config file: " + path);
    return {};
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), errors);
}

ResponseModel build_model(const RunConfig& cfg) {
  if (cfg.model_kind == "bernoulli") {
    if (cfg.p.empty()) throw ConfigError("bernoulli model needs 'p'");
    return ResponseModel::bernoulli(cfg.p);
  }
  if (cfg.model_kind == "normal") {
    if (cfg.mean.empty() || cfg.sd.empty()) throw ConfigError("normal model needs 'mean' and 'sd'");
    return ResponseModel::normal(cfg.mean, cfg.sd);
  }
  if (cfg.model_kind == "finite") {
    if (cfg.finite_arms.empty())
      throw ConfigError("finite model needs arm<k>.outcomes and arm<k>.probs");
    return ResponseModel::finite(cfg.finite_arms);
  }
  throw ConfigError("unknown model kind: " + cfg.model_kind);
}

Design build_design(const RunConfig& cfg, const ResponseModel& model) {
  const Vec& theta = model.theta();
  const double eps = cfg.clamp_epsilon;
  if (cfg.design_id == "bhs") return bhs_design(model.arms(), theta, eps);
  if (cfg.design_id == "opt-alloc") return optimal_allocation_design(theta, eps);
  if (cfg.design_id == "rpw-target") return rpw_target_design(theta, eps);
  if (cfg.design_id == "rpw-classic") return classic_rpw_design(theta);
  if (cfg.design_id == "generic") {
    auto exprs = Expr::parse_list(cfg.rho_expr, model.arms());
    if (static_cast<int>(exprs.size()) != model.arms())
      throw ConfigError("generic design: rho arity does not match the model arm count");
    auto rho = [exprs](const Vec& x) {
      Vec out(exprs.size());
      for (std::size_t i = 0; i < exprs.size(); ++i) out[i] = exprs[i].eval(x);
      return out;
    };
    return generic_target_design(model.arms(), rho, nullptr, theta, "generic", eps);
  }
  throw ConfigError("unknown design id: " + cfg.design_id);
}

BatchConfig build_batch(const RunConfig& cfg) {
  BatchConfig b;
  b.model = build_model(cfg);
  b.design = build_design(cfg, b.model);
  b.horizon = cfg.horizon;
  b.replications = cfg.replications;
  b.master_seed = cfg.seed;
  b.checkpoints = cfg.checkpoints;
  b.threads = cfg.threads;
  if (!cfg.initial_composition.empty()) {
    if (cfg.initial_composition.size() == 1) {
      b.initial_composition.assign(static_cast<std::size_t>(b.design.K),
                                   cfg.initial_composition[0]);
    } else if (static_cast<int>(cfg.initial_composition.size()) == b.design.K) {
      b.initial_composition = cfg.initial_composition;
    } else {
      throw ConfigError("initial_mass must be a scalar or one entry per arm");
    }
  }
  return b;
}

ReportOptions build_report_options(const RunConfig& cfg) {
  ReportOptions opts;
  opts.quadrature.abs_tol = cfg.quad_tol;
  opts.quadrature.mixed_term = cfg.mixed_term == "literal" ? MixedTermForm::LiteralPrinted
                                                           : MixedTermForm::Consistent;
  opts.sigma.mc_samples = cfg.sigma_mc_samples;
  opts.sigma.master_seed = cfg.seed;
  return opts;
}

}  // namespace seu
