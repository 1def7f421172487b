#include "seu/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "seu/errors.hpp"
#include "seu/urn.hpp"

namespace seu {

namespace {

// Chunk size is a fixed constant (never derived from the worker count) so
// the merge order, and therefore every floating-point sum, is identical
// for any parallelism level.
constexpr std::int64_t kChunk = 64;

int resolve_threads(int requested, std::int64_t chunks) {
  int t = requested;
  if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
  if (t <= 0) t = 1;
  if (const char* env = std::getenv("SEU_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) t = std::min(t, cap);
  }
  return static_cast<int>(std::min<std::int64_t>(t, std::max<std::int64_t>(chunks, 1)));
}

struct CheckpointAccumulator {
  MeanCovAccumulator raw;        // concatenated (N/n, Y/n, theta_hat), 3K
  MeanCovAccumulator dev_N;      // sqrt(n)(N/n - v)
  MeanCovAccumulator dev_Y;      // sqrt(n)(Y/n - gamma v)
  MeanCovAccumulator dev_theta;  // sqrt(n)(theta_hat - theta)
  MomentAccumulator first_N;
  MomentAccumulator first_theta;

  explicit CheckpointAccumulator(std::size_t K)
      : raw(3 * K), dev_N(K), dev_Y(K), dev_theta(K) {}
  CheckpointAccumulator() = default;

  void merge(const CheckpointAccumulator& o) {
    raw.merge(o.raw);
    dev_N.merge(o.dev_N);
    dev_Y.merge(o.dev_Y);
    dev_theta.merge(o.dev_theta);
    first_N.merge(o.first_N);
    first_theta.merge(o.first_theta);
  }
};

MomentSummary summarize(const MomentAccumulator& acc) {
  return {acc.mean(), acc.variance(), acc.skewness(), acc.excess_kurtosis()};
}

}  // namespace

EnsembleStats run_batch(const BatchConfig& config) {
  if (config.replications < 1) throw InvalidArgument("run_batch: replications must be >= 1");
  if (config.horizon < 1) throw InvalidArgument("run_batch: horizon must be >= 1");
  const int K = config.design.K;

  const Mat H = generating_matrix(config.design, config.model.theta());
  const StationaryResult st = stationary_proportion(H);
  Vec v = st.v;
  // Make the proportions sum to one exactly so scaled deviations of N/n
  // annihilate the all-ones direction at machine precision.
  double partial = 0.0;
  for (int k = 0; k + 1 < K; ++k) partial += v[k];
  v[K - 1] = 1.0 - partial;
  const double gamma = st.gamma;
  const Vec& theta = config.model.theta();

  std::vector<std::int64_t> marks;
  for (std::int64_t c : config.checkpoints)
    if (c >= 1 && c <= config.horizon) marks.push_back(c);
  marks.push_back(config.horizon);
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
  const std::size_t n_marks = marks.size();

  const std::int64_t R = config.replications;
  const std::int64_t n_chunks = (R + kChunk - 1) / kChunk;
  std::vector<std::vector<CheckpointAccumulator>> chunk_acc(
      static_cast<std::size_t>(n_chunks));

  auto run_chunk = [&](std::int64_t chunk) {
    auto& accs = chunk_acc[static_cast<std::size_t>(chunk)];
    accs.assign(n_marks, CheckpointAccumulator(static_cast<std::size_t>(K)));
    const std::int64_t lo = chunk * kChunk;
    const std::int64_t hi = std::min(R, lo + kChunk);
    for (std::int64_t rep = lo; rep < hi; ++rep) {
      RngStream rng(config.master_seed, static_cast<std::uint64_t>(rep));
      const Vec* y0 = config.initial_composition.empty() ? nullptr : &config.initial_composition;
      std::vector<Snapshot> snaps =
          run_trial(config.design, config.model, config.horizon, rng, marks, nullptr, y0);
      for (std::size_t s = 0; s < snaps.size(); ++s) {
        const Snapshot& snap = snaps[s];
        const double m = static_cast<double>(snap.stage);
        const double root_m = std::sqrt(m);
        Vec raw(3 * K), dn(K), dy(K), dt(K);
        for (int k = 0; k < K; ++k) {
          const double share = static_cast<double>(snap.N[k]) / m;
          raw[k] = share;
          raw[K + k] = snap.Y[k] / m;
          raw[2 * K + k] = snap.theta_hat[k];
          dn[k] = root_m * (share - v[k]);
          dy[k] = root_m * (snap.Y[k] / m - gamma * v[k]);
          dt[k] = root_m * (snap.theta_hat[k] - theta[k]);
        }
        auto& acc = accs[s];
        acc.raw.add(raw);
        acc.dev_N.add(dn);
        acc.dev_Y.add(dy);
        acc.dev_theta.add(dt);
        acc.first_N.add(dn[0]);
        acc.first_theta.add(dt[0]);
      }
    }
  };

  const int workers = resolve_threads(config.threads, n_chunks);
  if (workers <= 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::int64_t c = next.fetch_add(1);
          if (c >= n_chunks) return;
          run_chunk(c);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  // Merge in chunk order: associativity of the merge plus a fixed order
  // makes the reduction independent of scheduling.
  std::vector<CheckpointAccumulator> total(n_marks,
                                           CheckpointAccumulator(static_cast<std::size_t>(K)));
  for (const auto& chunk : chunk_acc)
    for (std::size_t s = 0; s < n_marks; ++s) total[s].merge(chunk[s]);

  EnsembleStats out;
  out.predicted_v = v;
  out.predicted_gamma = gamma;
  out.checkpoints.resize(n_marks);
  for (std::size_t s = 0; s < n_marks; ++s) {
    CheckpointStats& cs = out.checkpoints[s];
    cs.stage = marks[s];
    cs.replications = total[s].raw.count();
    const Vec& mean = total[s].raw.mean();
    cs.mean_N_over_n.assign(mean.begin(), mean.begin() + K);
    cs.mean_Y_over_n.assign(mean.begin() + K, mean.begin() + 2 * K);
    cs.mean_theta_hat.assign(mean.begin() + 2 * K, mean.end());
    cs.covariance_defined = cs.replications >= 2;
    if (cs.covariance_defined) {
      cs.cov_N = total[s].dev_N.covariance();
      cs.cov_Y = total[s].dev_Y.covariance();
      cs.cov_theta = total[s].dev_theta.covariance();
      cs.se_mean_N.resize(K);
      for (int k = 0; k < K; ++k)
        cs.se_mean_N[k] = std::sqrt(cs.cov_N(k, k) / static_cast<double>(cs.replications)) /
                          std::sqrt(static_cast<double>(cs.stage));
      cs.se_variance_rel = std::sqrt(2.0 / static_cast<double>(cs.replications - 1));
    }
    cs.first_N = summarize(total[s].first_N);
    cs.first_theta = summarize(total[s].first_theta);
  }
  return out;
}

LlnDiagnostic lln_diagnostic(const std::vector<Snapshot>& snapshots, const Vec& v) {
  LlnDiagnostic d;
  for (const auto& s : snapshots) {
    if (s.stage < 1) continue;
    double dev = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k)
      dev = std::max(dev,
                     std::abs(static_cast<double>(s.N[k]) / static_cast<double>(s.stage) - v[k]));
    d.series.emplace_back(s.stage, dev);
  }
  std::vector<std::pair<double, double>> pts;
  for (const auto& [m, dev] : d.series)
    if (dev > 0.0) pts.emplace_back(std::log(static_cast<double>(m)), std::log(dev));
  if (pts.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : pts) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double n = static_cast<double>(pts.size());
    const double denom = n * sxx - sx * sx;
    if (denom > 0.0) d.slope = (n * sxy - sx * sy) / denom;
  }
  if (!d.series.empty()) {
    const double span = static_cast<double>(d.series.back().first) /
                        static_cast<double>(d.series.front().first);
    d.reliable = d.series.size() >= 3 && span >= 100.0;
  }
  return d;
}

CltComparison clt_check(const EnsembleStats& stats, const AsymptoticReport& report) {
  if (!report.clt_valid)
    throw CltInvalid(
        "clt_check refused: the design's spectral gap is >= 1/2, the scaled allocation has no "
        "normal limit at rate sqrt(n)");
  if (!report.lambda_sharp || !report.lambda_dagger_natural)
    throw CltInvalid("clt_check refused: report carries no covariance matrices");
  const CheckpointStats& term = stats.terminal();
  if (!term.covariance_defined)
    throw InvalidArgument("clt_check: need at least two replications");

  CltComparison cmp;
  const int K = report.K;
  auto add_rows = [&](const std::string& name, const Mat& predicted, const Mat& empirical) {
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j) {
        CltRow row;
        row.statistic = name;
        row.i = i + 1;
        row.j = j + 1;
        row.predicted = predicted(i, j);
        row.empirical = empirical(i, j);
        const double scale = std::sqrt(std::abs(predicted(i, i) * predicted(j, j)));
        if (predicted(i, i) > 1e-6 && predicted(j, j) > 1e-6) {
          row.relative = true;
          row.error = std::abs(row.empirical - row.predicted) / scale;
        } else {
          row.relative = false;
          row.error = std::abs(row.empirical - row.predicted);
        }
        cmp.rows.push_back(row);
      }
  };
  add_rows("cov_N", *report.lambda_sharp, term.cov_N);
  add_rows("cov_Y", *report.lambda_dagger_natural, term.cov_Y);
  add_rows("cov_theta", report.theta_clt, term.cov_theta);

  cmp.first_N = term.first_N;
  if (term.replications >= 20000) {
    cmp.moment_gates_checked = true;
    cmp.moments_pass =
        std::abs(term.first_N.skewness) < 0.15 && std::abs(term.first_N.excess_kurtosis) < 0.3;
  }
  return cmp;
}

std::vector<CompareRow> compare_designs(const std::vector<BatchConfig>& configs,
                                        const ReportOptions& opts) {
  if (configs.size() < 2) throw InvalidArgument("compare_designs: need at least two designs");
  const Vec& theta0 = configs.front().model.theta();
  for (const auto& c : configs)
    if (c.model.theta() != theta0 || c.model.kind() != configs.front().model.kind())
      throw InvalidArgument("compare_designs: designs must share one response model");

  std::vector<CompareRow> rows;
  for (const auto& c : configs) {
    CompareRow row;
    row.design_id = c.design.id;
    const AsymptoticReport rep = full_report(c.design, c.model, opts);
    row.clt_valid = rep.clt_valid;
    row.v = rep.v;
    if (rep.lambda_sharp) {
      row.lambda_sharp_diag.resize(rep.K);
      for (int k = 0; k < rep.K; ++k) row.lambda_sharp_diag[k] = (*rep.lambda_sharp)(k, k);
    }
    if (c.design.id == "rpw-classic" && c.model.kind() == ResponseModel::Kind::Bernoulli &&
        rep.K == 2) {
      auto ref = rpw_reference_variances(theta0[0], theta0[1]);
      if (ref) row.rpw_reference_var_N = ref->second;
    }
    if (c.replications >= 2) {
      const EnsembleStats stats = run_batch(c);
      const CheckpointStats& term = stats.terminal();
      row.empirical_var_N.resize(rep.K);
      for (int k = 0; k < rep.K; ++k) row.empirical_var_N[k] = term.cov_N(k, k);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

void csv_row(std::ostream& os, std::int64_t stage, const std::string& stat,
             const std::string& coord, const std::string& predicted, double empirical,
             const std::string& rel) {
  os << stage << ',' << stat << ',' << coord << ',' << predicted << ',' << fmt(empirical) << ','
     << rel << '\n';
}

}  // namespace

void write_ensemble_csv(std::ostream& os, const EnsembleStats& stats,
                        const AsymptoticReport* report) {
  os << "stage,statistic,coordinate,predicted,empirical,rel_error\n";
  const int K = static_cast<int>(stats.predicted_v.size());
  for (const auto& cs : stats.checkpoints) {
    for (int k = 0; k < K; ++k) {
      const double pred = stats.predicted_v[k];
      const double emp = cs.mean_N_over_n[k];
      csv_row(os, cs.stage, "mean_N_over_n", std::to_string(k + 1), fmt(pred), emp,
              pred != 0.0 ? fmt(std::abs(emp - pred) / std::abs(pred)) : "");
      csv_row(os, cs.stage, "mean_Y_over_n", std::to_string(k + 1),
              fmt(stats.predicted_gamma * stats.predicted_v[k]), cs.mean_Y_over_n[k], "");
      csv_row(os, cs.stage, "mean_theta_hat", std::to_string(k + 1), "", cs.mean_theta_hat[k],
              "");
    }
    if (!cs.covariance_defined) continue;
    auto emit_cov = [&](const std::string& name, const Mat& m, const Mat* pred) {
      for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) {
          std::string coord = std::to_string(i + 1) + ":" + std::to_string(j + 1);
          if (pred) {
            const double p = (*pred)(i, j);
            const double scale = std::sqrt(std::abs((*pred)(i, i) * (*pred)(j, j)));
            const std::string rel =
                scale > 1e-6 ? fmt(std::abs(m(i, j) - p) / scale) : std::string();
            csv_row(os, cs.stage, name, coord, fmt(p), m(i, j), rel);
          } else {
            csv_row(os, cs.stage, name, coord, "", m(i, j), "");
          }
        }
    };
    const bool have = report && report->clt_valid && report->lambda_sharp;
    emit_cov("cov_N", cs.cov_N, have ? &*report->lambda_sharp : nullptr);
    emit_cov("cov_Y", cs.cov_Y, have ? &*report->lambda_dagger_natural : nullptr);
    emit_cov("cov_theta", cs.cov_theta, report ? &report->theta_clt : nullptr);
    csv_row(os, cs.stage, "skewness_N1", "1", "0", cs.first_N.skewness, "");
    csv_row(os, cs.stage, "excess_kurtosis_N1", "1", "0", cs.first_N.excess_kurtosis, "");
  }
}

namespace {

nlohmann::json mat_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

std::string ensemble_to_json(const EnsembleStats& stats) {
  nlohmann::json j;
  j["predicted_v"] = stats.predicted_v;
  j["predicted_gamma"] = stats.predicted_gamma;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& cs : stats.checkpoints) {
    nlohmann::json c;
    c["stage"] = cs.stage;
    c["replications"] = cs.replications;
    c["mean_N_over_n"] = cs.mean_N_over_n;
    c["mean_Y_over_n"] = cs.mean_Y_over_n;
    c["mean_theta_hat"] = cs.mean_theta_hat;
    if (cs.covariance_defined) {
      c["cov_N"] = mat_json(cs.cov_N);
      c["cov_Y"] = mat_json(cs.cov_Y);
      c["cov_theta"] = mat_json(cs.cov_theta);
      c["se_mean_N"] = cs.se_mean_N;
      c["se_variance_rel"] = cs.se_variance_rel;
    } else {
      c["covariance_defined"] = false;
    }
    c["first_N"] = {{"mean", cs.first_N.mean},
                    {"variance", cs.first_N.variance},
                    {"skewness", cs.first_N.skewness},
                    {"excess_kurtosis", cs.first_N.excess_kurtosis}};
    c["first_theta"] = {{"mean", cs.first_theta.mean},
                        {"variance", cs.first_theta.variance},
                        {"skewness", cs.first_theta.skewness},
                        {"excess_kurtosis", cs.first_theta.excess_kurtosis}};
    arr.push_back(std::move(c));
  }
  j["checkpoints"] = std::move(arr);
  return j.dump(2) + "\n";
}

void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows) {
  os << "design,arm,v,lambda_sharp,empirical_var,rpw_reference,clt_valid\n";
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.v.size(); ++k) {
      os << r.design_id << ',' << (k + 1) << ',' << fmt(r.v[k]) << ',';
      os << (r.lambda_sharp_diag.empty() ? "" : fmt(r.lambda_sharp_diag[k])) << ',';
      os << (r.empirical_var_N.empty() ? "" : fmt(r.empirical_var_N[k])) << ',';
      if (k == 0 && r.rpw_reference_var_N)
        os << fmt(*r.rpw_reference_var_N);
      else if (k == 0 && r.design_id == "rpw-classic")
        os << "not-applicable";
      os << ',' << (r.clt_valid ? "true" : "false") << '\n';
    }
  }
}

void write_compare_text(std::ostream& os, const std::vector<CompareRow>& rows) {
  os << "design        arm  v            lambda_sharp  empirical    rpw_ref      clt\n";
  char line[256];
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.v.size(); ++k) {
      std::string ls = r.lambda_sharp_diag.empty() ? "n/a" : fmt(r.lambda_sharp_diag[k]);
      std::string ev = r.empirical_var_N.empty() ? "n/a" : fmt(r.empirical_var_N[k]);
      std::string ref = "";
      if (k == 0 && r.design_id == "rpw-classic")
        ref = r.rpw_reference_var_N ? fmt(*r.rpw_reference_var_N) : "not-applicable";
      std::snprintf(line, sizeof line, "%-13s %-4zu %-12.10g %-13s %-12s %-12s %s\n",
                    r.design_id.c_str(), k + 1, r.v[k], ls.c_str(), ev.c_str(), ref.c_str(),
                    r.clt_valid ? "yes" : "no");
      os << line;
    }
  }
}

}  // namespace seu
