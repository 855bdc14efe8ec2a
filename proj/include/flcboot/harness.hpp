#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "flcboot/bootstrap.hpp"
#include "flcboot/errors.hpp"
#include "flcboot/flc_test.hpp"
#include "flcboot/scenarios.hpp"

namespace flcboot {

struct MethodSpec {
  Method method = Method::FLC;
  int B = 199;   // first-level resamples (bootstrap methods)
  int B2 = 1;    // second-level resamples (DB)
  int m = 0;     // BT_MN resample scale parameter; 0 = variance-ratio heuristic
};

struct ExperimentConfig {
  std::vector<ScenarioSpec> scenarios;
  std::vector<MethodSpec> methods;
  int replicates = 1;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string output_path;
};

inline void validate(const ExperimentConfig& config) {
  if (config.scenarios.empty()) throw ConfigError("config: at least one [scenario] required");
  if (config.methods.empty()) throw ConfigError("config: at least one [method] required");
  if (config.replicates < 1) throw ConfigError("config: replicates must be >= 1");
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw ConfigError("config: alpha must lie in (0, 1)");
  if (config.workers < 1) throw ConfigError("config: workers must be >= 1");
  for (const ScenarioSpec& s : config.scenarios) validate(s);
  for (const MethodSpec& ms : config.methods) {
    if (ms.method != Method::FLC) {
      if (ms.B < 1) throw ConfigError("config: method B must be >= 1");
      if (ms.method == Method::DB && ms.B2 < 1) throw ConfigError("config: DB needs B2 >= 1");
      if (ms.m < 0) throw ConfigError("config: m_boot must be positive or auto");
    }
  }
}

// ---- results ---------------------------------------------------------------

struct CellKey {
  std::string setting;
  std::string d_label;
  int n = 0;
  int m = 0;
  std::string error;
  std::string method;

  friend bool operator<(const CellKey& a, const CellKey& b) {
    return std::tie(a.setting, a.d_label, a.n, a.m, a.error, a.method) <
           std::tie(b.setting, b.d_label, b.n, b.m, b.error, b.method);
  }
  friend bool operator==(const CellKey& a, const CellKey& b) {
    return std::tie(a.setting, a.d_label, a.n, a.m, a.error, a.method) ==
           std::tie(b.setting, b.d_label, b.n, b.m, b.error, b.method);
  }
};

struct RejectionRow {
  CellKey key;
  double reject_pct = 0.0;        // 100 * rejections / replicates_used
  double mc_halfwidth_pct = 0.0;  // 196 * sqrt(p(1-p)/replicates_used)
  double mean_time_s = 0.0;
  std::int64_t replicates_used = 0;
  std::int64_t failures = 0;
};

struct RejectionTable {
  std::vector<RejectionRow> rows;
};

// One method call on one generated dataset.
struct ReplicateRecord {
  int scenario_index = 0;
  int method_index = 0;
  int replicate = 0;
  bool failed = true;
  double p_value = 1.0;
  double seconds = 0.0;
};

struct ExperimentOutcome {
  RejectionTable table;
  std::vector<ReplicateRecord> records;
};

namespace detail {

inline std::string scenario_label(const ScenarioSpec& spec) {
  return spec.label.empty() ? default_label(spec) : spec.label;
}

inline RngStream scenario_root(const ExperimentConfig& config, int scenario_index) {
  // A nonzero per-scenario seed pins that scenario's streams independently of
  // its position in the config.
  const ScenarioSpec& spec = config.scenarios[static_cast<std::size_t>(scenario_index)];
  if (spec.seed != 0) return RngStream::root(spec.seed);
  return RngStream::root(config.seed).split(static_cast<std::uint64_t>(scenario_index));
}

inline void run_replicate(const ExperimentConfig& config, int scenario_index, int replicate,
                          std::vector<ReplicateRecord>& records) {
  const auto n_methods = static_cast<int>(config.methods.size());
  const auto base_index =
      (static_cast<std::size_t>(scenario_index) * config.replicates + replicate) * n_methods;
  const ScenarioSpec& spec = config.scenarios[static_cast<std::size_t>(scenario_index)];
  const RngStream sroot = scenario_root(config, scenario_index);

  GeneratedDataset dataset;
  ProjectionPair pair;
  bool prepared = false;
  try {
    RngStream gen = sroot.split(0).split(static_cast<std::uint64_t>(replicate));
    dataset = generate(spec, gen);
    pair = build_projection_pair(dataset.design);
    prepared = true;
  } catch (const Error&) {
  }

  for (int mi = 0; mi < n_methods; ++mi) {
    ReplicateRecord& rec = records[base_index + static_cast<std::size_t>(mi)];
    rec.scenario_index = scenario_index;
    rec.method_index = mi;
    rec.replicate = replicate;
    rec.failed = true;
    if (!prepared) continue;

    const MethodSpec& ms = config.methods[static_cast<std::size_t>(mi)];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      TestResult result;
      if (ms.method == Method::FLC) {
        result = flc_test(pair, dataset.design.y);
      } else {
        BootstrapPlan plan;
        plan.B = ms.B;
        plan.B2 = ms.B2;
        RngStream mstream =
            sroot.split(1 + static_cast<std::uint64_t>(mi)).split(static_cast<std::uint64_t>(replicate));
        plan.seed = mstream.next_u64();
        switch (ms.method) {
          case Method::BT: plan.variant = BootstrapVariant::NULL_RESIDUAL; break;
          case Method::BT_NONNULL: plan.variant = BootstrapVariant::NONNULL_RESIDUAL; break;
          case Method::BT_MN:
            plan.variant = BootstrapVariant::M_OUT_OF_N;
            plan.m = ms.m > 0 ? ms.m : m_from_variance_ratio(pair, dataset.design.y);
            break;
          case Method::FDB: plan.variant = BootstrapVariant::FAST_DOUBLE; break;
          case Method::DB: plan.variant = BootstrapVariant::DOUBLE; break;
          default: break;
        }
        result = run_bootstrap(dataset.design, pair, plan);
      }
      rec.p_value = result.p_value;
      rec.failed = false;
    } catch (const Error&) {
      rec.failed = true;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
}

}  // namespace detail

// Aggregate records into the per-cell table at the given alpha. Rejection is
// strict: p < alpha, so bootstrap p-values landing exactly on alpha do not
// reject.
inline RejectionTable build_table(const ExperimentConfig& config,
                                  const std::vector<ReplicateRecord>& records, double alpha) {
  const auto n_methods = static_cast<int>(config.methods.size());
  RejectionTable table;
  for (int si = 0; si < static_cast<int>(config.scenarios.size()); ++si) {
    const ScenarioSpec& spec = config.scenarios[static_cast<std::size_t>(si)];
    for (int mi = 0; mi < n_methods; ++mi) {
      std::int64_t used = 0;
      std::int64_t failures = 0;
      std::int64_t rejections = 0;
      double total_seconds = 0.0;
      for (int rep = 0; rep < config.replicates; ++rep) {
        const auto idx =
            (static_cast<std::size_t>(si) * config.replicates + rep) * n_methods + mi;
        const ReplicateRecord& rec = records[idx];
        if (rec.failed) {
          ++failures;
          continue;
        }
        ++used;
        total_seconds += rec.seconds;
        if (rec.p_value < alpha) ++rejections;
      }
      RejectionRow row;
      row.key.setting = setting_name(spec.setting);
      row.key.d_label = detail::scenario_label(spec);
      row.key.n = spec.n_clusters;
      row.key.m = spec.cluster_size;
      row.key.error = error_tag_name(spec.error.tag);
      row.key.method = method_name(config.methods[static_cast<std::size_t>(mi)].method);
      row.replicates_used = used;
      row.failures = failures;
      if (used > 0) {
        const double phat = static_cast<double>(rejections) / static_cast<double>(used);
        row.reject_pct = 100.0 * static_cast<double>(rejections) / static_cast<double>(used);
        row.mc_halfwidth_pct = 196.0 * std::sqrt(phat * (1.0 - phat) / static_cast<double>(used));
        row.mean_time_s = total_seconds / static_cast<double>(used);
      }
      table.rows.push_back(std::move(row));
    }
  }
  std::sort(table.rows.begin(), table.rows.end(),
            [](const RejectionRow& a, const RejectionRow& b) { return a.key < b.key; });
  return table;
}

// Run the full scenario x replicate x method grid. Numeric cells (everything
// but timings) are identical for any worker count: every random stream is a
// pure function of (seed, scenario, replicate, method).
inline ExperimentOutcome run_experiment_detailed(const ExperimentConfig& config) {
  validate(config);
  const auto n_scenarios = static_cast<int>(config.scenarios.size());
  const auto n_methods = static_cast<std::size_t>(config.methods.size());
  const std::size_t n_tasks = static_cast<std::size_t>(n_scenarios) * config.replicates;

  ExperimentOutcome outcome;
  outcome.records.resize(n_tasks * n_methods);

  const int workers = std::min<int>(config.workers, static_cast<int>(n_tasks));
  if (workers <= 1) {
    for (std::size_t t = 0; t < n_tasks; ++t)
      detail::run_replicate(config, static_cast<int>(t / config.replicates),
                            static_cast<int>(t % config.replicates), outcome.records);
  } else {
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (;;) {
        const std::size_t t = next.fetch_add(1);
        if (t >= n_tasks) return;
        detail::run_replicate(config, static_cast<int>(t / config.replicates),
                              static_cast<int>(t % config.replicates), outcome.records);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& th : pool) th.join();
  }

  outcome.table = build_table(config, outcome.records, config.alpha);
  return outcome;
}

inline RejectionTable run_experiment(const ExperimentConfig& config) {
  return run_experiment_detailed(config).table;
}

// ---- CSV emission ----------------------------------------------------------

namespace detail {

inline std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace detail

inline std::string format_csv(const RejectionTable& table) {
  std::string out = "setting,D_label,n,m,error,method,reject_pct,mc_halfwidth_pct,mean_time_s,replicates,failures\n";
  for (const RejectionRow& r : table.rows) {
    out += r.key.setting;
    out += ',';
    out += r.key.d_label;
    out += ',';
    out += std::to_string(r.key.n);
    out += ',';
    out += std::to_string(r.key.m);
    out += ',';
    out += r.key.error;
    out += ',';
    out += r.key.method;
    out += ',';
    out += detail::fixed(r.reject_pct, 1);
    out += ',';
    out += detail::fixed(r.mc_halfwidth_pct, 2);
    out += ',';
    out += detail::fixed(r.mean_time_s, 2);
    out += ',';
    out += std::to_string(r.replicates_used);
    out += ',';
    out += std::to_string(r.failures);
    out += '\n';
  }
  return out;
}

inline void emit_csv(const RejectionTable& table, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open for writing: " + path);
  const std::string body = format_csv(table);
  file.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!file) throw IoError("write failed: " + path);
}

// ---- fast double bootstrap diagnostics --------------------------------------

// Raw quantities behind the second-level quantile diagnostics: one dataset,
// mc_reps independent fast double bootstrap runs.
struct FdbDiagnosticRow {
  double f_obs = 0.0;
  double q_minus_f = 0.0;  // Q**_B - F_obs
  double p_first = 0.0;    // first-level (residual bootstrap) p
  double p_fdb = 0.0;
  std::optional<double> p_db;  // one comparison run, attached to the first row
};

inline std::vector<FdbDiagnosticRow> fdb_diagnostics(const DesignMatrices& design,
                                                     const BootstrapPlan& plan, int mc_reps,
                                                     std::optional<int> db_b2 = std::nullopt) {
  if (mc_reps < 1) throw DomainError("fdb_diagnostics: mc_reps must be >= 1");
  const ProjectionPair pair = build_projection_pair(design);
  const RngStream base = RngStream::root(plan.seed);

  std::vector<FdbDiagnosticRow> rows;
  rows.reserve(static_cast<std::size_t>(mc_reps));
  for (int rep = 0; rep < mc_reps; ++rep) {
    BootstrapPlan fdb_plan = plan;
    fdb_plan.variant = BootstrapVariant::FAST_DOUBLE;
    RngStream s = base.split(static_cast<std::uint64_t>(rep));
    fdb_plan.seed = s.next_u64();
    const FdbOutcome outcome = fast_double_bootstrap_detail(design, pair, fdb_plan);
    FdbDiagnosticRow row;
    row.f_obs = outcome.test.statistic;
    row.q_minus_f = outcome.quantile - outcome.test.statistic;
    row.p_first = outcome.first_level_p;
    row.p_fdb = outcome.test.p_value;
    rows.push_back(row);
  }

  if (db_b2) {
    BootstrapPlan db_plan = plan;
    db_plan.variant = BootstrapVariant::DOUBLE;
    db_plan.B2 = *db_b2;
    RngStream s = base.split(static_cast<std::uint64_t>(mc_reps));
    db_plan.seed = s.next_u64();
    rows.front().p_db = double_bootstrap(design, pair, db_plan).p_value;
  }
  return rows;
}

}  // namespace flcboot
