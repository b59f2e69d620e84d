#pragma once

#include "quadqp/gait_scheduler.hpp"
#include "quadqp/power.hpp"
#include "quadqp/qp_types.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace quadqp::bench {

/// One timed solve. WBC solves use solver ids "wbc_reduced:<solver>" /
/// "wbc_full:<solver>" and Np = -1.
struct BenchRecord {
  std::string scenario;
  std::string solver;
  std::string preset;
  int N = 0;
  int Np = 0;
  int tick = 0;
  SolveStatus status = SolveStatus::kOptimal;
  double solve_time = 0.0;
  int iterations = 0;
  std::int64_t flops = 0;
  double timestamp = 0.0;
  /// Not serialized: objective of the solve and QP build time (WBC only).
  double objective = std::numeric_limits<double>::quiet_NaN();
  double setup_time = 0.0;
};

std::string records_header();
std::string to_csv_row(const BenchRecord& r);
BenchRecord parse_record_row(const std::string& line);
std::vector<BenchRecord> read_records(const std::string& path);
std::vector<power::PowerSample> read_power(const std::string& path);
/// Optional side file "tick,solver,setup_time_s" for WBC build times.
std::map<std::pair<int, std::string>, double> read_setup_times(const std::string& path);

struct WbcSettings {
  bool enabled = true;
  std::string formulation = "reduced";  // reduced | full
  std::string solver = "active_set";    // active_set | dense_ipm
  int ratio = 5;                        // WBC ticks per MPC tick
  double mu = 0.6;
  double kp = 100.0;
  double kd = 20.0;
};

struct BenchConfig {
  std::string scenario = "trotting";
  /// Replaces the named scenario's command profile when set.
  std::optional<gait::CommandProfile> profile;
  std::uint64_t seed = 1;
  std::vector<int> horizons = {10};
  /// Condensing levels; entries above N are skipped, 0 is the dense export.
  std::vector<int> condensing = {10, 0};
  std::vector<std::string> solvers = {"riccati", "dense_ipm"};
  std::vector<Preset> presets = {Preset::kBalance};
  /// Each solve is timed this many times; the median is recorded.
  int repetitions = 1;
  /// 0 runs the whole scenario.
  int max_ticks = 0;
  double position_noise = 0.002;
  double velocity_noise = 0.01;
  bool ipm_warm_start = false;
  WbcSettings wbc;
  std::string power = "mock";
  double mock_watts = 10.0;
  std::string rapl_path = "/sys/class/powercap/intel-rapl:0";
  double sample_period = 0.1;
  double stub_sleep = 1e-3;

  void validate() const;
  /// JSON config; QUADQP_SEED in the environment overrides "seed".
  static BenchConfig parse(const std::string& json_text);
};

/// Solver ids accepted by the harness.
const std::vector<std::string>& known_solvers();
/// riccati needs Np ≥ 1, the dense solvers need Np = 0, stub_sleep runs anywhere.
bool applicable(const std::string& solver, int Np);

/// Blocks for `seconds` with sub-scheduler-tick accuracy (sleep, then spin).
void precise_sleep(double seconds);

struct BenchRun {
  std::vector<BenchRecord> records;
  std::vector<power::PowerSample> power;
};

/// Runs the configured sweep. With a non-empty `out_dir`, records.csv is
/// appended and flushed per record, and power.csv / wbc_setup.csv are written
/// at the end.
BenchRun run_bench(const BenchConfig& config, power::PowerProvider& provider, const std::string& out_dir = "");

double compute_sfpw(double mean_solve_time, double mean_power);

/// Nearest-rank percentile, p in (0, 100].
double percentile(std::vector<double> values, double p);

struct GroupStats {
  std::string scenario;
  std::string solver;
  std::string preset;
  int N = 0;
  int Np = 0;
  int count = 0;
  int failures = 0;
  double mean_solve_time = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
  double mean_iterations = 0.0;
  double iterations_p50 = 0.0;
  double iterations_p95 = 0.0;
  double mean_flops = 0.0;
  double mean_setup_time = 0.0;
  /// Power averaged over this group's solve windows and over the whole run.
  double mean_power = 0.0;
  double run_power = 0.0;
  double sfpw = 0.0;
  double sfpw_run = 0.0;
  double hist_lo = 0.0;
  double hist_hi = 0.0;
  std::vector<int> histogram;  // 30 logarithmic bins over [hist_lo, hist_hi]

  bool operator==(const GroupStats&) const;
};

struct EfficiencyReport {
  std::vector<GroupStats> groups;

  [[nodiscard]] const GroupStats* find(const std::string& solver, int N, int Np,
                                       const std::string& scenario = "") const;
};

inline constexpr int kHistogramBins = 30;

/// Throws InputError on an empty record set.
EfficiencyReport make_report(const std::vector<BenchRecord>& records,
                             const std::vector<power::PowerSample>& samples);

std::string report_to_csv(const EfficiencyReport& report);
std::string report_to_json(const EfficiencyReport& report);
EfficiencyReport report_from_csv(const std::string& text);
EfficiencyReport report_from_json(const std::string& text);

}  // namespace quadqp::bench
