#include "quadqp/bench.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace quadqp;
using namespace quadqp::bench;

namespace {

BenchConfig small_config(int ticks) {
  BenchConfig c;
  c.scenario = "trotting";
  c.horizons = {10};
  c.condensing = {10, 0};
  c.solvers = {"riccati", "dense_ipm"};
  c.max_ticks = ticks;
  c.seed = 7;
  return c;
}

BenchRecord record(const std::string& solver, double t, double ts, int iters = 5) {
  BenchRecord r;
  r.scenario = "trotting";
  r.solver = solver;
  r.preset = "balance";
  r.N = 10;
  r.Np = 10;
  r.solve_time = t;
  r.timestamp = ts;
  r.iterations = iters;
  r.flops = 1000;
  return r;
}

}  // namespace

TEST(Sfpw, WorkedExamples) {
  EXPECT_DOUBLE_EQ(compute_sfpw(1e-3, 10.0), 100.0);
  EXPECT_DOUBLE_EQ(compute_sfpw(2e-3, 5.0), 100.0);
  EXPECT_DOUBLE_EQ(compute_sfpw(0.5, 1.0), 2.0);
  EXPECT_THROW(compute_sfpw(0.0, 10.0), InputError);
  EXPECT_THROW(compute_sfpw(1e-3, 0.0), InputError);
  EXPECT_THROW(compute_sfpw(-1.0, 1.0), InputError);
}

TEST(Percentile, NearestRank) {
  EXPECT_EQ(percentile({1, 2, 3}, 50), 2);
  EXPECT_EQ(percentile({3, 1, 2}, 100), 3);
  EXPECT_EQ(percentile({5}, 1), 5);
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  EXPECT_EQ(percentile(v, 95), 95);
  EXPECT_EQ(percentile(v, 99), 99);
  EXPECT_THROW(percentile({}, 50), InputError);
  EXPECT_THROW(percentile({1.0}, 0.0), ParameterError);
}

TEST(Report, WindowedPowerFollowsTheSignal) {
  // Power ramps 0 -> 20 W over 2 s; group A runs around t = 0.5, B around 1.5.
  std::vector<power::PowerSample> s = {{0.0, 0.0, "mock"}, {2.0, 20.0, "mock"}};
  std::vector<BenchRecord> rs = {record("a", 0.1, 0.45), record("b", 0.1, 1.45)};
  const auto rep = make_report(rs, s);
  EXPECT_NEAR(rep.find("a", 10, 10)->mean_power, 5.0, 1e-12);
  EXPECT_NEAR(rep.find("b", 10, 10)->mean_power, 15.0, 1e-12);
  EXPECT_NEAR(rep.find("a", 10, 10)->run_power, 10.0, 1e-12);
  EXPECT_NEAR(rep.find("a", 10, 10)->sfpw, 1.0 / 0.1 / 5.0, 1e-9);
  EXPECT_NEAR(rep.find("a", 10, 10)->sfpw_run, 1.0, 1e-9);
}

TEST(Report, StatisticsAndHistogram) {
  std::vector<BenchRecord> rs;
  for (int i = 1; i <= 100; ++i) rs.push_back(record("x", i * 1e-4, i * 0.01, i % 7));
  rs[3].status = SolveStatus::kMaxIter;
  const auto rep = make_report(rs, {{0.0, 10.0, "mock"}, {2.0, 10.0, "mock"}});
  ASSERT_EQ(rep.groups.size(), 1u);
  const auto& g = rep.groups[0];
  EXPECT_EQ(g.count, 100);
  EXPECT_EQ(g.failures, 1);
  EXPECT_NEAR(g.mean_solve_time, 50.5e-4, 1e-15);
  EXPECT_DOUBLE_EQ(g.p50, 50e-4);
  EXPECT_DOUBLE_EQ(g.p95, 95e-4);
  EXPECT_DOUBLE_EQ(g.p99, 99e-4);
  EXPECT_DOUBLE_EQ(g.mean_power, 10.0);
  ASSERT_EQ(g.histogram.size(), static_cast<std::size_t>(kHistogramBins));
  int total = 0;
  for (int c : g.histogram) total += c;
  EXPECT_EQ(total, 100);
  EXPECT_EQ(g.histogram.front(), 1);
  EXPECT_GE(g.histogram.back(), 1);
  EXPECT_THROW(make_report({}, {}), InputError);
}

TEST(Report, SfpwScalesInverselyWithTime) {
  const std::vector<power::PowerSample> s = {{0.0, 8.0, "mock"}, {10.0, 8.0, "mock"}};
  const auto a = make_report({record("x", 1e-3, 1.0)}, s).groups[0].sfpw;
  const auto b = make_report({record("x", 2e-3, 1.0)}, s).groups[0].sfpw;
  EXPECT_NEAR(a / b, 2.0, 1e-12);
}

TEST(Report, CsvAndJsonRoundTrip) {
  std::vector<BenchRecord> rs;
  for (int i = 0; i < 40; ++i) {
    rs.push_back(record(i % 2 ? "riccati" : "dense_ipm", 1e-4 * (1.0 + std::sin(i) * 0.3), 0.013 * i, i % 5));
    rs.back().Np = i % 2 ? 10 : 0;
    rs.back().flops = 12345 + i;
  }
  const auto rep = make_report(rs, {{0.0, 9.5, "mock"}, {0.3, 11.25, "mock"}, {0.6, 10.0, "mock"}});
  const auto from_csv = report_from_csv(report_to_csv(rep));
  const auto from_json = report_from_json(report_to_json(rep));
  ASSERT_EQ(from_csv.groups.size(), rep.groups.size());
  ASSERT_EQ(from_json.groups.size(), rep.groups.size());
  for (std::size_t i = 0; i < rep.groups.size(); ++i) {
    EXPECT_TRUE(from_csv.groups[i] == rep.groups[i]);
    EXPECT_TRUE(from_json.groups[i] == rep.groups[i]);
  }
  // No power samples: power fields become NaN / null and still round-trip.
  const auto bare = make_report(rs, {});
  EXPECT_TRUE(std::isnan(bare.groups[0].sfpw));
  EXPECT_TRUE(report_from_json(report_to_json(bare)).groups[0] == bare.groups[0]);
  EXPECT_TRUE(report_from_csv(report_to_csv(bare)).groups[0] == bare.groups[0]);
}

TEST(Records, CsvRowRoundTrip) {
  auto r = record("riccati", 1.0 / 3.0, 12.345678901234567, 9);
  r.Np = 4;
  r.tick = 77;
  r.status = SolveStatus::kInfeasible;
  r.flops = 9876543210LL;
  const auto back = parse_record_row(to_csv_row(r));
  EXPECT_EQ(back.solver, r.solver);
  EXPECT_EQ(back.Np, 4);
  EXPECT_EQ(back.tick, 77);
  EXPECT_EQ(back.status, SolveStatus::kInfeasible);
  EXPECT_EQ(back.solve_time, r.solve_time);
  EXPECT_EQ(back.timestamp, r.timestamp);
  EXPECT_EQ(back.flops, r.flops);
  EXPECT_THROW(parse_record_row("a,b,c"), InputError);
  EXPECT_THROW(parse_record_row("s,r,balance,10,10,1,optimal,abc,1,1,0"), InputError);
}

TEST(Config, ParsesAndValidates) {
  const auto c = BenchConfig::parse(R"({"scenario":"standing","seed":3,"N":[10,20],"Np":[20,5,0],
      "solvers":["riccati","active_set"],"presets":["speed"],"repetitions":3,"max_ticks":5,
      "wbc":{"enabled":false,"ratio":2},"power":"mock","mock_watts":12.5})");
  EXPECT_EQ(c.scenario, "standing");
  EXPECT_EQ(c.horizons, (std::vector<int>{10, 20}));
  EXPECT_EQ(c.condensing, (std::vector<int>{20, 5, 0}));
  EXPECT_EQ(c.presets, (std::vector<Preset>{Preset::kSpeed}));
  EXPECT_EQ(c.repetitions, 3);
  EXPECT_FALSE(c.wbc.enabled);
  EXPECT_EQ(c.mock_watts, 12.5);
  EXPECT_THROW(BenchConfig::parse(R"({"solvers":["osqp"]})"), InputError);
  EXPECT_THROW(BenchConfig::parse(R"({"bogus":1})"), InputError);
  EXPECT_THROW(BenchConfig::parse(R"({"N":[0]})"), ParameterError);
  EXPECT_THROW(BenchConfig::parse(R"({"scenario":"galloping"})"), InputError);
  EXPECT_THROW(BenchConfig::parse(R"({"wbc":{"formulation":"half"}})"), InputError);
}

TEST(Config, SeedEnvironmentOverride) {
  ::setenv("QUADQP_SEED", "99", 1);
  const auto c = BenchConfig::parse(R"({"seed":3})");
  ::unsetenv("QUADQP_SEED");
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(BenchConfig::parse(R"({"seed":3})").seed, 3u);
}

TEST(Bench, SolverApplicability) {
  EXPECT_TRUE(applicable("riccati", 10));
  EXPECT_TRUE(applicable("riccati", 1));
  EXPECT_FALSE(applicable("riccati", 0));
  EXPECT_TRUE(applicable("dense_ipm", 0));
  EXPECT_FALSE(applicable("active_set", 3));
  EXPECT_TRUE(applicable("stub_sleep", 0));
  EXPECT_FALSE(applicable("qpoases", 0));
}

TEST(Bench, PreciseSleepHitsTarget) {
  using Clock = std::chrono::steady_clock;
  std::vector<double> dt;
  for (int i = 0; i < 21; ++i) {
    const auto t0 = Clock::now();
    precise_sleep(1e-3);
    dt.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
  }
  EXPECT_GE(*std::min_element(dt.begin(), dt.end()), 1e-3);
  EXPECT_LT(percentile(dt, 50), 1.05e-3);
}

TEST(Bench, RecordCountsAndFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "quadqp_bench_counts";
  std::filesystem::remove_all(dir);
  power::MockPower mock(10.0);
  const auto run = run_bench(small_config(100), mock, dir.string());
  int mpc = 0, wbc = 0;
  for (const auto& r : run.records) (r.Np < 0 ? wbc : mpc)++;
  EXPECT_EQ(mpc, 200);
  EXPECT_EQ(wbc, 500);
  const auto back = read_records((dir / "records.csv").string());
  ASSERT_EQ(back.size(), run.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].solver, run.records[i].solver);
    EXPECT_EQ(back[i].solve_time, run.records[i].solve_time);
    EXPECT_EQ(back[i].flops, run.records[i].flops);
  }
  const auto p = read_power((dir / "power.csv").string());
  ASSERT_GE(p.size(), 2u);
  for (const auto& s : p) EXPECT_EQ(s.watts, 10.0);
  EXPECT_EQ(read_setup_times((dir / "wbc_setup.csv").string()).size(), 500u);
  for (const auto& r : run.records) EXPECT_EQ(r.status, SolveStatus::kOptimal) << r.solver << " tick " << r.tick;
}

TEST(Bench, DeterministicExceptTiming) {
  power::MockPower mock(10.0);
  auto c = small_config(30);
  c.wbc.ratio = 2;
  const auto a = run_bench(c, mock);
  const auto b = run_bench(c, mock);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& x = a.records[i];
    const auto& y = b.records[i];
    EXPECT_EQ(x.solver, y.solver);
    EXPECT_EQ(x.Np, y.Np);
    EXPECT_EQ(x.tick, y.tick);
    EXPECT_EQ(x.status, y.status);
    EXPECT_EQ(x.iterations, y.iterations);
    EXPECT_EQ(x.flops, y.flops);
    EXPECT_TRUE(x.objective == y.objective || (std::isnan(x.objective) && std::isnan(y.objective)));
  }
}

TEST(Bench, SolversAgreePerTick) {
  power::MockPower mock(10.0);
  auto c = small_config(60);
  c.condensing = {10, 5, 1, 0};
  c.solvers = {"riccati", "dense_ipm", "active_set"};
  c.wbc.enabled = false;
  const auto run = run_bench(c, mock);
  std::map<int, std::vector<double>> by_tick;
  for (const auto& r : run.records) {
    ASSERT_TRUE(std::isfinite(r.objective)) << r.solver << " Np " << r.Np;
    by_tick[r.tick].push_back(r.objective);
  }
  for (const auto& [tick, objs] : by_tick) {
    ASSERT_EQ(objs.size(), 5u);
    for (double o : objs) EXPECT_NEAR(o, objs[0], 1e-5 * std::max(1.0, std::abs(objs[0]))) << "tick " << tick;
  }
}

// Light condensing first lowers the Riccati cost (a 13-state stage is dropped
// per merge while the block input stays small), then the block inputs take
// over: flops fall to a single minimum and rise monotonically after it.
TEST(Bench, RiccatiFlopsAreUnimodalInCondensing) {
  power::MockPower mock(10.0);
  auto c = small_config(80);
  c.condensing = {10, 9, 8, 7, 6, 5, 4, 3, 2, 1};
  c.solvers = {"riccati"};
  c.wbc.enabled = false;
  const auto rep = make_report(run_bench(c, mock).records, {});
  std::vector<double> flops;
  for (int Np = 10; Np >= 1; --Np) {
    const auto* g = rep.find("riccati", 10, Np);
    ASSERT_NE(g, nullptr);
    flops.push_back(g->mean_flops);
  }
  const auto k = static_cast<std::size_t>(std::min_element(flops.begin(), flops.end()) - flops.begin());
  for (std::size_t i = 1; i <= k; ++i) EXPECT_LE(flops[i], flops[i - 1]) << "Np " << 10 - static_cast<int>(i);
  for (std::size_t i = k + 1; i < flops.size(); ++i) EXPECT_GE(flops[i], flops[i - 1]) << "Np " << 10 - static_cast<int>(i);
  EXPECT_GT(flops.back(), 2.0 * flops.front());
}

TEST(Bench, StubSolverGivesHundredFramesPerWatt) {
  power::MockPower mock(10.0);
  BenchConfig c;
  c.solvers = {"stub_sleep"};
  c.condensing = {10};
  c.max_ticks = 150;
  c.repetitions = 3;  // median per record keeps one preempted sleep from skewing the mean
  c.wbc.enabled = false;
  const auto run = run_bench(c, mock);
  const auto rep = make_report(run.records, run.power);
  const auto* g = rep.find("stub_sleep", 10, 10);
  ASSERT_NE(g, nullptr);
  EXPECT_EQ(g->count, 150);
  EXPECT_NEAR(g->sfpw, 100.0, 5.0);
  EXPECT_EQ(g->mean_flops, 0.0);
}
