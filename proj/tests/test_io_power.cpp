#include "quadqp/condensing.hpp"
#include "quadqp/gait_scheduler.hpp"
#include "quadqp/instance_io.hpp"
#include "quadqp/power.hpp"
#include "quadqp/solvers.hpp"

#include "support/oracles.hpp"
#include "support/random_mpc.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

using namespace quadqp;

namespace {

void expect_same(const Mat& a, const Mat& b) {
  ASSERT_EQ(a.rows(), b.rows());
  ASSERT_EQ(a.cols(), b.cols());
  for (int i = 0; i < a.size(); ++i) EXPECT_EQ(a.data()[i], b.data()[i]);
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("quadqp_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST(InstanceIo, StagewiseRoundTripIsExact) {
  std::mt19937 rng(3);
  srbd::SrbdState cur;
  const auto gait = oracle::random_gait(rng, 6, cur);
  const auto qp = mpc::build_mpc_qp(gait, cur, srbd::SrbdParams{});
  const auto back = std::get<StagewiseQp>(io::parse_instance(io::to_json(qp)));
  ASSERT_EQ(back.stages.size(), qp.stages.size());
  expect_same(back.x0, qp.x0);
  for (std::size_t k = 0; k < qp.stages.size(); ++k) {
    const auto& a = qp.stages[k];
    const auto& b = back.stages[k];
    expect_same(a.A, b.A);
    expect_same(a.B, b.B);
    expect_same(a.Q, b.Q);
    expect_same(a.R, b.R);
    expect_same(a.C, b.C);
    expect_same(a.lo, b.lo);
    expect_same(a.hi, b.hi);
    expect_same(a.u_lo, b.u_lo);
    expect_same(a.u_hi, b.u_hi);
  }
  // Same problem, same answer.
  EXPECT_EQ(solve_riccati_ipm(back).objective, solve_riccati_ipm(qp).objective);
}

TEST(InstanceIo, DenseRoundTripKeepsInfiniteBounds) {
  std::mt19937 rng(5);
  auto qp = oracle::random_dense_qp(rng, 6, 2, 3);
  qp.x_lo(0) = -kInf;
  qp.x_hi(1) = kInf;
  const auto back = std::get<DenseQp>(io::parse_instance(io::to_json(qp)));
  expect_same(back.H, qp.H);
  expect_same(back.A_eq, qp.A_eq);
  expect_same(back.C, qp.C);
  EXPECT_EQ(back.x_lo(0), -kInf);
  EXPECT_EQ(back.x_hi(1), kInf);
  expect_same(back.c_lo, qp.c_lo);
}

TEST(InstanceIo, MpcTickRebuildsTheSameProblem) {
  gait::ScenarioStream stream(gait::scenario("trotting"), gait::scenario_gait("trotting", 10));
  for (int i = 0; i < 150; ++i) stream.next();
  const auto tick = stream.next();
  io::MpcTick t{"trotting", tick.index, tick.time, tick.current, tick.gait, srbd::SrbdParams{}};
  const auto back = std::get<io::MpcTick>(io::parse_instance(io::to_json(t)));
  EXPECT_EQ(back.tick, t.tick);
  const auto a = mpc::build_mpc_qp(t.gait, t.current, t.params);
  const auto b = mpc::build_mpc_qp(back.gait, back.current, back.params);
  EXPECT_EQ(flatten(a).H, flatten(b).H);
  EXPECT_EQ(flatten(a).A_eq, flatten(b).A_eq);
  EXPECT_EQ(flatten(a).b_eq, flatten(b).b_eq);
}

TEST(InstanceIo, RejectsMalformedInput) {
  EXPECT_THROW(io::parse_instance("not json"), InputError);
  EXPECT_THROW(io::parse_instance(R"({"kind":"mystery"})"), InputError);
  EXPECT_THROW(io::parse_instance(R"({"n":2})"), InputError);
  EXPECT_THROW(io::parse_instance(R"({"kind":"dense","n":2,"H":[1,0,0],"g":[0,0],"constant":0,
      "A_eq":[],"b_eq":[],"C":[],"c_lo":[],"c_hi":[],"x_lo":[null,null],"x_hi":[null,null]})"),
               DimensionError);
  EXPECT_THROW(io::load_instance("/nonexistent/file.json"), InputError);
}

TEST(Rapl, PowerFromEnergyDelta) {
  EXPECT_DOUBLE_EQ(*power::rapl_power(1'000'000, 6'000'000, 0.1, std::nullopt), 50.0);
  EXPECT_DOUBLE_EQ(*power::rapl_power(42, 42, 0.1, 262144.0), 0.0);
}

TEST(Rapl, WraparoundIsUnwrapped) {
  // 262144 µJ range, counter goes 262000 -> 100 in 0.01 s: 244 µJ.
  const auto p = power::rapl_power(262000, 100, 0.01, 262144.0);
  ASSERT_TRUE(p);
  EXPECT_NEAR(*p, 244e-6 / 0.01, 1e-12);
  EXPECT_FALSE(power::rapl_power(262000, 100, 0.01, std::nullopt));
  EXPECT_FALSE(power::rapl_power(0, 10, 0.0, std::nullopt));
}

TEST(Rapl, ReadsPowercapFiles) {
  const auto dir = temp_dir("rapl");
  auto write = [&](const std::string& f, long long v) { std::ofstream(dir / f) << v << '\n'; };
  write("max_energy_range_uj", 262144);
  write("energy_uj", 1000);
  ASSERT_TRUE(power::RaplPower::available(dir.string()));
  power::RaplPower rapl(dir.string());
  EXPECT_FALSE(rapl.read(0.0));  // first reading has no delta
  write("energy_uj", 201000);
  EXPECT_NEAR(*rapl.read(0.1), 2.0, 1e-12);
  write("energy_uj", 100);  // wrapped
  EXPECT_NEAR(*rapl.read(0.2), (262144 - 201000 + 100) * 1e-6 / 0.1, 1e-9);
  EXPECT_FALSE(power::RaplPower::available((dir / "missing").string()));
}

TEST(Rapl, UnreadableCounterFallsBackToMock) {
  const auto p = power::make_provider("rapl", "/nonexistent/intel-rapl:0", 7.0);
  EXPECT_EQ(p->name(), "mock");
  EXPECT_EQ(*p->read(0.0), 7.0);
  EXPECT_THROW(power::make_provider("nvml", "", 1.0), InputError);
}

TEST(Tegrastats, ParsesCpuRail) {
  const std::string line =
      "RAM 2448/7764MB (lfb 1x4MB) CPU [3%@1190,1%@1190] VDD_IN 4012mW/3997mW VDD_CPU_CV 1234mW/1100mW VDD_SOC 1190mW";
  EXPECT_NEAR(*power::parse_tegrastats_line(line), 1.234, 1e-12);
  EXPECT_NEAR(*power::parse_tegrastats_line(line, "VDD_IN"), 4.012, 1e-12);
  EXPECT_NEAR(*power::parse_tegrastats_line("RAM 1/2MB POM_5V_CPU 812/790", "POM_5V_CPU"), 0.812, 1e-12);
  EXPECT_FALSE(power::parse_tegrastats_line("RAM 1/2MB nothing here"));
}

TEST(Sampler, MockSamplesAreConstantAndOrdered) {
  power::MockPower mock(10.0);
  power::PowerSampler sampler(mock, std::chrono::steady_clock::now(), 0.01);
  sampler.sample_now();
  sampler.start();
  std::this_thread::sleep_for(std::chrono::milliseconds(60));
  sampler.stop();
  sampler.sample_now();
  const auto s = sampler.samples();
  ASSERT_GE(s.size(), 3u);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(s[i].watts, 10.0);
    EXPECT_EQ(s[i].source, "mock");
    if (i) EXPECT_GT(s[i].timestamp, s[i - 1].timestamp);
  }
  EXPECT_THROW(power::MockPower(-1.0), ParameterError);
}
