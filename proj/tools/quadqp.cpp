#include "quadqp/bench.hpp"
#include "quadqp/condensing.hpp"
#include "quadqp/gait_scheduler.hpp"
#include "quadqp/instance_io.hpp"
#include "quadqp/mpc_qp.hpp"
#include "quadqp/solvers.hpp"
#include "quadqp/wbc_qp.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

using namespace quadqp;
using nlohmann::json;

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json summary(const QpSolution& sol, double objective) {
  return {{"status", to_string(sol.status)},
          {"objective", number(objective)},
          {"iterations", sol.iterations},
          {"flops", sol.flops},
          {"solve_time_s", sol.solve_time},
          {"kkt",
           {{"stationarity", sol.kkt.stationarity},
            {"primal", sol.kkt.primal},
            {"dual", sol.kkt.dual},
            {"complementarity", sol.kkt.complementarity}}}};
}

QpSolution solve_dense(const std::string& solver, const DenseQp& qp, const SolverSettings& s) {
  if (solver == "dense_ipm") return solve_dense_ipm(qp, s);
  if (solver == "active_set") return solve_active_set(qp, s);
  throw InputError("solver '" + solver + "' cannot solve a dense problem (use dense_ipm or active_set)");
}

/// Solves a stagewise problem at condensing level np (-1 keeps it sparse).
json solve_stagewise(const StagewiseQp& qp, const std::string& solver, int np, const SolverSettings& s) {
  const int N = qp.horizon();
  if (np < 0) np = solver == "riccati" ? N : 0;
  if (np > N) throw InputError("--np exceeds the horizon");
  if (np == 0) {
    const auto d = condensing::full_condense(qp);
    const auto sol = solve_dense(solver, d.qp, s);
    const double obj = sol.optimal() ? condensing::expand_solution(sol, d.map, qp).objective : sol.objective;
    return summary(sol, obj);
  }
  if (solver != "riccati") throw InputError("solver '" + solver + "' needs --np 0");
  if (np == N) {
    const auto sol = solve_riccati_ipm(qp, s);
    return summary(sol, sol.objective);
  }
  const auto c = condensing::condense(qp, condensing::partition(N, np));
  const auto sol = solve_riccati_ipm(c.qp, s);
  const double obj = sol.optimal() ? condensing::expand_solution(sol, c.map, qp).objective : sol.objective;
  return summary(sol, obj);
}

int cmd_generate(const std::string& scenario, int N, int ticks, std::uint64_t seed, double noise,
                 const std::string& out) {
  std::filesystem::create_directories(out);
  gait::StreamOptions opts;
  opts.position_noise = noise;
  opts.velocity_noise = 5.0 * noise;
  opts.seed = seed;
  gait::ScenarioStream stream(gait::scenario(scenario, seed), gait::scenario_gait(scenario, N), {}, opts);
  const int count = ticks > 0 ? std::min(ticks, stream.num_ticks()) : stream.num_ticks();
  for (int i = 0; i < count; ++i) {
    const auto t = stream.next();
    char name[32];
    std::snprintf(name, sizeof name, "tick_%05d.json", i);
    io::write_file(out + "/" + name,
                   io::to_json(io::MpcTick{scenario, t.index, t.time, t.current, t.gait, srbd::SrbdParams{}}));
  }
  std::cout << "wrote " << count << " instances to " << out << "\n";
  return 0;
}

int cmd_solve(const std::string& path, const std::string& solver, const std::string& preset, int np) {
  SolverSettings s = SolverSettings::from_preset(preset_from_string(preset));
  const io::Instance inst = io::load_instance(path);
  json result;
  if (const auto* t = std::get_if<io::MpcTick>(&inst)) {
    result = solve_stagewise(mpc::build_mpc_qp(t->gait, t->current, t->params), solver, np, s);
  } else if (const auto* qp = std::get_if<StagewiseQp>(&inst)) {
    result = solve_stagewise(*qp, solver, np, s);
  } else {
    const auto& d = std::get<DenseQp>(inst);
    const auto sol = solve_dense(solver, d, s);
    result = summary(sol, sol.objective);
  }
  std::cout << result.dump(2) << "\n";
  return result["status"] == "optimal" ? 0 : 3;
}

int cmd_wbc(const std::string& path, const std::string& formulation, const std::string& solver, double mu) {
  const auto snap = wbc::load_snapshot(path);
  wbc::WbcCommand cmd;
  for (std::size_t i = 0; i < snap.tasks.size(); ++i) cmd.task_accelerations.push_back(Vec::Zero(6));
  cmd.desired_forces = Vec::Zero(snap.num_contact_rows());
  cmd.force_weights = Vec::Constant(snap.num_contact_rows(), 0.1);
  if (formulation != "reduced" && formulation != "full") throw InputError("--formulation must be reduced or full");
  const auto prob = formulation == "reduced" ? wbc::build_reduced_tsid(snap, cmd, mu) : wbc::build_full_tsid(snap, cmd, mu);
  const auto sol = solve_dense(solver, prob.qp, {});
  json result = summary(sol, sol.objective);
  result["variables"] = prob.qp.num_vars();
  if (sol.optimal()) {
    const Vec tau = formulation == "full" ? prob.torques(sol.primal)
                                          : wbc::recover_torques(prob.qdd(sol.primal), prob.forces(sol.primal), snap);
    result["tau"] = std::vector<double>(tau.data(), tau.data() + tau.size());
  }
  std::cout << result.dump(2) << "\n";
  return sol.optimal() ? 0 : 3;
}

int cmd_bench(const std::string& config_path, const std::string& out, const std::string& power_kind,
              const std::string& rapl_path) {
  auto config = bench::BenchConfig::parse(io::read_file(config_path));
  if (!power_kind.empty()) config.power = power_kind;
  if (!rapl_path.empty()) config.rapl_path = rapl_path;
  config.validate();
  const auto provider = power::make_provider(config.power, config.rapl_path, config.mock_watts);
  const auto run = bench::run_bench(config, *provider, out);
  int failures = 0;
  for (const auto& r : run.records) failures += r.status != SolveStatus::kOptimal;
  std::cout << run.records.size() << " records (" << failures << " non-optimal), " << run.power.size()
            << " power samples from " << provider->name() << " -> " << out << "\n";
  return 0;
}

int cmd_report(const std::string& in, const std::string& format, const std::string& out) {
  const auto records = bench::read_records(in + "/records.csv");
  const std::string power_path = in + "/power.csv";
  const auto samples = std::filesystem::exists(power_path) ? bench::read_power(power_path)
                                                           : std::vector<power::PowerSample>{};
  // Setup times live in a side file; fold them back in for the report.
  auto recs = records;
  const auto setup = bench::read_setup_times(in + "/wbc_setup.csv");
  for (auto& r : recs) {
    if (auto it = setup.find({r.tick, r.solver}); it != setup.end()) r.setup_time = it->second;
  }
  const auto rep = bench::make_report(recs, samples);
  if (format != "csv" && format != "json") throw InputError("--format must be csv or json");
  const std::string text = format == "csv" ? bench::report_to_csv(rep) : bench::report_to_json(rep) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    io::write_file(out, text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quadruped MPC/WBC QP toolkit"};
  app.require_subcommand(1);

  std::string scenario = "trotting", out, instance, solver = "riccati", preset = "balance";
  int horizon = 10, ticks = 0, np = -1;
  std::uint64_t seed = 0;
  double noise = 0.0;

  auto* gen = app.add_subcommand("generate", "Write per-tick MPC instances of a scenario");
  gen->add_option("--scenario", scenario, "trotting | standing")->check(CLI::IsMember({"trotting", "standing"}));
  gen->add_option("--n", horizon, "Prediction horizon N")->check(CLI::PositiveNumber);
  gen->add_option("--ticks", ticks, "Number of ticks (0 = whole scenario)")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", seed, "Scenario and noise seed");
  gen->add_option("--noise", noise, "Position noise half-width [m]")->check(CLI::NonNegativeNumber);
  gen->add_option("--out", out, "Output directory")->required();

  auto* solve = app.add_subcommand("solve", "Solve one instance file");
  solve->add_option("--instance", instance, "Instance JSON")->required()->check(CLI::ExistingFile);
  solve->add_option("--solver", solver, "riccati | dense_ipm | active_set")
      ->check(CLI::IsMember({"riccati", "dense_ipm", "active_set"}));
  solve->add_option("--preset", preset, "balance | speed")->check(CLI::IsMember({"balance", "speed"}));
  solve->add_option("--np", np, "Condensing level (default: sparse for riccati, dense otherwise)");

  std::string snapshot, formulation = "reduced";
  double mu = 0.6;
  auto* wbc_cmd = app.add_subcommand("wbc", "Solve a hold-still WBC problem for a dynamics snapshot");
  wbc_cmd->add_option("--snapshot", snapshot, "Snapshot JSON")->required()->check(CLI::ExistingFile);
  wbc_cmd->add_option("--formulation", formulation, "reduced | full");
  wbc_cmd->add_option("--solver", solver, "active_set | dense_ipm");
  wbc_cmd->add_option("--mu", mu, "Friction coefficient");

  std::string config, power_kind, rapl_path;
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark sweep");
  bench_cmd->add_option("--config", config, "Config JSON")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--out", out, "Output directory")->required();
  bench_cmd->add_option("--power", power_kind, "rapl | mock (overrides the config)")
      ->check(CLI::IsMember({"rapl", "mock"}));
  bench_cmd->add_option("--rapl-path", rapl_path, "Powercap domain directory");

  std::string in, format = "csv";
  auto* report = app.add_subcommand("report", "Aggregate a bench directory");
  report->add_option("--in", in, "Bench output directory")->required()->check(CLI::ExistingDirectory);
  report->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  report->add_option("--out", out, "Write to a file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_generate(scenario, horizon, ticks, seed, noise, out);
    if (*solve) return cmd_solve(instance, solver, preset, np);
    if (*wbc_cmd) return cmd_wbc(snapshot, formulation, solver == "riccati" ? "active_set" : solver, mu);
    if (*bench_cmd) return cmd_bench(config, out, power_kind, rapl_path);
    if (*report) return cmd_report(in, format, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
