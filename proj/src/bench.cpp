#include "quadqp/bench.hpp"

#include "json_util.hpp"
#include "quadqp/common.hpp"
#include "quadqp/condensing.hpp"
#include "quadqp/mpc_qp.hpp"
#include "quadqp/solvers.hpp"
#include "quadqp/wbc_qp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <tuple>

namespace quadqp::bench {

using detail::json;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw InputError("");
    return v;
  } catch (const std::exception&) {
    throw InputError("bad number '" + s + "' in " + what);
  }
}

long long to_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw InputError("");
    return v;
  } catch (const std::exception&) {
    throw InputError("bad integer '" + s + "' in " + what);
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    if (!l.empty()) lines.push_back(l);
  }
  return lines;
}

void check_identifier(const std::string& s, const std::string& what) {
  if (s.empty() || s.find_first_of(",\n\r\"") != std::string::npos) {
    throw InputError(what + " must be non-empty and free of commas and quotes");
  }
}

}  // namespace

std::string records_header() {
  return "scenario,solver,preset,N,Np,tick,status,solve_time_s,iterations,flops,timestamp_s";
}

std::string to_csv_row(const BenchRecord& r) {
  std::ostringstream os;
  os << r.scenario << ',' << r.solver << ',' << r.preset << ',' << r.N << ',' << r.Np << ',' << r.tick << ','
     << to_string(r.status) << ',' << fmt(r.solve_time) << ',' << r.iterations << ',' << r.flops << ','
     << fmt(r.timestamp);
  return os.str();
}

BenchRecord parse_record_row(const std::string& line) {
  const auto c = split(line, ',');
  if (c.size() != 11) throw InputError("record row needs 11 columns: '" + line + "'");
  BenchRecord r;
  r.scenario = c[0];
  r.solver = c[1];
  r.preset = c[2];
  r.N = static_cast<int>(to_int(c[3], "N"));
  r.Np = static_cast<int>(to_int(c[4], "Np"));
  r.tick = static_cast<int>(to_int(c[5], "tick"));
  r.status = status_from_string(c[6]);
  r.solve_time = to_double(c[7], "solve_time_s");
  r.iterations = static_cast<int>(to_int(c[8], "iterations"));
  r.flops = to_int(c[9], "flops");
  r.timestamp = to_double(c[10], "timestamp_s");
  if (!(r.solve_time >= 0.0) || r.iterations < 0 || r.flops < 0) throw InputError("negative value in record row");
  return r;
}

std::vector<BenchRecord> read_records(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != records_header()) throw InputError("'" + path + "' lacks the records header");
  std::vector<BenchRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) out.push_back(parse_record_row(lines[i]));
  return out;
}

std::vector<power::PowerSample> read_power(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != "timestamp_s,watts,source") throw InputError("'" + path + "' lacks the power header");
  std::vector<power::PowerSample> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto c = split(lines[i], ',');
    if (c.size() != 3) throw InputError("power row needs 3 columns");
    out.push_back({to_double(c[0], "timestamp_s"), to_double(c[1], "watts"), c[2]});
  }
  return out;
}

std::map<std::pair<int, std::string>, double> read_setup_times(const std::string& path) {
  std::map<std::pair<int, std::string>, double> out;
  if (!std::filesystem::exists(path)) return out;
  const auto lines = read_lines(path);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto c = split(lines[i], ',');
    if (c.size() != 3) throw InputError("setup row needs 3 columns");
    out[{static_cast<int>(to_int(c[0], "tick")), c[1]}] = to_double(c[2], "setup_time_s");
  }
  return out;
}

// ---------------------------------------------------------------- config

const std::vector<std::string>& known_solvers() {
  static const std::vector<std::string> names = {"riccati", "dense_ipm", "active_set", "stub_sleep"};
  return names;
}

bool applicable(const std::string& solver, int Np) {
  if (solver == "riccati") return Np >= 1;
  if (solver == "dense_ipm" || solver == "active_set") return Np == 0;
  return solver == "stub_sleep";
}

void BenchConfig::validate() const {
  check_identifier(scenario, "scenario");
  if (!profile && scenario != "trotting" && scenario != "standing") {
    throw InputError("unknown scenario '" + scenario + "' (trotting or standing, or give a profile)");
  }
  if (profile) profile->validate(gait::CommandLimits{});
  if (horizons.empty()) throw InputError("no horizons configured");
  for (int N : horizons) {
    if (N < 1) throw ParameterError("horizon must be >= 1");
  }
  if (condensing.empty()) throw InputError("no condensing levels configured");
  for (int Np : condensing) {
    if (Np < 0) throw ParameterError("condensing level must be >= 0");
  }
  if (solvers.empty()) throw InputError("no solvers configured");
  for (const auto& s : solvers) {
    if (std::find(known_solvers().begin(), known_solvers().end(), s) == known_solvers().end()) {
      throw InputError("unknown solver '" + s + "'");
    }
  }
  if (presets.empty()) throw InputError("no presets configured");
  if (repetitions < 1) throw ParameterError("repetitions must be >= 1");
  if (max_ticks < 0) throw ParameterError("max_ticks must be >= 0");
  if (!(position_noise >= 0.0) || !(velocity_noise >= 0.0)) throw ParameterError("noise must be >= 0");
  if (wbc.formulation != "reduced" && wbc.formulation != "full") {
    throw InputError("wbc formulation must be reduced or full");
  }
  if (wbc.solver != "active_set" && wbc.solver != "dense_ipm") {
    throw InputError("wbc solver must be active_set or dense_ipm");
  }
  if (wbc.ratio < 1) throw ParameterError("wbc ratio must be >= 1");
  if (power != "mock" && power != "rapl") throw InputError("power must be mock or rapl");
  if (!(mock_watts >= 0.0)) throw ParameterError("mock_watts must be >= 0");
  if (!(sample_period > 0.0)) throw ParameterError("sample_period must be > 0");
  if (!(stub_sleep >= 0.0)) throw ParameterError("stub_sleep must be >= 0");
}

namespace {

double num(const json& v, const std::string& key) {
  if (!v.is_number()) throw InputError("config: '" + key + "' must be a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw InputError("config: '" + key + "' must be an integer");
  return v.get<int>();
}

bool boolean(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw InputError("config: '" + key + "' must be a boolean");
  return v.get<bool>();
}

std::string str(const json& v, const std::string& key) {
  if (!v.is_string()) throw InputError("config: '" + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<int> int_list(const json& v, const std::string& key) {
  if (v.is_number_integer()) return {v.get<int>()};
  if (!v.is_array()) throw InputError("config: '" + key + "' must be an integer or a list");
  std::vector<int> out;
  for (const auto& e : v) out.push_back(integer(e, key));
  return out;
}

std::vector<std::string> str_list(const json& v, const std::string& key) {
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) throw InputError("config: '" + key + "' must be a string or a list");
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(str(e, key));
  return out;
}

}  // namespace

BenchConfig BenchConfig::parse(const std::string& json_text) {
  const json j = detail::parse_json(json_text);
  if (!j.is_object()) throw InputError("config must be a JSON object");
  BenchConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "scenario") {
      c.scenario = str(v, key);
    } else if (key == "profile") {
      c.profile = gait::parse_profile(v.dump());
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) throw InputError("config: 'seed' must be a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    } else if (key == "N" || key == "horizons") {
      c.horizons = int_list(v, key);
    } else if (key == "Np" || key == "condensing") {
      c.condensing = int_list(v, key);
    } else if (key == "solvers") {
      c.solvers = str_list(v, key);
    } else if (key == "presets") {
      c.presets.clear();
      for (const auto& p : str_list(v, key)) c.presets.push_back(preset_from_string(p));
    } else if (key == "repetitions") {
      c.repetitions = integer(v, key);
    } else if (key == "max_ticks") {
      c.max_ticks = integer(v, key);
    } else if (key == "position_noise") {
      c.position_noise = num(v, key);
    } else if (key == "velocity_noise") {
      c.velocity_noise = num(v, key);
    } else if (key == "ipm_warm_start") {
      c.ipm_warm_start = boolean(v, key);
    } else if (key == "wbc") {
      if (!v.is_object()) throw InputError("config: 'wbc' must be an object");
      for (const auto& [wk, wv] : v.items()) {
        if (wk == "enabled") {
          c.wbc.enabled = boolean(wv, wk);
        } else if (wk == "formulation") {
          c.wbc.formulation = str(wv, wk);
        } else if (wk == "solver") {
          c.wbc.solver = str(wv, wk);
        } else if (wk == "ratio") {
          c.wbc.ratio = integer(wv, wk);
        } else if (wk == "mu") {
          c.wbc.mu = num(wv, wk);
        } else if (wk == "kp") {
          c.wbc.kp = num(wv, wk);
        } else if (wk == "kd") {
          c.wbc.kd = num(wv, wk);
        } else {
          throw InputError("config: unknown wbc key '" + wk + "'");
        }
      }
    } else if (key == "power") {
      c.power = str(v, key);
    } else if (key == "mock_watts") {
      c.mock_watts = num(v, key);
    } else if (key == "rapl_path") {
      c.rapl_path = str(v, key);
    } else if (key == "sample_period") {
      c.sample_period = num(v, key);
    } else if (key == "stub_sleep") {
      c.stub_sleep = num(v, key);
    } else {
      throw InputError("config: unknown key '" + key + "'");
    }
  }
  if (const char* env = std::getenv("QUADQP_SEED"); env && *env) {
    const long long s = to_int(env, "QUADQP_SEED");
    if (s < 0) throw InputError("QUADQP_SEED must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  c.validate();
  return c;
}

void precise_sleep(double seconds) {
  if (!(seconds > 0.0)) return;
  const auto end = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
  // The scheduler tends to overshoot by tens of microseconds; spin the tail.
  constexpr auto margin = std::chrono::microseconds(200);
  const auto coarse = end - margin;
  if (Clock::now() < coarse) std::this_thread::sleep_until(coarse);
  while (Clock::now() < end) {
  }
}

// ---------------------------------------------------------------- run

namespace {

double seconds_since(Clock::time_point origin, Clock::time_point t) {
  return std::chrono::duration<double>(t - origin).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// One condensing level of the current tick's problem.
struct Level {
  int Np = 0;
  const StagewiseQp* sparse = nullptr;  // Np == N
  std::optional<condensing::CondensedStagewise> partial;
  std::optional<condensing::CondensedDense> dense;

  [[nodiscard]] const StagewiseQp* stagewise() const { return partial ? &partial->qp : sparse; }
};

QpSolution dispatch(const std::string& solver, const Level& level, const SolverSettings& s, double stub_sleep) {
  if (solver == "riccati") return solve_riccati_ipm(*level.stagewise(), s);
  if (solver == "dense_ipm") return solve_dense_ipm(level.dense->qp, s);
  if (solver == "active_set") return solve_active_set(level.dense->qp, s);
  precise_sleep(stub_sleep);
  QpSolution sol;
  sol.status = SolveStatus::kOptimal;
  sol.objective = kNaN;
  return sol;
}

/// Original-horizon trajectory of an MPC solution at a condensing level.
std::optional<condensing::Trajectory> trajectory(const QpSolution& sol, const Level& level, const StagewiseQp& qp) {
  if (!sol.optimal() || sol.primal.size() == 0) return std::nullopt;
  if (level.partial) return condensing::expand_solution(sol, level.partial->map, qp);
  if (level.dense) return condensing::expand_solution(sol, level.dense->map, qp);
  return condensing::split_stagewise(sol.primal, qp);
}

struct WbcSetupRow {
  int tick;
  std::string solver;
  double setup_time;
};

class Sink {
 public:
  explicit Sink(const std::string& out_dir) {
    if (out_dir.empty()) return;
    std::filesystem::create_directories(out_dir);
    dir_ = out_dir;
    records_.open(dir_ + "/records.csv", std::ios::trunc);
    if (!records_) throw InputError("cannot write '" + dir_ + "/records.csv'");
    records_ << records_header() << '\n';
    records_.flush();
  }

  void record(const BenchRecord& r) {
    if (!records_.is_open()) return;
    records_ << to_csv_row(r) << '\n';
    records_.flush();
  }

  void finish(const std::vector<power::PowerSample>& samples, const std::vector<WbcSetupRow>& setup) {
    if (dir_.empty()) return;
    std::ofstream p(dir_ + "/power.csv", std::ios::trunc);
    p << "timestamp_s,watts,source\n";
    for (const auto& s : samples) p << fmt(s.timestamp) << ',' << fmt(s.watts) << ',' << s.source << '\n';
    if (!setup.empty()) {
      std::ofstream w(dir_ + "/wbc_setup.csv", std::ios::trunc);
      w << "tick,solver,setup_time_s\n";
      for (const auto& s : setup) w << s.tick << ',' << s.solver << ',' << fmt(s.setup_time) << '\n';
    }
  }

 private:
  std::string dir_;
  std::ofstream records_;
};

wbc::ToyConfig toy_for(const srbd::SrbdParams& params, const srbd::SrbdState& state, const mpc::ContactFlags& contacts) {
  wbc::ToyConfig toy;
  toy.base_mass = params.mass - 4.0 * toy.foot_mass;
  toy.base_inertia = params.body_inertia.diagonal();
  toy.gravity = state.gravity;
  toy.base_position = state.position;
  toy.yaw = state.yaw();
  toy.contacts = contacts;
  return toy;
}

}  // namespace

BenchRun run_bench(const BenchConfig& config, power::PowerProvider& provider, const std::string& out_dir) {
  config.validate();
  const srbd::SrbdParams params;
  const auto origin = Clock::now();
  power::PowerSampler sampler(provider, origin, config.sample_period);
  Sink sink(out_dir);
  BenchRun run;
  std::vector<WbcSetupRow> setup_rows;
  const std::string wbc_id = "wbc_" + config.wbc.formulation + ":" + config.wbc.solver;

  sampler.sample_now();
  sampler.start();

  for (int N : config.horizons) {
    const gait::CommandProfile profile = config.profile ? *config.profile : gait::scenario(config.scenario);
    const gait::GaitParams gp = gait::scenario_gait(config.scenario == "standing" ? "standing" : "trotting", N);
    gait::StreamOptions opts;
    opts.position_noise = config.position_noise;
    opts.velocity_noise = config.velocity_noise;
    opts.seed = config.seed;
    gait::ScenarioStream stream(profile, gp, {}, opts);
    const int ticks = config.max_ticks > 0 ? std::min(config.max_ticks, stream.num_ticks()) : stream.num_ticks();

    std::vector<int> levels;
    for (int Np : config.condensing) {
      if (Np <= N && std::find(levels.begin(), levels.end(), Np) == levels.end()) levels.push_back(Np);
    }
    std::map<std::tuple<std::string, Preset, int>, WarmStart> warm;

    for (int i = 0; i < ticks; ++i) {
      const gait::Tick tick = stream.next();
      const StagewiseQp qp = mpc::build_mpc_qp(tick.gait, tick.current, params);
      std::optional<Vec> u0;

      for (int Np : levels) {
        Level level;
        level.Np = Np;
        bool prepared = false;
        for (const auto& solver : config.solvers) {
          if (!applicable(solver, Np)) continue;
          if (!prepared) {
            // Condensing is setup work and stays outside the timed region.
            if (Np == N) {
              level.sparse = &qp;
            } else if (Np == 0) {
              level.dense = condensing::full_condense(qp);
            } else {
              level.partial = condensing::condense(qp, condensing::partition(N, Np));
            }
            prepared = true;
          }
          for (Preset preset : config.presets) {
            SolverSettings s = SolverSettings::from_preset(preset);
            s.ipm_warm_start = config.ipm_warm_start;
            const auto key = std::make_tuple(solver, preset, Np);
            if (auto it = warm.find(key); it != warm.end()) s.warm_start = it->second;

            QpSolution sol;
            std::vector<double> times;
            double start_ts = 0.0;
            for (int rep = 0; rep < config.repetitions; ++rep) {
              const auto t0 = Clock::now();
              sol = dispatch(solver, level, s, config.stub_sleep);
              const auto t1 = Clock::now();
              if (rep == 0) start_ts = seconds_since(origin, t0);
              times.push_back(std::chrono::duration<double>(t1 - t0).count());
            }
            if (sol.optimal() && solver != "stub_sleep") warm[key] = sol.as_warm_start();

            BenchRecord r;
            r.scenario = config.scenario;
            r.solver = solver;
            r.preset = to_string(preset);
            r.N = N;
            r.Np = Np;
            r.tick = i;
            r.status = sol.status;
            r.solve_time = median(times);
            r.iterations = sol.iterations;
            r.flops = sol.flops;
            r.timestamp = start_ts;
            if (const auto traj = trajectory(sol, level, qp)) {
              r.objective = traj->objective;
              if (!u0) u0 = traj->u[0];
            }
            sink.record(r);
            run.records.push_back(std::move(r));
          }
        }
      }

      if (!config.wbc.enabled) continue;
      const srbd::SrbdState& target = tick.gait.targets[0];
      const mpc::ContactFlags& contacts = tick.gait.contacts[0];
      for (int k = 0; k < config.wbc.ratio; ++k) {
        const double a = static_cast<double>(k) / config.wbc.ratio;
        const srbd::SrbdState state = srbd::SrbdState::from_vector((1.0 - a) * tick.current.to_vector() + a * target.to_vector());
        const auto t_setup = Clock::now();
        const wbc::DynamicsSnapshot snap = wbc::make_toy_snapshot(toy_for(params, state, contacts));

        wbc::WbcCommand cmd;
        Vec6 pos_err, vel_err;
        pos_err << target.position - state.position, target.orientation - state.orientation;
        vel_err << target.linear_velocity - state.linear_velocity, target.angular_velocity - state.angular_velocity;
        cmd.task_accelerations.push_back(wbc::pd_task_acceleration(pos_err, vel_err, config.wbc.kp, config.wbc.kd));
        for (std::size_t t = 1; t < snap.tasks.size(); ++t) cmd.task_accelerations.push_back(Vec::Zero(6));
        const Vec forces = u0 ? *u0
                              : Vec(mpc::balancing_forces(tick.gait.feet[0], contacts, state.position,
                                                          params.mass * state.gravity));
        cmd.desired_forces.resize(snap.num_contact_rows());
        int row = 0;
        for (int leg = 0; leg < srbd::kNumLegs; ++leg) {
          if (!contacts[leg]) continue;
          cmd.desired_forces.segment<3>(row) = forces.segment<3>(3 * leg);
          row += 3;
        }
        cmd.force_weights = Vec::Constant(snap.num_contact_rows(), 0.1);
        const wbc::WbcProblem prob = config.wbc.formulation == "reduced" ? wbc::build_reduced_tsid(snap, cmd, config.wbc.mu)
                                                                         : wbc::build_full_tsid(snap, cmd, config.wbc.mu);
        const auto t0 = Clock::now();
        const QpSolution sol =
            config.wbc.solver == "active_set" ? solve_active_set(prob.qp) : solve_dense_ipm(prob.qp);
        const auto t1 = Clock::now();

        BenchRecord r;
        r.scenario = config.scenario;
        r.solver = wbc_id;
        r.preset = to_string(Preset::kBalance);
        r.N = N;
        r.Np = -1;
        r.tick = i * config.wbc.ratio + k;
        r.status = sol.status;
        r.solve_time = std::chrono::duration<double>(t1 - t0).count();
        r.iterations = sol.iterations;
        r.flops = sol.flops;
        r.timestamp = seconds_since(origin, t0);
        r.objective = sol.optimal() ? sol.objective : kNaN;
        r.setup_time = std::chrono::duration<double>(t0 - t_setup).count();
        setup_rows.push_back({r.tick, r.solver, r.setup_time});
        sink.record(r);
        run.records.push_back(std::move(r));
      }
    }
  }

  sampler.stop();
  sampler.sample_now();
  run.power = sampler.samples();
  sink.finish(run.power, setup_rows);
  return run;
}

// ---------------------------------------------------------------- report

double compute_sfpw(double mean_solve_time, double mean_power) {
  if (!(mean_solve_time > 0.0) || !(mean_power > 0.0)) {
    throw InputError("SFPW needs a positive mean solve time and mean power");
  }
  return 1.0 / mean_solve_time / mean_power;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw InputError("percentile of an empty set");
  if (!(p > 0.0 && p <= 100.0)) throw ParameterError("percentile must lie in (0, 100]");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  return values[std::max<std::size_t>(rank, 1) - 1];
}

namespace {

/// Linear interpolation of the sampled power, held constant past the ends.
double power_at(const std::vector<power::PowerSample>& s, double t) {
  if (t <= s.front().timestamp) return s.front().watts;
  if (t >= s.back().timestamp) return s.back().watts;
  const auto it = std::upper_bound(s.begin(), s.end(), t,
                                   [](double v, const power::PowerSample& p) { return v < p.timestamp; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double w = (t - a.timestamp) / (b.timestamp - a.timestamp);
  return a.watts + w * (b.watts - a.watts);
}

double run_mean_power(const std::vector<power::PowerSample>& s) {
  if (s.size() == 1) return s[0].watts;
  double area = 0.0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    area += 0.5 * (s[i].watts + s[i - 1].watts) * (s[i].timestamp - s[i - 1].timestamp);
  }
  const double span = s.back().timestamp - s.front().timestamp;
  if (!(span > 0.0)) {
    double sum = 0.0;
    for (const auto& p : s) sum += p.watts;
    return sum / static_cast<double>(s.size());
  }
  return area / span;
}

double sfpw_or_nan(double t, double p) {
  return (t > 0.0 && p > 0.0) ? compute_sfpw(t, p) : kNaN;
}

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

}  // namespace

bool GroupStats::operator==(const GroupStats& o) const {
  return scenario == o.scenario && solver == o.solver && preset == o.preset && N == o.N && Np == o.Np &&
         count == o.count && failures == o.failures && same(mean_solve_time, o.mean_solve_time) &&
         same(p50, o.p50) && same(p95, o.p95) && same(p99, o.p99) && same(mean_iterations, o.mean_iterations) &&
         same(iterations_p50, o.iterations_p50) && same(iterations_p95, o.iterations_p95) &&
         same(mean_flops, o.mean_flops) && same(mean_setup_time, o.mean_setup_time) &&
         same(mean_power, o.mean_power) && same(run_power, o.run_power) && same(sfpw, o.sfpw) &&
         same(sfpw_run, o.sfpw_run) && same(hist_lo, o.hist_lo) && same(hist_hi, o.hist_hi) &&
         histogram == o.histogram;
}

const GroupStats* EfficiencyReport::find(const std::string& solver, int N, int Np, const std::string& scenario) const {
  for (const auto& g : groups) {
    if (g.solver == solver && g.N == N && g.Np == Np && (scenario.empty() || g.scenario == scenario)) return &g;
  }
  return nullptr;
}

EfficiencyReport make_report(const std::vector<BenchRecord>& records, const std::vector<power::PowerSample>& samples) {
  if (records.empty()) throw InputError("no records to report");
  std::vector<power::PowerSample> s = samples;
  std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  const double run_power = s.empty() ? kNaN : run_mean_power(s);

  using Key = std::tuple<std::string, std::string, std::string, int, int>;
  std::map<Key, std::vector<const BenchRecord*>> groups;
  for (const auto& r : records) groups[{r.scenario, r.solver, r.preset, r.N, r.Np}].push_back(&r);

  EfficiencyReport rep;
  for (const auto& [key, rs] : groups) {
    GroupStats g;
    std::tie(g.scenario, g.solver, g.preset, g.N, g.Np) = key;
    g.count = static_cast<int>(rs.size());
    std::vector<double> times, iters;
    double flops = 0.0, setup = 0.0, energy = 0.0;
    for (const auto* r : rs) {
      if (r->status != SolveStatus::kOptimal) ++g.failures;
      times.push_back(r->solve_time);
      iters.push_back(r->iterations);
      flops += static_cast<double>(r->flops);
      setup += r->setup_time;
      if (!s.empty()) energy += r->solve_time * power_at(s, r->timestamp + 0.5 * r->solve_time);
    }
    const double n = g.count;
    double total_time = 0.0;
    for (double t : times) total_time += t;
    g.mean_solve_time = total_time / n;
    g.p50 = percentile(times, 50);
    g.p95 = percentile(times, 95);
    g.p99 = percentile(times, 99);
    double it_sum = 0.0;
    for (double v : iters) it_sum += v;
    g.mean_iterations = it_sum / n;
    g.iterations_p50 = percentile(iters, 50);
    g.iterations_p95 = percentile(iters, 95);
    g.mean_flops = flops / n;
    g.mean_setup_time = setup / n;
    if (s.empty()) {
      g.mean_power = kNaN;
    } else if (total_time > 0.0) {
      g.mean_power = energy / total_time;
    } else {
      g.mean_power = power_at(s, rs.front()->timestamp);
    }
    g.run_power = run_power;
    g.sfpw = sfpw_or_nan(g.mean_solve_time, g.mean_power);
    g.sfpw_run = sfpw_or_nan(g.mean_solve_time, g.run_power);

    g.histogram.assign(kHistogramBins, 0);
    const auto [lo, hi] = std::minmax_element(times.begin(), times.end());
    g.hist_lo = *lo;
    g.hist_hi = *hi;
    const bool log_ok = *lo > 0.0 && *hi > *lo;
    for (double t : times) {
      int b = 0;
      if (log_ok) {
        const double f = (std::log(t) - std::log(*lo)) / (std::log(*hi) - std::log(*lo));
        b = std::clamp(static_cast<int>(f * kHistogramBins), 0, kHistogramBins - 1);
      }
      ++g.histogram[b];
    }
    rep.groups.push_back(std::move(g));
  }
  return rep;
}

namespace {

const char* kReportHeader =
    "scenario,solver,preset,N,Np,count,failures,mean_solve_time_s,p50_s,p95_s,p99_s,mean_iterations,"
    "iterations_p50,iterations_p95,mean_flops,mean_setup_s,mean_power_w,run_power_w,sfpw_hz_per_w,"
    "sfpw_run_hz_per_w,hist_lo_s,hist_hi_s,histogram";

json num_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double num_from(const json& j, const std::string& key) {
  const json& v = detail::field(j, key);
  if (v.is_null()) return kNaN;
  if (!v.is_number()) throw InputError("report: '" + key + "' must be a number or null");
  return v.get<double>();
}

}  // namespace

std::string report_to_csv(const EfficiencyReport& report) {
  std::ostringstream os;
  os << kReportHeader << '\n';
  for (const auto& g : report.groups) {
    os << g.scenario << ',' << g.solver << ',' << g.preset << ',' << g.N << ',' << g.Np << ',' << g.count << ','
       << g.failures;
    for (double v : {g.mean_solve_time, g.p50, g.p95, g.p99, g.mean_iterations, g.iterations_p50, g.iterations_p95,
                     g.mean_flops, g.mean_setup_time, g.mean_power, g.run_power, g.sfpw, g.sfpw_run, g.hist_lo,
                     g.hist_hi}) {
      os << ',' << fmt(v);
    }
    os << ',';
    for (std::size_t i = 0; i < g.histogram.size(); ++i) os << (i ? ";" : "") << g.histogram[i];
    os << '\n';
  }
  return os.str();
}

EfficiencyReport report_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) throw InputError("report CSV lacks its header");
  EfficiencyReport rep;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line, ',');
    if (c.size() != 23) throw InputError("report row needs 23 columns");
    GroupStats g;
    g.scenario = c[0];
    g.solver = c[1];
    g.preset = c[2];
    g.N = static_cast<int>(to_int(c[3], "N"));
    g.Np = static_cast<int>(to_int(c[4], "Np"));
    g.count = static_cast<int>(to_int(c[5], "count"));
    g.failures = static_cast<int>(to_int(c[6], "failures"));
    double* fields[] = {&g.mean_solve_time, &g.p50,        &g.p95,        &g.p99,       &g.mean_iterations,
                        &g.iterations_p50,  &g.iterations_p95, &g.mean_flops, &g.mean_setup_time, &g.mean_power,
                        &g.run_power,       &g.sfpw,       &g.sfpw_run,   &g.hist_lo,   &g.hist_hi};
    for (int k = 0; k < 15; ++k) *fields[k] = to_double(c[7 + k], "report");
    for (const auto& b : split(c[22], ';')) g.histogram.push_back(static_cast<int>(to_int(b, "histogram")));
    rep.groups.push_back(std::move(g));
  }
  return rep;
}

std::string report_to_json(const EfficiencyReport& report) {
  json arr = json::array();
  for (const auto& g : report.groups) {
    arr.push_back({{"scenario", g.scenario},
                   {"solver", g.solver},
                   {"preset", g.preset},
                   {"N", g.N},
                   {"Np", g.Np},
                   {"count", g.count},
                   {"failures", g.failures},
                   {"mean_solve_time_s", num_json(g.mean_solve_time)},
                   {"p50_s", num_json(g.p50)},
                   {"p95_s", num_json(g.p95)},
                   {"p99_s", num_json(g.p99)},
                   {"mean_iterations", num_json(g.mean_iterations)},
                   {"iterations_p50", num_json(g.iterations_p50)},
                   {"iterations_p95", num_json(g.iterations_p95)},
                   {"mean_flops", num_json(g.mean_flops)},
                   {"mean_setup_s", num_json(g.mean_setup_time)},
                   {"mean_power_w", num_json(g.mean_power)},
                   {"run_power_w", num_json(g.run_power)},
                   {"sfpw_hz_per_w", num_json(g.sfpw)},
                   {"sfpw_run_hz_per_w", num_json(g.sfpw_run)},
                   {"hist_lo_s", num_json(g.hist_lo)},
                   {"hist_hi_s", num_json(g.hist_hi)},
                   {"histogram", g.histogram}});
  }
  return json{{"groups", arr}}.dump(2);
}

EfficiencyReport report_from_json(const std::string& text) {
  const json j = detail::parse_json(text);
  const json& arr = detail::field(j, "groups");
  if (!arr.is_array()) throw InputError("report: 'groups' must be an array");
  EfficiencyReport rep;
  for (const auto& e : arr) {
    GroupStats g;
    g.scenario = detail::field(e, "scenario").get<std::string>();
    g.solver = detail::field(e, "solver").get<std::string>();
    g.preset = detail::field(e, "preset").get<std::string>();
    g.N = detail::field(e, "N").get<int>();
    g.Np = detail::field(e, "Np").get<int>();
    g.count = detail::int_field(e, "count");
    g.failures = detail::int_field(e, "failures");
    g.mean_solve_time = num_from(e, "mean_solve_time_s");
    g.p50 = num_from(e, "p50_s");
    g.p95 = num_from(e, "p95_s");
    g.p99 = num_from(e, "p99_s");
    g.mean_iterations = num_from(e, "mean_iterations");
    g.iterations_p50 = num_from(e, "iterations_p50");
    g.iterations_p95 = num_from(e, "iterations_p95");
    g.mean_flops = num_from(e, "mean_flops");
    g.mean_setup_time = num_from(e, "mean_setup_s");
    g.mean_power = num_from(e, "mean_power_w");
    g.run_power = num_from(e, "run_power_w");
    g.sfpw = num_from(e, "sfpw_hz_per_w");
    g.sfpw_run = num_from(e, "sfpw_run_hz_per_w");
    g.hist_lo = num_from(e, "hist_lo_s");
    g.hist_hi = num_from(e, "hist_hi_s");
    g.histogram = detail::field(e, "histogram").get<std::vector<int>>();
    rep.groups.push_back(std::move(g));
  }
  return rep;
}

}  // namespace quadqp::bench
