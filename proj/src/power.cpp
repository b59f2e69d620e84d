#include "quadqp/power.hpp"

#include "quadqp/common.hpp"

#include <fstream>
#include <iostream>
#include <regex>

namespace quadqp::power {

MockPower::MockPower(double watts) : watts_(watts) {
  if (!(watts >= 0.0)) throw ParameterError("mock power must be >= 0 W");
}

std::optional<double> rapl_power(double prev_uj, double cur_uj, double dt, std::optional<double> max_range_uj) {
  if (!(dt > 0.0)) return std::nullopt;
  double delta = cur_uj - prev_uj;
  if (delta < 0.0) {
    if (!max_range_uj || !(*max_range_uj > 0.0)) return std::nullopt;
    delta += *max_range_uj;
    if (delta < 0.0) return std::nullopt;
  }
  return delta * 1e-6 / dt;
}

namespace {

std::optional<double> read_number(const std::string& path) {
  std::ifstream in(path);
  double v = 0.0;
  if (!in || !(in >> v)) return std::nullopt;
  return v;
}

}  // namespace

RaplPower::RaplPower(std::string domain_path) : path_(std::move(domain_path)) {
  max_range_ = read_number(path_ + "/max_energy_range_uj");
}

bool RaplPower::available(const std::string& domain_path) {
  return read_number(domain_path + "/energy_uj").has_value();
}

std::optional<double> RaplPower::read_counter() const {
  return read_number(path_ + "/energy_uj");
}

std::optional<double> RaplPower::read(double t) {
  const auto cur = read_counter();
  if (!cur) return std::nullopt;
  std::optional<double> p;
  if (last_uj_) p = rapl_power(*last_uj_, *cur, t - last_t_, max_range_);
  last_uj_ = cur;
  last_t_ = t;
  return p;
}

std::optional<double> parse_tegrastats_line(const std::string& line, const std::string& rail) {
  const std::regex re(rail + R"(\s+(\d+)(?:mW)?/(\d+)(?:mW)?)");
  std::smatch m;
  if (!std::regex_search(line, m, re)) return std::nullopt;
  return std::stod(m[1].str()) * 1e-3;
}

TegrastatsFile::TegrastatsFile(const std::string& path, std::string rail) : rail_(std::move(rail)) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open tegrastats log '" + path + "'");
  for (std::string l; std::getline(in, l);) lines_.push_back(l);
}

std::optional<double> TegrastatsFile::read(double) {
  if (next_ >= lines_.size()) return std::nullopt;
  return parse_tegrastats_line(lines_[next_++], rail_);
}

std::unique_ptr<PowerProvider> make_provider(const std::string& kind, const std::string& rapl_path,
                                             double mock_watts) {
  if (kind == "mock") return std::make_unique<MockPower>(mock_watts);
  if (kind == "rapl") {
    if (RaplPower::available(rapl_path)) return std::make_unique<RaplPower>(rapl_path);
    std::cerr << "warning: RAPL counter at '" << rapl_path << "' is not readable, using mock power\n";
    return std::make_unique<MockPower>(mock_watts);
  }
  throw InputError("unknown power provider '" + kind + "' (expected rapl or mock)");
}

PowerSampler::PowerSampler(PowerProvider& provider, Clock::time_point origin, double period_s)
    : provider_(provider), origin_(origin), period_(period_s) {
  if (!(period_s > 0.0)) throw ParameterError("sampling period must be positive");
}

PowerSampler::~PowerSampler() { stop(); }

void PowerSampler::start() {
  if (running_.exchange(true)) return;
  thread_ = std::thread([this] { loop(); });
}

void PowerSampler::stop() {
  if (!running_.exchange(false)) return;
  if (thread_.joinable()) thread_.join();
}

void PowerSampler::sample_now() {
  std::lock_guard<std::mutex> lock(mutex_);
  const double t = std::chrono::duration<double>(Clock::now() - origin_).count();
  if (!samples_.empty() && t <= samples_.back().timestamp) return;
  const auto w = provider_.read(t);
  if (w && *w >= 0.0) samples_.push_back({t, *w, provider_.name()});
}

std::vector<PowerSample> PowerSampler::samples() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return samples_;
}

void PowerSampler::loop() {
  auto next = Clock::now();
  const auto period = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(period_));
  while (running_) {
    sample_now();
    next += period;
    std::this_thread::sleep_until(next);
  }
}

}  // namespace quadqp::power
