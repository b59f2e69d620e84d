#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace quadqp::power {

struct PowerSample {
  double timestamp = 0.0;  // seconds on the bench clock (monotonic)
  double watts = 0.0;
  std::string source;
};

/// A source of CPU power readings. `read(t)` is called by the sampler at
/// monotonic time t; returning nullopt drops that sample.
class PowerProvider {
 public:
  virtual ~PowerProvider() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  virtual std::optional<double> read(double t) = 0;
};

class MockPower : public PowerProvider {
 public:
  explicit MockPower(double watts = 10.0);
  [[nodiscard]] std::string name() const override { return "mock"; }
  std::optional<double> read(double) override { return watts_; }

 private:
  double watts_;
};

/// Watts from two energy-counter readings. A decreasing counter is a wrap
/// and is unwrapped with `max_range_uj`; without range info it yields nullopt.
std::optional<double> rapl_power(double prev_uj, double cur_uj, double dt, std::optional<double> max_range_uj);

/// Powercap domain directory holding `energy_uj` and `max_energy_range_uj`.
class RaplPower : public PowerProvider {
 public:
  explicit RaplPower(std::string domain_path);
  [[nodiscard]] std::string name() const override { return "rapl"; }
  std::optional<double> read(double t) override;

  /// True when the counter file can be read.
  static bool available(const std::string& domain_path);

 private:
  std::optional<double> read_counter() const;

  std::string path_;
  std::optional<double> max_range_;
  std::optional<double> last_uj_;
  double last_t_ = 0.0;
};

/// Parses the CPU rail out of one tegrastats line, e.g.
/// "... VDD_CPU_CV 1234mW/1100mW ..." or "... POM_5V_CPU 812/790 ...".
/// Returns watts of the instantaneous reading.
std::optional<double> parse_tegrastats_line(const std::string& line, const std::string& rail = "VDD_CPU_CV");

/// Replays a file of tegrastats lines, one line per sample.
class TegrastatsFile : public PowerProvider {
 public:
  TegrastatsFile(const std::string& path, std::string rail = "VDD_CPU_CV");
  [[nodiscard]] std::string name() const override { return "tegrastats"; }
  std::optional<double> read(double t) override;

 private:
  std::vector<std::string> lines_;
  std::size_t next_ = 0;
  std::string rail_;
};

/// "rapl" with a readable counter, else mock (with a warning on stderr).
std::unique_ptr<PowerProvider> make_provider(const std::string& kind, const std::string& rapl_path,
                                             double mock_watts = 10.0);

/// Background sampler at a fixed period. Samples are appended to a
/// mutex-protected log; timestamps are strictly increasing.
class PowerSampler {
 public:
  using Clock = std::chrono::steady_clock;

  PowerSampler(PowerProvider& provider, Clock::time_point origin, double period_s = 0.1);
  ~PowerSampler();
  PowerSampler(const PowerSampler&) = delete;
  PowerSampler& operator=(const PowerSampler&) = delete;

  void start();
  void stop();
  /// Takes one sample immediately (also used before start/after stop).
  void sample_now();
  [[nodiscard]] std::vector<PowerSample> samples() const;

 private:
  void loop();

  PowerProvider& provider_;
  Clock::time_point origin_;
  double period_;
  std::atomic<bool> running_{false};
  std::thread thread_;
  mutable std::mutex mutex_;
  std::vector<PowerSample> samples_;
};

}  // namespace quadqp::power
