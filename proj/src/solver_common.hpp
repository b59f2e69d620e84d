#pragma once

#include "quadqp/qp_types.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace quadqp::detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline void check_settings(const SolverSettings& s, const char* who) {
  if (!(s.tolerance > 0.0) || !std::isfinite(s.tolerance)) {
    throw ParameterError(std::string(who) + ": tolerance must be positive");
  }
  if (s.max_iterations < 1) throw ParameterError(std::string(who) + ": max_iterations must be >= 1");
}

inline double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

/// IPM stopping test on the internal residual merit. Iterates to two orders
/// below the tolerance, but accepts 0.1·tol once progress stalls or the
/// iteration cap is reached; the caller then checks the independent KKT
/// residuals against the tolerance.
inline bool should_verify(double merit, double prev_merit, double tol, bool at_cap) {
  if (merit <= 1e-2 * tol) return true;
  if (merit <= 0.1 * tol && merit > 0.5 * prev_merit) return true;
  return at_cap && merit <= tol;
}

/// Dual threshold beyond which an IPM declares the problem infeasible.
inline constexpr double kDivergedDual = 1e12;

}  // namespace quadqp::detail
