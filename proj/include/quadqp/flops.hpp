#pragma once

#include <cstdint>

namespace quadqp {

/// Multiply-add counter for the dense kernels used inside the solvers.
///
/// Counts are derived from operand shapes (LAWN 41 style), never from
/// timing, so they are reproducible for a fixed instance and settings.
/// Only factorization and solve kernels are charged; problem setup is not.
class FlopCounter {
 public:
  void gemm(std::int64_t m, std::int64_t n, std::int64_t k) { total_ += m * n * k; }
  void gemv(std::int64_t m, std::int64_t n) { total_ += m * n; }
  /// Symmetric rank-k update C += A^T A with A k x n (lower triangle only).
  void syrk(std::int64_t n, std::int64_t k) { total_ += k * n * (n + 1) / 2; }
  void potrf(std::int64_t n) { total_ += n * (n + 1) * (n + 2) / 6; }
  void getrf(std::int64_t n) { total_ += (2 * n * n * n) / 3; }
  void geqrf(std::int64_t m, std::int64_t n) {
    // Householder QR, m >= n assumed by callers
    total_ += n * n * (3 * m - n) / 3;
  }
  /// Triangular solve with nrhs right-hand sides.
  void trsm(std::int64_t n, std::int64_t nrhs) { total_ += nrhs * n * (n + 1) / 2; }
  void trsv(std::int64_t n) { trsm(n, 1); }
  void axpy(std::int64_t n) { total_ += n; }
  void add(std::int64_t n) { total_ += n; }

  [[nodiscard]] std::int64_t total() const { return total_; }
  void reset() { total_ = 0; }

 private:
  std::int64_t total_ = 0;
};

}  // namespace quadqp
