#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace plumerl {

class Rng;

/// Dense row-major matrix of doubles. The only numeric container the
/// network engine uses; vectors are 1×n.
struct Tensor2 {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor2() = default;
  Tensor2(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
  std::size_t size() const { return data.size(); }
  bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }
  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  static Tensor2 zeros(int r, int c) { return Tensor2(r, c); }
};

/// out = a * b. Shapes (B×M)·(M×K) -> B×K.
void matmul(const Tensor2& a, const Tensor2& b, Tensor2& out);
/// out += aᵀ * d. Shapes (B×M)ᵀ·(B×K) -> M×K. Accumulates.
void matmul_at_b_acc(const Tensor2& a, const Tensor2& d, Tensor2& out);
/// out = d * wᵀ. Shapes (B×K)·(M×K)ᵀ -> B×M.
void matmul_a_bt(const Tensor2& d, const Tensor2& w, Tensor2& out);
/// out += column sums of d (out is 1×K). Accumulates.
void colsum_acc(const Tensor2& d, Tensor2& out);
/// Adds a 1×K bias row to every row of m (K == m.cols).
void add_row(Tensor2& m, const Tensor2& bias);

/// Fills with uniform draws in [-bound, bound].
void fill_uniform(Tensor2& t, double bound, Rng& rng);

/// Throws std::domain_error naming `what` if any element is non-finite.
void check_finite(const Tensor2& t, const char* what);
bool all_finite(const Tensor2& t);

} // namespace plumerl
