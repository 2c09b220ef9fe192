#include "plumerl/tensor.hpp"

#include "plumerl/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace plumerl {

namespace {
void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}
} // namespace

void matmul(const Tensor2& a, const Tensor2& b, Tensor2& out) {
  require(a.cols == b.rows, "matmul: inner dimensions differ");
  if (out.rows != a.rows || out.cols != b.cols) out = Tensor2(a.rows, b.cols);
  else out.fill(0.0);
  // i-k-j order: unit stride over b and out rows, vectorizes on j.
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (int k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row(k);
      for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
}

void matmul_at_b_acc(const Tensor2& a, const Tensor2& d, Tensor2& out) {
  require(a.rows == d.rows, "matmul_at_b_acc: batch dimensions differ");
  require(out.rows == a.cols && out.cols == d.cols, "matmul_at_b_acc: bad output shape");
  for (int b = 0; b < a.rows; ++b) {
    const double* arow = a.row(b);
    const double* drow = d.row(b);
    for (int m = 0; m < a.cols; ++m) {
      const double am = arow[m];
      if (am == 0.0) continue;
      double* orow = out.row(m);
      for (int k = 0; k < d.cols; ++k) orow[k] += am * drow[k];
    }
  }
}

void matmul_a_bt(const Tensor2& d, const Tensor2& w, Tensor2& out) {
  require(d.cols == w.cols, "matmul_a_bt: inner dimensions differ");
  if (out.rows != d.rows || out.cols != w.rows) out = Tensor2(d.rows, w.rows);
  for (int b = 0; b < d.rows; ++b) {
    const double* drow = d.row(b);
    double* orow = out.row(b);
    for (int m = 0; m < w.rows; ++m) {
      const double* wrow = w.row(m);
      double s = 0.0;
      for (int k = 0; k < d.cols; ++k) s += drow[k] * wrow[k];
      orow[m] = s;
    }
  }
}

void colsum_acc(const Tensor2& d, Tensor2& out) {
  require(out.rows == 1 && out.cols == d.cols, "colsum_acc: bad output shape");
  double* orow = out.row(0);
  for (int b = 0; b < d.rows; ++b) {
    const double* drow = d.row(b);
    for (int k = 0; k < d.cols; ++k) orow[k] += drow[k];
  }
}

void add_row(Tensor2& m, const Tensor2& bias) {
  require(bias.rows == 1 && bias.cols == m.cols, "add_row: bias shape mismatch");
  const double* brow = bias.row(0);
  for (int i = 0; i < m.rows; ++i) {
    double* row = m.row(i);
    for (int j = 0; j < m.cols; ++j) row[j] += brow[j];
  }
}

void fill_uniform(Tensor2& t, double bound, Rng& rng) {
  for (double& v : t.data) v = rng.uniform(-bound, bound);
}

bool all_finite(const Tensor2& t) {
  for (double v : t.data)
    if (!std::isfinite(v)) return false;
  return true;
}

void check_finite(const Tensor2& t, const char* what) {
  if (!all_finite(t)) throw std::domain_error(std::string("non-finite values in ") + what);
}

} // namespace plumerl
