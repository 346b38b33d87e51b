#include <cmath>

#include "rvts/kernels.hpp"

namespace rvts::kernels {

namespace {

void row_norm2(const double* rows, std::size_t n_rows, std::size_t dim, double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) {
    const double* x = rows + r * dim;
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) s = s + x[j] * x[j];
    out[r] = std::sqrt(s);
  }
}

void row_weighted_norm2(const double* rows, std::size_t n_rows, std::size_t dim,
                        const double* weights, double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) {
    const double* x = rows + r * dim;
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) s = s + (x[j] * x[j]) * weights[j];
    out[r] = std::sqrt(s);
  }
}

void row_max_abs(const double* rows, std::size_t n_rows, std::size_t dim, double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) {
    const double* x = rows + r * dim;
    double m = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double a = std::fabs(x[j]);
      m = a > m ? a : m;
    }
    out[r] = m;
  }
}

std::size_t count_greater(const double* values, std::size_t n, double threshold) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += values[i] > threshold ? 1 : 0;
  return c;
}

void scale(const double* in, std::size_t n, double factor, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = factor * in[i];
}

}  // namespace

namespace detail {

const Table& make_scalar_table() noexcept {
  static const Table table{Isa::Scalar, row_norm2, row_weighted_norm2, row_max_abs,
                           count_greater, scale};
  return table;
}

}  // namespace detail

}  // namespace rvts::kernels
