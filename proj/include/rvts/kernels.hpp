#pragma once

#include <cstddef>
#include <span>

// Data-parallel inner loops. Every kernel has a scalar reference variant and,
// on x86-64 hosts that report AVX2, a vectorized variant selected at runtime.
// The vector variants vectorize across independent rows/elements and keep the
// scalar per-element operation order (no FMA contraction), so both variants
// return bit-identical results; the kernel tests hold them to that.
namespace rvts::kernels {

enum class Isa { Scalar, Avx2 };

struct Table {
  Isa isa;
  // out[r] = sqrt(sum_j rows[r*dim+j]^2)
  void (*row_norm2)(const double* rows, std::size_t n_rows, std::size_t dim, double* out);
  // out[r] = sqrt(sum_j rows[r*dim+j]^2 * weights[j])
  void (*row_weighted_norm2)(const double* rows, std::size_t n_rows, std::size_t dim,
                             const double* weights, double* out);
  // out[r] = max_j |rows[r*dim+j]|
  void (*row_max_abs)(const double* rows, std::size_t n_rows, std::size_t dim, double* out);
  // #{i : values[i] > threshold}
  std::size_t (*count_greater)(const double* values, std::size_t n, double threshold);
  // out[i] = factor * in[i]; in and out may alias
  void (*scale)(const double* in, std::size_t n, double factor, double* out);
};

const Table& scalar_table() noexcept;
// nullptr when the host (or build) has no AVX2 support.
const Table* avx2_table() noexcept;

// Table in use: AVX2 when available unless RVTS_SIMD=scalar is set.
const Table& active() noexcept;
const char* isa_name(Isa isa) noexcept;

inline void row_norm2(std::span<const double> rows, std::size_t dim, std::span<double> out) {
  active().row_norm2(rows.data(), out.size(), dim, out.data());
}
inline void row_weighted_norm2(std::span<const double> rows, std::size_t dim,
                               std::span<const double> weights, std::span<double> out) {
  active().row_weighted_norm2(rows.data(), out.size(), dim, weights.data(), out.data());
}
inline void row_max_abs(std::span<const double> rows, std::size_t dim, std::span<double> out) {
  active().row_max_abs(rows.data(), out.size(), dim, out.data());
}
inline std::size_t count_greater(std::span<const double> values, double threshold) {
  return active().count_greater(values.data(), values.size(), threshold);
}
inline void scale(std::span<const double> in, double factor, std::span<double> out) {
  active().scale(in.data(), in.size(), factor, out.data());
}

namespace detail {
const Table& make_scalar_table() noexcept;
const Table* make_avx2_table() noexcept;
}  // namespace detail

}  // namespace rvts::kernels
