#include "rvts/kernels.hpp"

#if defined(__AVX2__)
#include <immintrin.h>

#include <bit>
#include <cmath>
#endif

namespace rvts::kernels {

#if defined(__AVX2__)

namespace {

// Loads element j of four consecutive rows into one register, lane k <- row r+k.
inline __m256d load_column(const double* rows, std::size_t r, std::size_t dim, std::size_t j) {
  if (dim == 1) return _mm256_loadu_pd(rows + r);
  const __m256i idx = _mm256_set_epi64x(static_cast<long long>((r + 3) * dim + j),
                                        static_cast<long long>((r + 2) * dim + j),
                                        static_cast<long long>((r + 1) * dim + j),
                                        static_cast<long long>(r * dim + j));
  return _mm256_i64gather_pd(rows, idx, 8);
}

void row_norm2(const double* rows, std::size_t n_rows, std::size_t dim, double* out) {
  std::size_t r = 0;
  for (; r + 4 <= n_rows; r += 4) {
    __m256d s = _mm256_setzero_pd();
    for (std::size_t j = 0; j < dim; ++j) {
      const __m256d x = load_column(rows, r, dim, j);
      s = _mm256_add_pd(s, _mm256_mul_pd(x, x));
    }
    _mm256_storeu_pd(out + r, _mm256_sqrt_pd(s));
  }
  scalar_table().row_norm2(rows + r * dim, n_rows - r, dim, out + r);
}

void row_weighted_norm2(const double* rows, std::size_t n_rows, std::size_t dim,
                        const double* weights, double* out) {
  std::size_t r = 0;
  for (; r + 4 <= n_rows; r += 4) {
    __m256d s = _mm256_setzero_pd();
    for (std::size_t j = 0; j < dim; ++j) {
      const __m256d x = load_column(rows, r, dim, j);
      const __m256d w = _mm256_set1_pd(weights[j]);
      s = _mm256_add_pd(s, _mm256_mul_pd(_mm256_mul_pd(x, x), w));
    }
    _mm256_storeu_pd(out + r, _mm256_sqrt_pd(s));
  }
  scalar_table().row_weighted_norm2(rows + r * dim, n_rows - r, dim, weights, out + r);
}

void row_max_abs(const double* rows, std::size_t n_rows, std::size_t dim, double* out) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  std::size_t r = 0;
  for (; r + 4 <= n_rows; r += 4) {
    __m256d m = _mm256_setzero_pd();
    for (std::size_t j = 0; j < dim; ++j) {
      const __m256d a = _mm256_andnot_pd(sign, load_column(rows, r, dim, j));
      // a > m ? a : m, matching the scalar select
      m = _mm256_blendv_pd(m, a, _mm256_cmp_pd(a, m, _CMP_GT_OQ));
    }
    _mm256_storeu_pd(out + r, m);
  }
  scalar_table().row_max_abs(rows + r * dim, n_rows - r, dim, out + r);
}

std::size_t count_greater(const double* values, std::size_t n, double threshold) {
  const __m256d t = _mm256_set1_pd(threshold);
  std::size_t c = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(values + i);
    c += static_cast<std::size_t>(
        std::popcount(static_cast<unsigned>(_mm256_movemask_pd(_mm256_cmp_pd(v, t, _CMP_GT_OQ)))));
  }
  return c + scalar_table().count_greater(values + i, n - i, threshold);
}

void scale(const double* in, std::size_t n, double factor, double* out) {
  const __m256d f = _mm256_set1_pd(factor);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _mm256_mul_pd(f, _mm256_loadu_pd(in + i)));
  scalar_table().scale(in + i, n - i, factor, out + i);
}

}  // namespace

namespace detail {

const Table* make_avx2_table() noexcept {
  static const Table table{Isa::Avx2, row_norm2, row_weighted_norm2, row_max_abs,
                           count_greater, scale};
  return &table;
}

}  // namespace detail

#else

namespace detail {
const Table* make_avx2_table() noexcept { return nullptr; }
}  // namespace detail

#endif

}  // namespace rvts::kernels
