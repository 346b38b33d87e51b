#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "rvts/kernels.hpp"
#include "rvts/rng.hpp"

using namespace rvts;

namespace {

std::vector<double> random_rows(std::size_t n, std::uint64_t seed) {
  rng::Engine e(rng::Stream(seed, 1));
  std::vector<double> v(n);
  for (auto& x : v) x = e.normal() * std::exp(4 * e.normal());
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("active table is reported") {
  const auto& t = kernels::active();
  MESSAGE("active isa: " << kernels::isa_name(t.isa));
  if (const char* env = std::getenv("RVTS_SIMD"); env && std::string(env) == "scalar")
    CHECK(t.isa == kernels::scalar_table().isa);
}

TEST_CASE("avx2 kernels are bit-identical to the scalar reference") {
  const auto* avx = kernels::avx2_table();
  if (!avx) {
    MESSAGE("no AVX2 on this host; equivalence not exercised");
    return;
  }
  const auto& ref = kernels::scalar_table();
  for (std::size_t dim : {1, 2, 3, 4, 7, 16}) {
    for (std::size_t rows : {0, 1, 3, 4, 5, 31, 1000}) {
      CAPTURE(dim);
      CAPTURE(rows);
      const auto data = random_rows(rows * dim, dim * 1000 + rows);
      std::vector<double> w(dim);
      for (std::size_t j = 0; j < dim; ++j) w[j] = 1.0 / static_cast<double>(j + 1);
      std::vector<double> a(rows), b(rows);

      ref.row_norm2(data.data(), rows, dim, a.data());
      avx->row_norm2(data.data(), rows, dim, b.data());
      CHECK(same_bits(a, b));

      ref.row_weighted_norm2(data.data(), rows, dim, w.data(), a.data());
      avx->row_weighted_norm2(data.data(), rows, dim, w.data(), b.data());
      CHECK(same_bits(a, b));

      ref.row_max_abs(data.data(), rows, dim, a.data());
      avx->row_max_abs(data.data(), rows, dim, b.data());
      CHECK(same_bits(a, b));
    }
  }
  for (std::size_t n : {0, 1, 3, 4, 9, 1001}) {
    const auto data = random_rows(n, 77 + n);
    for (double thr : {-1.0, 0.0, 0.5, 3.0}) CHECK(ref.count_greater(data.data(), n, thr) == avx->count_greater(data.data(), n, thr));
    std::vector<double> a(n), b(n);
    ref.scale(data.data(), n, 1.0 / 3.0, a.data());
    avx->scale(data.data(), n, 1.0 / 3.0, b.data());
    CHECK(same_bits(a, b));
  }
}

TEST_CASE("scalar kernels against direct formulas") {
  const auto& ref = kernels::scalar_table();
  const std::vector<double> rows{3, 4, -5, 12, 0, 0};
  std::vector<double> out(3);
  ref.row_norm2(rows.data(), 3, 2, out.data());
  CHECK(out == std::vector<double>{5, 13, 0});
  ref.row_max_abs(rows.data(), 3, 2, out.data());
  CHECK(out == std::vector<double>{4, 12, 0});
  const std::vector<double> w{1.0, 0.25};
  ref.row_weighted_norm2(rows.data(), 3, 2, w.data(), out.data());
  CHECK(out[0] == doctest::Approx(std::sqrt(9 + 4.0)));
  CHECK(ref.count_greater(rows.data(), rows.size(), 0.0) == 3);
}

TEST_CASE("max_abs propagates like the scalar select on signed zeros") {
  const auto* avx = kernels::avx2_table();
  if (!avx) return;
  const std::vector<double> rows{-0.0, 0.0, 0.0, -0.0, 1e-320, -1e-320, 0.0, 0.0};
  std::vector<double> a(4), b(4);
  kernels::scalar_table().row_max_abs(rows.data(), 4, 2, a.data());
  avx->row_max_abs(rows.data(), 4, 2, b.data());
  CHECK(same_bits(a, b));
}

}
