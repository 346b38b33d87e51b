#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "rvts/rng.hpp"

namespace rvts {

// Number of worker threads; RVTS_THREADS overrides hardware_concurrency.
std::size_t worker_count();

// Runs task(i) for i in [0, n_tasks) on up to worker_count() threads.
// Tasks must write only to their own slot; callers reduce afterwards in
// index order, which keeps results independent of the worker count.
void parallel_for(std::size_t n_tasks, const std::function<void(std::size_t)>& task);

// Welford accumulator with Chan's merge.
struct RunningMoments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) noexcept {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }

  void merge(const RunningMoments& other) noexcept {
    if (other.n == 0) return;
    if (n == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(n);
    const double nb = static_cast<double>(other.n);
    const double delta = other.mean - mean;
    const double total = na + nb;
    mean += delta * (nb / total);
    m2 += other.m2 + delta * delta * (na * nb / total);
    n += other.n;
  }

  double variance() const noexcept { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

struct MCEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;

  static MCEstimate from(const RunningMoments& m) {
    return {m.mean, m.n > 0 ? std::sqrt(m.variance() / static_cast<double>(m.n)) : 0.0, m.n};
  }
};

inline constexpr std::size_t kDrawsPerChunk = 4096;

// Chunked Monte Carlo driver. `make_drawer()` is called once per chunk and
// must return a callable double(rng::Engine&) producing one sample; chunk c
// draws from base.child(c). Chunk moments are merged in chunk order.
template <class MakeDrawer>
MCEstimate monte_carlo(std::size_t n, const rng::Stream& base, MakeDrawer&& make_drawer) {
  const std::size_t chunks = (n + kDrawsPerChunk - 1) / kDrawsPerChunk;
  std::vector<RunningMoments> parts(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    auto draw = make_drawer();
    rng::Engine eng(base.child(c));
    const std::size_t begin = c * kDrawsPerChunk;
    const std::size_t end = std::min(n, begin + kDrawsPerChunk);
    RunningMoments acc;
    for (std::size_t i = begin; i < end; ++i) acc.push(draw(eng));
    parts[c] = acc;
  });
  RunningMoments total;
  for (const auto& p : parts) total.merge(p);
  return MCEstimate::from(total);
}

}  // namespace rvts
