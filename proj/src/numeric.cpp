#include "fastslow/numeric.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace fastslow {

MeanWithError mean_with_error(std::span<const double> xs) {
  MeanWithError r;
  r.n = xs.size();
  if (r.n == 0) return r;
  KahanSum sum;
  for (double x : xs) sum.add(x);
  r.mean = sum.value() / static_cast<double>(r.n);
  if (r.n < 2) return r;
  KahanSum sq;
  for (double x : xs) {
    const double d = x - r.mean;
    sq.add(d * d);
  }
  const double var = sq.value() / static_cast<double>(r.n - 1);
  r.std_error = std::sqrt(var / static_cast<double>(r.n));
  return r;
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  KahanSum sx, sy;
  for (std::size_t i = 0; i < n; ++i) {
    sx.add(x[i]);
    sy.add(y[i]);
  }
  const double mx = sx.value() / static_cast<double>(n);
  const double my = sy.value() / static_cast<double>(n);
  KahanSum sxy, sxx;
  for (std::size_t i = 0; i < n; ++i) {
    sxy.add((x[i] - mx) * (y[i] - my));
    sxx.add((x[i] - mx) * (x[i] - mx));
  }
  return sxy.value() / sxx.value();
}

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for_index(std::size_t n, int threads,
                        const std::function<void(std::size_t)>& fn) {
  const int workers = std::min<std::size_t>(resolve_thread_count(threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace fastslow
