#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>

namespace fastslow {

// Neumaier compensated accumulator. Summation order is the caller's business;
// deterministic reductions must feed values in a fixed order.
class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct MeanWithError {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

// Compensated mean and standard error of the mean.
MeanWithError mean_with_error(std::span<const double> xs);

// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

int resolve_thread_count(int requested);

// Runs fn(i) for i in [0, n) on a small worker pool (threads == 0 picks the
// hardware default). Workers pull indices from a shared atomic counter, so the
// assignment of i to worker is nondeterministic; callers needing reproducible
// results write into per-index slots and reduce sequentially afterwards.
void parallel_for_index(std::size_t n, int threads,
                        const std::function<void(std::size_t)>& fn);

}  // namespace fastslow
