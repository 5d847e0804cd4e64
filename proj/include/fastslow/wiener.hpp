#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fastslow/common.hpp"

namespace fastslow {

// One realization of an m-dimensional Wiener process on a time grid.
// Regeneration from (seed, path_index) is bit-identical; distinct path
// indices give independent streams off the same root seed.
struct WienerPath {
  std::vector<double> t;  // grid, t.front() == 0, strictly increasing
  Mat increments;         // steps x m, row k ~ N(0, dt_k I)
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;

  int steps() const { return static_cast<int>(increments.rows()); }
  int m() const { return static_cast<int>(increments.cols()); }
  double dt(int k) const { return t[k + 1] - t[k]; }
};

std::vector<double> uniform_grid(double horizon, int n_steps);

WienerPath sample_wiener(std::uint64_t seed, std::uint64_t path_index,
                         std::span<const double> t_grid, int m_noise);

// Sums consecutive increments; stride must divide the step count. Both paths
// describe the same underlying w(t).
WienerPath coarsen_path(const WienerPath& fine, int stride);

}  // namespace fastslow
