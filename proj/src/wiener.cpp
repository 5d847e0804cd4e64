#include "fastslow/wiener.hpp"

#include <cmath>

#include "fastslow/errors.hpp"
#include "fastslow/rng.hpp"

namespace fastslow {

std::vector<double> uniform_grid(double horizon, int n_steps) {
  if (!(horizon > 0) || n_steps < 1)
    throw InvalidGrid("uniform grid needs horizon > 0 and n_steps >= 1");
  std::vector<double> t(n_steps + 1);
  for (int k = 0; k <= n_steps; ++k)
    t[k] = horizon * static_cast<double>(k) / n_steps;
  return t;
}

WienerPath sample_wiener(std::uint64_t seed, std::uint64_t path_index,
                         std::span<const double> t_grid, int m_noise) {
  if (t_grid.size() < 2) throw InvalidGrid("time grid needs >= 2 points");
  if (t_grid[0] != 0.0) throw InvalidGrid("time grid must start at 0");
  for (std::size_t k = 1; k < t_grid.size(); ++k)
    if (!(t_grid[k] > t_grid[k - 1]))
      throw InvalidGrid("time grid must be strictly increasing");
  if (m_noise < 1) throw InvalidGrid("noise dimension must be >= 1");

  WienerPath p;
  p.t.assign(t_grid.begin(), t_grid.end());
  p.seed = seed;
  p.path_index = path_index;
  const int steps = static_cast<int>(t_grid.size()) - 1;
  p.increments.resize(steps, m_noise);
  NormalSource z(seed, path_index, kStreamWiener);
  for (int k = 0; k < steps; ++k) {
    const double sd = std::sqrt(p.dt(k));
    for (int j = 0; j < m_noise; ++j) p.increments(k, j) = sd * z();
  }
  return p;
}

WienerPath coarsen_path(const WienerPath& fine, int stride) {
  if (stride < 1 || fine.steps() % stride != 0)
    throw InvalidGrid("coarsening stride must divide the step count");
  WienerPath c;
  c.seed = fine.seed;
  c.path_index = fine.path_index;
  const int steps = fine.steps() / stride;
  c.t.resize(steps + 1);
  c.increments = Mat::Zero(steps, fine.m());
  for (int k = 0; k <= steps; ++k) c.t[k] = fine.t[k * stride];
  for (int k = 0; k < steps; ++k)
    for (int s = 0; s < stride; ++s)
      c.increments.row(k) += fine.increments.row(k * stride + s);
  return c;
}

}  // namespace fastslow
