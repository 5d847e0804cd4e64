#include "fastslow/rng.hpp"

#include <cmath>
#include <numbers>

namespace fastslow {

double NormalSource::uniform_open01() {
  // 53 significant bits, offset by half an ulp away from the endpoints.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double NormalSource::operator()() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = uniform_open01();
  const double u2 = uniform_open01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(phi);
  has_cached_ = true;
  return r * std::cos(phi);
}

}  // namespace fastslow
