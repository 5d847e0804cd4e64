#pragma once

#include <Eigen/Dense>

namespace fastslow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// CODATA 2018 exact value, J/K.
inline constexpr double kBoltzmann = 1.380649e-23;

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace fastslow
