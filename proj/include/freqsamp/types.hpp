#pragma once

#include <Eigen/Core>

namespace freqsamp {

/// [omega, omega_dot] in p.u. and p.u./s.
template <typename Scalar>
using State = Eigen::Matrix<Scalar, 2, 1>;

/// Feedback gains [K11, K12, K21, K22].
template <typename Scalar>
using Gains = Eigen::Matrix<Scalar, 4, 1>;

/// Column i holds d x / d theta_i.
template <typename Scalar>
using Tangent = Eigen::Matrix<Scalar, 2, 4>;

template <typename Scalar>
using StateJacobian = Eigen::Matrix<Scalar, 2, 2>;

using State2d = State<double>;
using Gains4d = Gains<double>;
using Tangent24d = Tangent<double>;

struct Thresholds {
  double ss_hz = 0.5;
  double nadir_hz = 0.8;
  // Listed in Hz in the source table; treated as Hz/s.
  double rocof_hz_s = 1.0;
};

/// Physical constants, disturbance, criteria thresholds and the time grid.
/// Defaults are the reference LFC case.
struct SystemParams {
  double r = 0.06;
  double tau = 10.0;
  double m0 = 6.0;
  double d0 = 5.0;
  double delta_p = -0.12;
  double f_base = 50.0;
  Thresholds thresholds;
  double horizon_t = 60.0;
  double dt = 1e-3;

  /// Throws Error(kInvalidArgument) naming the first violated field.
  void validate() const;

  /// Number of integration steps, horizon_t / dt rounded; throws when dt
  /// does not divide the horizon within 1e-9.
  long steps() const;
};

/// Inertia below this is treated as collapse.
inline constexpr double kMinInertia = 1e-6;

}  // namespace freqsamp
