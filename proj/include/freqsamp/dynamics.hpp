#pragma once

// Closed-loop load-frequency-control model with virtual-synchronous-machine
// state feedback:
//
//   M(x) = m0 - K11 x1 - K12 x2,   D(x) = d0 - K21 x1 - K22 x2
//   x1' = x2
//   x2' = [ -(1/r + D) x1 + dP - tau D x2 ] / (tau M) - x2 / tau
//
// Everything here is templated on the scalar so the same expressions can be
// evaluated in extended precision by the test oracles.

#include <cmath>
#include <string>

#include "freqsamp/error.hpp"
#include "freqsamp/types.hpp"

namespace freqsamp {

namespace detail {

template <typename Scalar>
std::string describe_state(const State<Scalar>& x) {
  return "x=[" + std::to_string(static_cast<double>(x(0))) + ", " +
         std::to_string(static_cast<double>(x(1))) + "]";
}

// Numerator of the second state equation before division by tau*M.
template <typename Scalar>
Scalar feedback_numerator(const State<Scalar>& x, const Scalar& damping,
                          const SystemParams& p) {
  const Scalar tau(p.tau);
  return -(Scalar(1) / Scalar(p.r) + damping) * x(0) + Scalar(p.delta_p) -
         tau * damping * x(1);
}

}  // namespace detail

template <typename Scalar>
Scalar effective_inertia(const State<Scalar>& x, const Gains<Scalar>& theta,
                         const SystemParams& p) {
  return Scalar(p.m0) - theta(0) * x(0) - theta(1) * x(1);
}

template <typename Scalar>
Scalar effective_damping(const State<Scalar>& x, const Gains<Scalar>& theta,
                         const SystemParams& p) {
  return Scalar(p.d0) - theta(2) * x(0) - theta(3) * x(1);
}

/// Effective inertia, throwing NonPhysical when it has collapsed.
template <typename Scalar>
Scalar checked_inertia(const State<Scalar>& x, const Gains<Scalar>& theta,
                       const SystemParams& p) {
  const Scalar inertia = effective_inertia(x, theta, p);
  if (!(inertia > Scalar(kMinInertia))) {
    throw Error(ErrorKind::kNonPhysical,
                "effective inertia " +
                    std::to_string(static_cast<double>(inertia)) +
                    " at or below minimum for " + detail::describe_state(x));
  }
  return inertia;
}

template <typename Scalar>
State<Scalar> rhs(const State<Scalar>& x, const Gains<Scalar>& theta,
                  const SystemParams& p) {
  const Scalar inertia = checked_inertia(x, theta, p);
  const Scalar damping = effective_damping(x, theta, p);
  const Scalar tau(p.tau);
  State<Scalar> dx;
  dx(0) = x(1);
  dx(1) = detail::feedback_numerator(x, damping, p) / (tau * inertia) -
          x(1) / tau;
  return dx;
}

template <typename Scalar>
struct Linearization {
  State<Scalar> rhs;
  StateJacobian<Scalar> jac_x;
  Tangent<Scalar> jac_theta;
};

/// rhs with its closed-form Jacobians d rhs / d x and d rhs / d theta,
/// sharing the common terms. The chain rule runs through M(x) and D(x):
/// dM/dx = -[K11, K12], dD/dx = -[K21, K22], dM/dtheta = -[x1, x2, 0, 0],
/// dD/dtheta = -[0, 0, x1, x2]. Row 0 of d rhs / d theta is zero.
template <typename Scalar>
Linearization<Scalar> linearize(const State<Scalar>& x,
                                const Gains<Scalar>& theta,
                                const SystemParams& p) {
  const Scalar inertia = checked_inertia(x, theta, p);
  const Scalar damping = effective_damping(x, theta, p);
  const Scalar tau(p.tau);
  const Scalar numerator = detail::feedback_numerator(x, damping, p);
  const Scalar tau_m = tau * inertia;
  const Scalar tau_m2 = tau_m * inertia;
  const Scalar lever = x(0) + tau * x(1);

  Linearization<Scalar> lin;
  lin.rhs(0) = x(1);
  lin.rhs(1) = numerator / tau_m - x(1) / tau;

  lin.jac_x(0, 0) = Scalar(0);
  lin.jac_x(0, 1) = Scalar(1);
  lin.jac_x(1, 0) = (-(Scalar(1) / Scalar(p.r) + damping) + theta(2) * x(0) +
                     tau * theta(2) * x(1)) / tau_m +
                    numerator * theta(0) / tau_m2;
  lin.jac_x(1, 1) = (theta(3) * x(0) - tau * damping + tau * theta(3) * x(1)) /
                        tau_m +
                    numerator * theta(1) / tau_m2 - Scalar(1) / tau;

  lin.jac_theta.row(0).setZero();
  lin.jac_theta(1, 0) = numerator * x(0) / tau_m2;
  lin.jac_theta(1, 1) = numerator * x(1) / tau_m2;
  lin.jac_theta(1, 2) = x(0) * lever / tau_m;
  lin.jac_theta(1, 3) = x(1) * lever / tau_m;
  return lin;
}

template <typename Scalar>
StateJacobian<Scalar> jac_x(const State<Scalar>& x, const Gains<Scalar>& theta,
                            const SystemParams& p) {
  return linearize(x, theta, p).jac_x;
}

template <typename Scalar>
Tangent<Scalar> jac_theta(const State<Scalar>& x, const Gains<Scalar>& theta,
                          const SystemParams& p) {
  return linearize(x, theta, p).jac_theta;
}

struct GainValidity {
  bool feasible = false;
  double discriminant = 0.0;
};

/// Feasible iff m0^2 - 4 K12 dP >= 0.
inline GainValidity validate_gains(const Gains4d& theta,
                                   const SystemParams& p) {
  const double disc = p.m0 * p.m0 - 4.0 * theta(1) * p.delta_p;
  return {disc >= 0.0, disc};
}

namespace detail {

template <typename Scalar>
Scalar initial_discriminant(const Gains<Scalar>& theta, const SystemParams& p) {
  const Scalar disc =
      Scalar(p.m0) * Scalar(p.m0) - Scalar(4) * theta(1) * Scalar(p.delta_p);
  if (disc < Scalar(0)) {
    throw Error(ErrorKind::kInfeasibleGain,
                "K12=" + std::to_string(static_cast<double>(theta(1))) +
                    " gives negative discriminant " +
                    std::to_string(static_cast<double>(disc)));
  }
  return disc;
}

}  // namespace detail

/// Post-disturbance state [0, omega_dot(0+)].
///
/// omega_dot solves K12 w^2 - m0 w + dP = 0 on the branch that stays finite
/// as K12 -> 0. The rationalized form 2 dP / (m0 + sqrt(disc)) is that
/// branch and reduces to dP / m0 at K12 = 0 without a special case.
template <typename Scalar>
State<Scalar> initial_state(const Gains<Scalar>& theta, const SystemParams& p) {
  using std::sqrt;
  const Scalar disc = detail::initial_discriminant(theta, p);
  State<Scalar> x0;
  x0(0) = Scalar(0);
  x0(1) = Scalar(2) * Scalar(p.delta_p) / (Scalar(p.m0) + sqrt(disc));
  return x0;
}

/// Initial tangents; only the K12 column is non-zero.
template <typename Scalar>
Tangent<Scalar> initial_tangents(const Gains<Scalar>& theta,
                                 const SystemParams& p) {
  using std::sqrt;
  const Scalar disc = detail::initial_discriminant(theta, p);
  if (disc == Scalar(0)) {
    throw Error(ErrorKind::kSingularInitialTangent,
                "initial tangent is singular at zero discriminant (K12=" +
                    std::to_string(static_cast<double>(theta(1))) + ")");
  }
  const Scalar root = sqrt(disc);
  const Scalar denom = Scalar(p.m0) + root;
  Tangent<Scalar> tangents = Tangent<Scalar>::Zero();
  tangents(1, 1) = Scalar(4) * Scalar(p.delta_p) * Scalar(p.delta_p) /
                   (root * denom * denom);
  return tangents;
}

/// Closed-form step response of the uncontrolled (theta = 0) system.
/// Only the underdamped branch is implemented.
template <typename Scalar>
State<Scalar> analytic_solution_k0(const Scalar& t, const SystemParams& p) {
  using std::cos;
  using std::exp;
  using std::sin;
  using std::sqrt;
  if (t < Scalar(0)) {
    throw Error(ErrorKind::kInvalidArgument, "analytic solution needs t >= 0");
  }
  const Scalar tau(p.tau), m0(p.m0), d0(p.d0), dp(p.delta_p), r(p.r);
  const Scalar stiffness = (Scalar(1) / r + d0) / (tau * m0);
  const Scalar two_zeta_wn = d0 / m0 + Scalar(1) / tau;
  const Scalar wn = sqrt(stiffness);
  const Scalar zeta = two_zeta_wn / (Scalar(2) * wn);
  if (!(zeta < Scalar(1))) {
    throw Error(ErrorKind::kInvalidArgument,
                "analytic solution supports only underdamped parameters, "
                "zeta=" + std::to_string(static_cast<double>(zeta)));
  }
  const Scalar omega_ss = dp / (Scalar(1) / r + d0);
  const Scalar sigma = zeta * wn;
  const Scalar wd = wn * sqrt(Scalar(1) - zeta * zeta);
  const Scalar a = -omega_ss;
  const Scalar b = (dp / m0 + sigma * a) / wd;
  const Scalar decay = exp(-sigma * t);
  const Scalar c = cos(wd * t), s = sin(wd * t);
  State<Scalar> x;
  x(0) = omega_ss + decay * (a * c + b * s);
  x(1) = decay * ((wd * b - sigma * a) * c - (sigma * b + wd * a) * s);
  return x;
}

/// Equilibrium frequency deviation: root of (1/r + d0) x - K21 x^2 = dP that
/// is continuous with dP / (1/r + d0) at K21 = 0. Other gains do not enter.
template <typename Scalar>
Scalar steady_state_exact(const Gains<Scalar>& theta, const SystemParams& p) {
  using std::sqrt;
  const Scalar stiffness = Scalar(1) / Scalar(p.r) + Scalar(p.d0);
  const Scalar dp(p.delta_p);
  const Scalar disc = stiffness * stiffness - Scalar(4) * theta(2) * dp;
  if (disc < Scalar(0)) {
    throw Error(ErrorKind::kNoEquilibrium,
                "no real equilibrium for K21=" +
                    std::to_string(static_cast<double>(theta(2))));
  }
  return Scalar(2) * dp / (stiffness + sqrt(disc));
}

}  // namespace freqsamp
