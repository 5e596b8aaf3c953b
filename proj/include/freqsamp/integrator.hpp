#pragma once

// Fixed-step explicit integration of the closed-loop model and of the
// tangent-augmented system
//
//   x'  = f(x, theta)
//   X'  = df/dx X + df/dtheta,       X(0) = dx0/dtheta
//
// where column i of X is the forward sensitivity dx/dtheta_i. Every scheme
// advances X with the linearization of the very stage it applies to x, so
// the tangents are the exact derivative of the discrete map.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "freqsamp/dynamics.hpp"
#include "freqsamp/error.hpp"
#include "freqsamp/types.hpp"

namespace freqsamp {

enum class Scheme { kEuler, kRk4 };
enum class Storage { kFull, kStreaming };

struct IntegratorOptions {
  bool with_tangents = true;
  Storage storage = Storage::kFull;
  Scheme scheme = Scheme::kEuler;
};

template <typename Scalar>
struct Trajectory {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<State<Scalar>> states;
  // Empty when integrated without tangents.
  std::vector<Tangent<Scalar>> tangents;

  std::size_t size() const { return times.size(); }
  bool has_tangents() const { return !tangents.empty(); }
};

/// Value (and tangent, when tracked) at one grid point.
template <typename Scalar>
struct Snapshot {
  long index = 0;
  double time = 0.0;
  State<Scalar> state = State<Scalar>::Zero();
  Tangent<Scalar> tangent = Tangent<Scalar>::Zero();
};

/// What the stability criteria need from a run: grid argmax of |x1| and
/// |x2| (earliest on ties) and the terminal point. Produced either while
/// streaming or from a stored trajectory; both routes agree exactly.
template <typename Scalar>
struct TrajectorySummary {
  double dt = 0.0;
  long last_index = 0;
  bool has_tangents = false;
  Snapshot<Scalar> peak_x1;
  Snapshot<Scalar> peak_x2;
  Snapshot<Scalar> terminal;
};

/// Either a stored trajectory or a streaming summary, per Storage.
template <typename Scalar>
struct RunResult {
  TrajectorySummary<Scalar> summary;
  std::optional<Trajectory<Scalar>> trajectory;
};

using Trajectoryd = Trajectory<double>;
using TrajectorySummaryd = TrajectorySummary<double>;
using RunResultd = RunResult<double>;

namespace detail {

template <typename Scalar>
struct AugmentedState {
  State<Scalar> base;
  Tangent<Scalar> tangent;
};

template <typename Scalar>
AugmentedState<Scalar> augmented_rhs(const AugmentedState<Scalar>& s,
                                     const Gains<Scalar>& theta,
                                     const SystemParams& p,
                                     bool with_tangents) {
  AugmentedState<Scalar> d;
  if (!with_tangents) {
    d.base = rhs(s.base, theta, p);
    d.tangent.setZero();
    return d;
  }
  const auto lin = linearize(s.base, theta, p);
  d.base = lin.rhs;
  d.tangent.noalias() = lin.jac_x * s.tangent;
  d.tangent += lin.jac_theta;
  return d;
}

template <typename Scalar>
void step(AugmentedState<Scalar>& s, const Gains<Scalar>& theta,
          const SystemParams& p, const Scalar& dt, Scheme scheme,
          bool with_tangents) {
  if (scheme == Scheme::kEuler) {
    const auto d = augmented_rhs(s, theta, p, with_tangents);
    s.base += dt * d.base;
    if (with_tangents) s.tangent += dt * d.tangent;
    return;
  }
  const Scalar half = dt / Scalar(2);
  auto shifted = [&](const AugmentedState<Scalar>& d, const Scalar& h) {
    AugmentedState<Scalar> out{s.base + h * d.base, s.tangent};
    if (with_tangents) out.tangent += h * d.tangent;
    return out;
  };
  const auto k1 = augmented_rhs(s, theta, p, with_tangents);
  const auto k2 = augmented_rhs(shifted(k1, half), theta, p, with_tangents);
  const auto k3 = augmented_rhs(shifted(k2, half), theta, p, with_tangents);
  const auto k4 = augmented_rhs(shifted(k3, dt), theta, p, with_tangents);
  const Scalar sixth = dt / Scalar(6);
  s.base += sixth * (k1.base + Scalar(2) * k2.base + Scalar(2) * k3.base +
                     k4.base);
  if (with_tangents) {
    s.tangent += sixth * (k1.tangent + Scalar(2) * k2.tangent +
                          Scalar(2) * k3.tangent + k4.tangent);
  }
}

template <typename Scalar>
bool all_finite(const AugmentedState<Scalar>& s) {
  return s.base.allFinite() && s.tangent.allFinite();
}

template <typename Scalar>
void track_peak(Snapshot<Scalar>& peak, int row, long index, double time,
                const AugmentedState<Scalar>& s) {
  using std::abs;
  if (abs(s.base(row)) > abs(peak.state(row))) {
    peak = {index, time, s.base, s.tangent};
  }
}

inline std::string at_time(double t) { return " (t=" + std::to_string(t) + " s)"; }

}  // namespace detail

/// Integrates from the post-disturbance initial condition over the grid
/// t_n = n dt, n = 0..T/dt.
///
/// Throws InfeasibleGain for an infeasible K12, and NonPhysical when the
/// effective inertia collapses or the state stops being finite; the message
/// names the offending time.
template <typename Scalar>
RunResult<Scalar> integrate(const Gains<Scalar>& theta, const SystemParams& p,
                            const IntegratorOptions& opts = {}) {
  p.validate();
  const long n_steps = p.steps();
  const Scalar dt(p.dt);

  detail::AugmentedState<Scalar> s{initial_state(theta, p),
                                   Tangent<Scalar>::Zero()};
  if (opts.with_tangents) s.tangent = initial_tangents(theta, p);

  RunResult<Scalar> out;
  auto& sum = out.summary;
  sum.dt = p.dt;
  sum.last_index = n_steps;
  sum.has_tangents = opts.with_tangents;
  sum.peak_x1 = {0, 0.0, s.base, s.tangent};
  sum.peak_x2 = sum.peak_x1;

  Trajectory<Scalar>* traj = nullptr;
  if (opts.storage == Storage::kFull) {
    traj = &out.trajectory.emplace();
    traj->dt = p.dt;
    traj->times.reserve(n_steps + 1);
    traj->states.reserve(n_steps + 1);
    if (opts.with_tangents) traj->tangents.reserve(n_steps + 1);
    traj->times.push_back(0.0);
    traj->states.push_back(s.base);
    if (opts.with_tangents) traj->tangents.push_back(s.tangent);
  }

  for (long n = 1; n <= n_steps; ++n) {
    const double t_prev = static_cast<double>(n - 1) * p.dt;
    try {
      detail::step(s, theta, p, dt, opts.scheme, opts.with_tangents);
    } catch (const Error& e) {
      throw Error(e.kind(), e.what() + detail::at_time(t_prev));
    }
    const double t = static_cast<double>(n) * p.dt;
    if (!detail::all_finite(s)) {
      throw Error(ErrorKind::kNonPhysical,
                  "non-finite state" + detail::at_time(t));
    }
    detail::track_peak(sum.peak_x1, 0, n, t, s);
    detail::track_peak(sum.peak_x2, 1, n, t, s);
    if (traj) {
      traj->times.push_back(t);
      traj->states.push_back(s.base);
      if (opts.with_tangents) traj->tangents.push_back(s.tangent);
    }
  }
  sum.terminal = {n_steps, static_cast<double>(n_steps) * p.dt, s.base,
                  s.tangent};
  return out;
}

/// Summary extracted from a stored trajectory. Same argmax and tie rule as
/// the streaming path.
template <typename Scalar>
TrajectorySummary<Scalar> summarize(const Trajectory<Scalar>& traj) {
  using std::abs;
  if (traj.size() == 0) {
    throw Error(ErrorKind::kInvalidArgument, "empty trajectory");
  }
  const bool tangents = traj.has_tangents();
  auto snap = [&](std::size_t i) {
    Snapshot<Scalar> s{static_cast<long>(i), traj.times[i], traj.states[i],
                       Tangent<Scalar>::Zero()};
    if (tangents) s.tangent = traj.tangents[i];
    return s;
  };
  std::size_t i1 = 0, i2 = 0;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    if (abs(traj.states[i](0)) > abs(traj.states[i1](0))) i1 = i;
    if (abs(traj.states[i](1)) > abs(traj.states[i2](1))) i2 = i;
  }
  TrajectorySummary<Scalar> sum;
  sum.dt = traj.dt;
  sum.last_index = static_cast<long>(traj.size() - 1);
  sum.has_tangents = tangents;
  sum.peak_x1 = snap(i1);
  sum.peak_x2 = snap(i2);
  sum.terminal = snap(traj.size() - 1);
  return sum;
}

/// Directional (Jacobian-vector product) form: propagates the single tangent
/// dx/dtheta * direction without forming the 2x4 sensitivity block.
/// Returns the state/tangent pair at every grid point.
template <typename Scalar>
std::vector<std::pair<State<Scalar>, State<Scalar>>> integrate_jvp(
    const Gains<Scalar>& theta, const Gains<Scalar>& direction,
    const SystemParams& p, Scheme scheme = Scheme::kEuler) {
  p.validate();
  const long n_steps = p.steps();
  const Scalar dt(p.dt);
  State<Scalar> x = initial_state(theta, p);
  State<Scalar> v = initial_tangents(theta, p) * direction;

  auto deriv = [&](const State<Scalar>& xs, const State<Scalar>& vs) {
    return std::pair<State<Scalar>, State<Scalar>>{
        rhs(xs, theta, p),
        jac_x(xs, theta, p) * vs + jac_theta(xs, theta, p) * direction};
  };

  std::vector<std::pair<State<Scalar>, State<Scalar>>> out;
  out.reserve(n_steps + 1);
  out.emplace_back(x, v);
  for (long n = 1; n <= n_steps; ++n) {
    if (scheme == Scheme::kEuler) {
      const auto [dx, dv] = deriv(x, v);
      x += dt * dx;
      v += dt * dv;
    } else {
      const Scalar half = dt / Scalar(2);
      const auto k1 = deriv(x, v);
      const auto k2 = deriv(x + half * k1.first, v + half * k1.second);
      const auto k3 = deriv(x + half * k2.first, v + half * k2.second);
      const auto k4 = deriv(x + dt * k3.first, v + dt * k3.second);
      const Scalar sixth = dt / Scalar(6);
      x += sixth * (k1.first + Scalar(2) * k2.first + Scalar(2) * k3.first +
                    k4.first);
      v += sixth * (k1.second + Scalar(2) * k2.second +
                    Scalar(2) * k3.second + k4.second);
    }
    out.emplace_back(x, v);
  }
  return out;
}

/// Summary (without tangents) plus the states at the requested grid
/// indices, in one pass and without keeping the history. The
/// finite-difference baseline uses it to difference values at the reference
/// run's critical indices while still locating its own peaks.
struct ProbeResult {
  TrajectorySummaryd summary;
  std::vector<State2d> sampled;
};

ProbeResult integrate_probe(const Gains4d& theta, const SystemParams& p,
                            std::span<const long> indices,
                            Scheme scheme = Scheme::kEuler);

struct ErrorRecord {
  ErrorKind kind = ErrorKind::kInvalidArgument;
  std::string message;
};

/// Per-element batch result. Exactly one of value / error is set.
template <typename T>
struct Outcome {
  std::optional<T> value;
  std::optional<ErrorRecord> error;

  bool ok() const { return value.has_value(); }
};

/// Element-wise integrate over a batch, fanned out over worker threads.
/// Output order matches input order; a failing element is recorded and
/// never aborts the batch.
std::vector<Outcome<RunResultd>> integrate_batch(std::span<const Gains4d> thetas,
                                                 const SystemParams& p,
                                                 const IntegratorOptions& opts);

struct ConvergenceProbe {
  std::vector<double> dts;
  std::vector<double> max_errors;
  std::optional<double> order;  // unset when fewer than two step sizes
  std::string note;
};

/// Observed order of accuracy at theta = 0 against the closed-form response,
/// as the least-squares slope of log(max error) vs log(dt). `component` 0
/// checks omega, 1 checks omega_dot.
ConvergenceProbe convergence_probe(const SystemParams& p,
                                   std::span<const double> dts,
                                   int component = 0,
                                   Scheme scheme = Scheme::kEuler);

}  // namespace freqsamp
