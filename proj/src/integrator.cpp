#include "freqsamp/integrator.hpp"

#include <cmath>

#include "parallel.hpp"

namespace freqsamp {

ProbeResult integrate_probe(const Gains4d& theta, const SystemParams& p,
                            std::span<const long> indices, Scheme scheme) {
  p.validate();
  const long n_steps = p.steps();
  for (long idx : indices) {
    if (idx < 0 || idx > n_steps) {
      throw Error(ErrorKind::kInvalidArgument,
                  "probe index " + std::to_string(idx) + " outside grid");
    }
  }
  ProbeResult out;
  out.sampled.assign(indices.size(), State2d::Zero());
  detail::AugmentedState<double> s{initial_state(theta, p),
                                   Tangent24d::Zero()};
  auto& sum = out.summary;
  sum.dt = p.dt;
  sum.last_index = n_steps;
  sum.has_tangents = false;
  sum.peak_x1 = {0, 0.0, s.base, s.tangent};
  sum.peak_x2 = sum.peak_x1;
  auto record = [&](long n) {
    for (std::size_t k = 0; k < indices.size(); ++k) {
      if (indices[k] == n) out.sampled[k] = s.base;
    }
  };
  record(0);
  for (long n = 1; n <= n_steps; ++n) {
    try {
      detail::step(s, theta, p, p.dt, scheme, false);
    } catch (const Error& e) {
      throw Error(e.kind(), e.what() + detail::at_time((n - 1) * p.dt));
    }
    const double t = static_cast<double>(n) * p.dt;
    if (!s.base.allFinite()) {
      throw Error(ErrorKind::kNonPhysical, "non-finite state" + detail::at_time(t));
    }
    detail::track_peak(sum.peak_x1, 0, n, t, s);
    detail::track_peak(sum.peak_x2, 1, n, t, s);
    record(n);
  }
  sum.terminal = {n_steps, static_cast<double>(n_steps) * p.dt, s.base,
                  s.tangent};
  return out;
}

std::vector<Outcome<RunResultd>> integrate_batch(std::span<const Gains4d> thetas,
                                                 const SystemParams& p,
                                                 const IntegratorOptions& opts) {
  std::vector<Outcome<RunResultd>> out(thetas.size());
  detail::parallel_for(thetas.size(), [&](std::size_t i) {
    try {
      out[i].value = integrate(thetas[i], p, opts);
    } catch (const Error& e) {
      out[i].error = ErrorRecord{e.kind(), e.what()};
    }
  });
  return out;
}

ConvergenceProbe convergence_probe(const SystemParams& p,
                                   std::span<const double> dts, int component,
                                   Scheme scheme) {
  ConvergenceProbe probe;
  const Gains4d zero = Gains4d::Zero();
  for (double dt : dts) {
    SystemParams q = p;
    q.dt = dt;
    const auto run = integrate(zero, q, {false, Storage::kFull, scheme});
    double worst = 0.0;
    for (std::size_t n = 0; n < run.trajectory->size(); ++n) {
      const State2d exact = analytic_solution_k0(run.trajectory->times[n], q);
      worst = std::max(worst, std::abs(run.trajectory->states[n](component) -
                                       exact(component)));
    }
    probe.dts.push_back(dt);
    probe.max_errors.push_back(worst);
  }
  if (probe.dts.size() < 2) {
    probe.note = "need at least two step sizes to estimate an order";
    return probe;
  }
  // Least-squares slope of log(err) on log(dt).
  const double n = static_cast<double>(probe.dts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < probe.dts.size(); ++i) {
    const double lx = std::log(probe.dts[i]);
    const double ly = std::log(probe.max_errors[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) {
    probe.note = "step sizes must differ";
    return probe;
  }
  probe.order = (n * sxy - sx * sy) / denom;
  return probe;
}

}  // namespace freqsamp
