#include "freqsamp/sensitivity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "freqsamp/memory.hpp"
#include "parallel.hpp"

namespace freqsamp {

namespace {

double sign_of(double v) { return static_cast<double>((v > 0) - (v < 0)); }

double direction_sign(SearchDirection d) {
  return d == SearchDirection::kStabilize ? -1.0 : 1.0;
}

Gains4d signed_row(const Snapshot<double>& snap, int row, double dir) {
  return dir * sign_of(snap.state(row)) * snap.tangent.row(row).transpose();
}

// Quantity order used throughout: ss, nadir, rocof.
constexpr std::array<int, 3> kQuantityRow = {0, 0, 1};

struct MethodSample {
  std::array<double, 3> values{};
  GradientSet gradients;
};

std::array<long, 3> critical_indices(const CriticalTimes& ct) {
  return {ct.i_ss, ct.i_nadir, ct.i_rocof};
}

std::array<double, 3> critical_values(const TrajectorySummaryd& s) {
  return {s.terminal.state(0), s.peak_x1.state(0), s.peak_x2.state(1)};
}

MethodSample run_one(const MethodSpec& spec, const Gains4d& theta,
                     const SystemParams& p, Scheme integrator) {
  MethodSample out;
  switch (spec.method) {
    case Method::kFmad:
    case Method::kFmadStreaming: {
      // Full-storage runs are handled batch-wide in run_method.
      const auto run = integrate(theta, p,
                                 {true, Storage::kStreaming, integrator});
      out.values = critical_values(run.summary);
      out.gradients =
          extract_gradients(run.summary, SearchDirection::kDestabilize);
      return out;
    }
    case Method::kFdForward:
    case Method::kFdCentral: {
      FdOptions fd;
      fd.scheme = spec.method == Method::kFdForward ? FdScheme::kForward
                                                    : FdScheme::kCentral;
      fd.epsilon = spec.epsilon;
      fd.relative = spec.relative_epsilon;
      fd.integrator = integrator;
      const auto res = finite_diff_gradients(theta, p, fd);
      if (!res.ok()) {
        for (const auto& e : res.component_errors) {
          if (e) throw Error(e->kind, e->message);
        }
      }
      out.values = res.reference_values;
      out.gradients = res.gradients;
      return out;
    }
  }
  return out;
}

std::vector<std::optional<MethodSample>> run_method(
    const MethodSpec& spec, std::span<const Gains4d> thetas,
    const SystemParams& p, Scheme integrator) {
  std::vector<std::optional<MethodSample>> out(thetas.size());
  if (spec.method == Method::kFmad) {
    // Whole batch held in memory at once, as a batched full-history solve.
    const auto runs = integrate_batch(thetas, p, {true, Storage::kFull, integrator});
    for (std::size_t i = 0; i < runs.size(); ++i) {
      if (!runs[i].ok()) continue;
      const auto& traj = *runs[i].value->trajectory;
      const auto summary = summarize(traj);
      MethodSample s;
      s.values = critical_values(summary);
      s.gradients = extract_gradients(traj, critical_times(summary),
                                      SearchDirection::kDestabilize);
      out[i] = s;
    }
    return out;
  }
  detail::parallel_for(thetas.size(), [&](std::size_t i) {
    try {
      out[i] = run_one(spec, thetas[i], p, integrator);
    } catch (const Error&) {
      out[i].reset();
    }
  });
  return out;
}

double scalar_percentage_error(double value, double reference) {
  return std::abs(value - reference) /
         std::max(std::abs(reference), kPercentageFloor) * 100.0;
}

}  // namespace

std::string_view to_string(SearchDirection d) {
  return d == SearchDirection::kStabilize ? "stabilize" : "destabilize";
}

const Gains4d& GradientSet::get(Criterion c) const {
  switch (c) {
    case Criterion::kRocof: return rocof;
    case Criterion::kNadir: return nadir;
    case Criterion::kSs: return ss;
  }
  return ss;
}

Gains4d& GradientSet::get(Criterion c) {
  return const_cast<Gains4d&>(std::as_const(*this).get(c));
}

GradientSet extract_gradients(const TrajectorySummaryd& summary,
                              SearchDirection direction) {
  if (!summary.has_tangents) {
    throw Error(ErrorKind::kMissingTangents,
                "gradient extraction needs a run integrated with tangents");
  }
  const double dir = direction_sign(direction);
  GradientSet g;
  g.direction = direction;
  g.rocof = signed_row(summary.peak_x2, 1, dir);
  g.nadir = signed_row(summary.peak_x1, 0, dir);
  g.ss = signed_row(summary.terminal, 0, dir);
  return g;
}

GradientSet extract_gradients(const Trajectoryd& traj,
                              const CriticalTimes& crit,
                              SearchDirection direction) {
  if (!traj.has_tangents()) {
    throw Error(ErrorKind::kMissingTangents,
                "gradient extraction needs a trajectory with tangents");
  }
  auto snap = [&](long i) {
    if (i < 0 || static_cast<std::size_t>(i) >= traj.size()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "critical index outside the trajectory");
    }
    return Snapshot<double>{i, traj.times[i], traj.states[i], traj.tangents[i]};
  };
  const double dir = direction_sign(direction);
  GradientSet g;
  g.direction = direction;
  g.rocof = signed_row(snap(crit.i_rocof), 1, dir);
  g.nadir = signed_row(snap(crit.i_nadir), 0, dir);
  g.ss = signed_row(snap(crit.i_ss), 0, dir);
  return g;
}

bool FdResult::ok() const {
  return std::none_of(component_errors.begin(), component_errors.end(),
                      [](const auto& e) { return e.has_value(); });
}

FdResult finite_diff_gradients(const Gains4d& theta, const SystemParams& p,
                               const FdOptions& opts) {
  if (!(opts.epsilon > 0.0) || !std::isfinite(opts.epsilon)) {
    throw Error(ErrorKind::kInvalidArgument,
                "finite-difference epsilon must be positive and finite");
  }
  FdResult res;
  const auto reference = integrate_probe(theta, p, {}, opts.integrator);
  res.reference_times = critical_times(reference.summary);
  res.reference_values = critical_values(reference.summary);
  const auto indices = critical_indices(res.reference_times);
  const double dir = direction_sign(opts.direction);
  res.gradients.direction = opts.direction;

  auto perturbed = [&](const Gains4d& shifted) {
    if (!validate_gains(shifted, p).feasible) {
      throw Error(ErrorKind::kInfeasiblePerturbation,
                  "perturbed K12=" + std::to_string(shifted(1)) +
                      " is infeasible");
    }
    auto probe = integrate_probe(shifted, p, indices, opts.integrator);
    const auto ct = critical_times(probe.summary);
    if (ct.i_nadir != res.reference_times.i_nadir ||
        ct.i_rocof != res.reference_times.i_rocof) {
      ++res.shifted_argmax;
    }
    return probe.sampled;
  };

  const std::array<Criterion, 3> quantity = {Criterion::kSs, Criterion::kNadir,
                                             Criterion::kRocof};
  for (int i = 0; i < 4; ++i) {
    const double h =
        opts.relative ? opts.epsilon * std::max(1.0, std::abs(theta(i)))
                      : opts.epsilon;
    try {
      Gains4d plus = theta;
      plus(i) += h;
      const auto up = perturbed(plus);
      std::vector<State2d> down;
      double span = h;
      if (opts.scheme == FdScheme::kCentral) {
        Gains4d minus = theta;
        minus(i) -= h;
        down = perturbed(minus);
        span = 2.0 * h;
      }
      for (std::size_t q = 0; q < 3; ++q) {
        const int row = kQuantityRow[q];
        const double hi = std::abs(up[q](row));
        const double lo = opts.scheme == FdScheme::kCentral
                              ? std::abs(down[q](row))
                              : std::abs(res.reference_values[q]);
        res.gradients.get(quantity[q])(i) = dir * (hi - lo) / span;
      }
    } catch (const Error& e) {
      const ErrorKind kind = e.kind() == ErrorKind::kInfeasibleGain
                                 ? ErrorKind::kInfeasiblePerturbation
                                 : e.kind();
      res.component_errors[i] = ErrorRecord{kind, e.what()};
      for (Criterion c : quantity) {
        res.gradients.get(c)(i) = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  return res;
}

std::string MethodSpec::name() const {
  switch (method) {
    case Method::kFmad: return "fmad";
    case Method::kFmadStreaming: return "fmad-streaming";
    case Method::kFdForward:
    case Method::kFdCentral: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%s:%g%s",
                    method == Method::kFdForward ? "fd-forward" : "fd-central",
                    epsilon, relative_epsilon ? "r" : "");
      return buf;
    }
  }
  return "unknown";
}

MethodSpec parse_method(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  MethodSpec spec;
  if (head == "fmad") {
    spec.method = Method::kFmad;
  } else if (head == "fmad-streaming") {
    spec.method = Method::kFmadStreaming;
  } else if (head == "fd-forward") {
    spec.method = Method::kFdForward;
  } else if (head == "fd-central") {
    spec.method = Method::kFdCentral;
  } else {
    throw Error(ErrorKind::kInvalidArgument, "unknown method '" + head + "'");
  }
  if (colon == std::string::npos) return spec;
  if (spec.method == Method::kFmad || spec.method == Method::kFmadStreaming) {
    throw Error(ErrorKind::kInvalidArgument,
                "method '" + head + "' takes no epsilon");
  }
  std::string eps = text.substr(colon + 1);
  spec.relative_epsilon = !eps.empty() && eps.back() == 'r';
  if (spec.relative_epsilon) eps.pop_back();
  char* end = nullptr;
  spec.epsilon = std::strtod(eps.c_str(), &end);
  if (eps.empty() || end != eps.c_str() + eps.size() || !(spec.epsilon > 0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "bad epsilon in method '" + text + "'");
  }
  return spec;
}

double percentage_error(const Eigen::Ref<const Eigen::VectorXd>& value,
                        const Eigen::Ref<const Eigen::VectorXd>& reference) {
  const double scale =
      std::max(reference.lpNorm<Eigen::Infinity>(), kPercentageFloor);
  return (value - reference).lpNorm<Eigen::Infinity>() / scale * 100.0;
}

ComparisonReport compare_methods(std::span<const Gains4d> thetas,
                                 const SystemParams& p,
                                 std::span<const MethodSpec> methods,
                                 const MethodSpec& reference,
                                 const CompareOptions& opts) {
  if (methods.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "compare_methods needs a method");
  }
  if (opts.runs < 1) {
    throw Error(ErrorKind::kInvalidArgument, "runs must be >= 1");
  }
  ComparisonReport report;
  report.reference = reference.name();
  const auto ref = run_method(reference, thetas, p, opts.integrator);

  struct Timed {
    std::vector<std::optional<MethodSample>> samples;
    double time_s = 0.0;
    std::int64_t memory = 0;
  };
  std::vector<Timed> timed(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    double total = 0.0;
    for (int run = 0; run < opts.runs; ++run) {
      PeakRssSampler sampler;
      const auto t0 = std::chrono::steady_clock::now();
      auto samples = run_method(methods[m], thetas, p, opts.integrator);
      const auto t1 = std::chrono::steady_clock::now();
      timed[m].memory = std::max(timed[m].memory, sampler.stop());
      total += std::chrono::duration<double>(t1 - t0).count();
      if (run == 0) timed[m].samples = std::move(samples);
    }
    timed[m].time_s = total / opts.runs;
  }

  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    bool ok = ref[i].has_value();
    for (const auto& t : timed) ok = ok && t.samples[i].has_value();
    if (ok) {
      usable.push_back(i);
    } else {
      ++report.samples_skipped;
    }
  }
  report.samples_used = usable.size();

  for (std::size_t i : usable) {
    const auto& g = ref[i]->gradients;
    const double dominant = std::max(g.rocof.lpNorm<Eigen::Infinity>(),
                                     g.nadir.lpNorm<Eigen::Infinity>());
    report.ss_gradient_ratio =
        std::max(report.ss_gradient_ratio,
                 g.ss.lpNorm<Eigen::Infinity>() /
                     std::max(dominant, kPercentageFloor));
  }

  for (std::size_t m = 0; m < methods.size(); ++m) {
    ComparisonRow row;
    row.method = methods[m].name();
    row.time_s = timed[m].time_s;
    row.memory_bytes = timed[m].memory;
    for (std::size_t i : usable) {
      const auto& a = *timed[m].samples[i];
      const auto& b = *ref[i];
      row.err_x_tss = std::max(row.err_x_tss, scalar_percentage_error(a.values[0], b.values[0]));
      row.err_x_tnadir = std::max(row.err_x_tnadir, scalar_percentage_error(a.values[1], b.values[1]));
      row.err_x_trocof = std::max(row.err_x_trocof, scalar_percentage_error(a.values[2], b.values[2]));
      row.err_g_nadir = std::max(row.err_g_nadir, percentage_error(a.gradients.nadir, b.gradients.nadir));
      row.err_g_rocof = std::max(row.err_g_rocof, percentage_error(a.gradients.rocof, b.gradients.rocof));
      row.err_g_ss = std::max(row.err_g_ss, percentage_error(a.gradients.ss, b.gradients.ss));
    }
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace freqsamp
