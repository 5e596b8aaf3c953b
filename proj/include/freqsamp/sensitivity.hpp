#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "freqsamp/criteria.hpp"
#include "freqsamp/integrator.hpp"
#include "freqsamp/types.hpp"

namespace freqsamp {

enum class SearchDirection { kStabilize, kDestabilize };

std::string_view to_string(SearchDirection d);

/// Signed search gradients in gain space. Under kDestabilize each entry is
/// d|criterion|/dtheta; kStabilize negates it.
struct GradientSet {
  Gains4d rocof = Gains4d::Zero();
  Gains4d nadir = Gains4d::Zero();
  Gains4d ss = Gains4d::Zero();
  SearchDirection direction = SearchDirection::kDestabilize;

  const Gains4d& get(Criterion c) const;
  Gains4d& get(Criterion c);
};

/// Gradients from the tangents stored at the critical points of a run.
/// Throws MissingTangents if the run carried none.
GradientSet extract_gradients(const TrajectorySummaryd& summary,
                              SearchDirection direction);

/// Same, from a stored trajectory and critical times taken from it.
GradientSet extract_gradients(const Trajectoryd& traj,
                              const CriticalTimes& crit,
                              SearchDirection direction);

enum class FdScheme { kForward, kCentral };

struct FdOptions {
  FdScheme scheme = FdScheme::kCentral;
  double epsilon = 1e-6;
  // Per-component step epsilon * max(1, |theta_i|) when true, else epsilon.
  bool relative = true;
  SearchDirection direction = SearchDirection::kDestabilize;
  Scheme integrator = Scheme::kEuler;
};

struct FdResult {
  GradientSet gradients;
  CriticalTimes reference_times;
  // Reference run values: x1(t_ss), x1(t_nadir), x2(t_rocof).
  std::array<double, 3> reference_values{};
  // How many perturbed runs located a different argmax than the reference.
  int shifted_argmax = 0;
  // Per gain component; a failed component leaves NaN in the gradients.
  std::array<std::optional<ErrorRecord>, 4> component_errors;

  bool ok() const;
};

/// Finite-difference baseline. Perturbed runs locate their own critical
/// points (counted in shifted_argmax) but the differenced quantities are read
/// at the reference run's critical indices.
///
/// Throws InvalidArgument for epsilon <= 0 and propagates errors of the
/// unperturbed run; perturbed-run failures are per component
/// (InfeasiblePerturbation or the integration error).
FdResult finite_diff_gradients(const Gains4d& theta, const SystemParams& p,
                               const FdOptions& opts = {});

enum class Method { kFmad, kFmadStreaming, kFdForward, kFdCentral };

struct MethodSpec {
  Method method = Method::kFmad;
  double epsilon = 1e-6;
  bool relative_epsilon = true;

  std::string name() const;
};

/// Parses "fmad", "fmad-streaming", "fd-forward", "fd-central", optionally
/// followed by ":EPS" (absolute) or ":EPSr" (relative) for the FD methods.
MethodSpec parse_method(const std::string& text);

struct ComparisonRow {
  std::string method;
  std::int64_t memory_bytes = 0;
  double time_s = 0.0;
  // Max absolute percentage errors against the reference method.
  double err_x_tss = 0.0;
  double err_x_tnadir = 0.0;
  double err_x_trocof = 0.0;
  double err_g_nadir = 0.0;
  double err_g_rocof = 0.0;
  double err_g_ss = 0.0;
};

struct ComparisonReport {
  std::string reference;
  std::vector<ComparisonRow> rows;
  std::size_t samples_used = 0;
  std::size_t samples_skipped = 0;
  // max over samples of |g_ss|_inf / max(|g_rocof|_inf, |g_nadir|_inf), from
  // the reference method.
  double ss_gradient_ratio = 0.0;
};

struct CompareOptions {
  int runs = 5;
  Scheme integrator = Scheme::kEuler;
};

/// Evaluates every method on the same batch and reports its error against
/// the reference, mean wall time over `runs`, and peak resident-memory
/// delta. Methods run one after another; each batch runs in parallel.
/// Samples on which any method fails are skipped and counted.
ComparisonReport compare_methods(std::span<const Gains4d> thetas,
                                 const SystemParams& p,
                                 std::span<const MethodSpec> methods,
                                 const MethodSpec& reference,
                                 const CompareOptions& opts = {});

/// max |a - b|_inf / max(|ref|_inf, 1e-12) * 100, with `ref` = b.
double percentage_error(const Eigen::Ref<const Eigen::VectorXd>& value,
                        const Eigen::Ref<const Eigen::VectorXd>& reference);

inline constexpr double kPercentageFloor = 1e-12;

}  // namespace freqsamp
