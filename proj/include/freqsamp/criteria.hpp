#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "freqsamp/integrator.hpp"
#include "freqsamp/types.hpp"

namespace freqsamp {

enum class Criterion { kRocof = 0, kNadir = 1, kSs = 2 };

inline constexpr std::array<Criterion, 3> kAllCriteria = {
    Criterion::kRocof, Criterion::kNadir, Criterion::kSs};

std::string_view to_string(Criterion c);

/// Which criteria decide the label. Steady state is off by default: it is
/// insensitive to the gains in this model.
struct CriteriaSet {
  bool rocof = true;
  bool nadir = true;
  bool ss = false;

  bool contains(Criterion c) const;
  void set(Criterion c, bool on);
  /// Enabled criteria in (rocof, nadir, ss) order.
  std::vector<Criterion> enabled() const;

  bool operator==(const CriteriaSet&) const = default;
};

enum class Label { kStable = 0, kUnstable = 1, kInvalid = 2 };

std::string_view to_string(Label label);

struct CriticalTimes {
  double t_rocof = 0.0;
  double t_nadir = 0.0;
  double t_ss = 0.0;
  long i_rocof = 0;
  long i_nadir = 0;
  long i_ss = 0;
};

/// Criterion values are signed trajectory values converted to Hz (Hz/s for
/// RoCoF); pass flags compare |value| <= threshold.
struct StabilityReport {
  CriticalTimes critical;
  double rocof_hz_s = 0.0;
  double nadir_hz = 0.0;
  double ss_hz = 0.0;
  bool pass_rocof = true;
  bool pass_nadir = true;
  bool pass_ss = true;
  Label label = Label::kStable;

  double value(Criterion c) const;
  bool passes(Criterion c) const;
};

double threshold(const SystemParams& p, Criterion c);

CriticalTimes critical_times(const TrajectorySummaryd& summary);
CriticalTimes critical_times(const Trajectoryd& traj);

StabilityReport evaluate(const TrajectorySummaryd& summary,
                         const SystemParams& p, const CriteriaSet& enabled = {});
StabilityReport evaluate(const Trajectoryd& traj, const SystemParams& p,
                         const CriteriaSet& enabled = {});

struct LabeledSample {
  Label label = Label::kInvalid;
  std::optional<StabilityReport> report;
  std::optional<ErrorRecord> error;
};

/// Integrates and labels every theta. Infeasible or non-physical samples get
/// Label::kInvalid with the error attached.
std::vector<LabeledSample> label_dataset(std::span<const Gains4d> thetas,
                                         const SystemParams& p,
                                         const CriteriaSet& enabled = {},
                                         Scheme scheme = Scheme::kEuler);

}  // namespace freqsamp
