#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "freqsamp/criteria.hpp"
#include "freqsamp/sensitivity.hpp"
#include "freqsamp/surgery.hpp"
#include "freqsamp/types.hpp"

namespace freqsamp {

enum class RuleKind { kFlip, kMargin };

/// Stopping rule for one walk. kFlip stops once the label differs from the
/// seed's; kMargin stops once every enabled criterion is within
/// delta * threshold of its threshold or already on the target side.
struct SamplingRule {
  RuleKind kind = RuleKind::kFlip;
  double delta = 0.05;

  bool operator==(const SamplingRule&) const = default;
};

enum class DirectionPolicy { kAuto, kForceStabilize, kForceDestabilize };

/// Which criteria feed surgery each iteration.
enum class Contribution {
  kAllEnabled,
  // Only criteria not yet on the target side; falls back to all enabled
  // when that set is empty.
  kViolatedOnly,
};

struct SamplerConfig {
  double alpha = 1.0;
  int max_iter = 200;
  int batch_size = 20;
  SamplingRule rule;
  DirectionPolicy direction_policy = DirectionPolicy::kAuto;
  CriteriaSet criteria;
  bool normalize_step = true;
  int backtrack_limit = 8;
  std::uint64_t seed = 42;
  // Randomized surgery order, derived from `seed` per sample and iteration.
  bool shuffle_surgery = false;
  ProjectionFormula projection = ProjectionFormula::kNormalPlane;
  Contribution contribution = Contribution::kAllEnabled;
  Scheme scheme = Scheme::kEuler;

  void validate() const;
};

struct SampleRecord {
  Gains4d theta_initial = Gains4d::Zero();
  Gains4d theta_final = Gains4d::Zero();
  // Iterate before theta_final; equals theta_final when no step was taken.
  Gains4d theta_previous = Gains4d::Zero();
  Label label_initial = Label::kInvalid;
  Label label_final = Label::kInvalid;
  std::optional<StabilityReport> report_final;
  SearchDirection direction = SearchDirection::kDestabilize;
  bool converged = false;
  int iterations = 0;
  std::optional<ErrorRecord> error;
};

struct DatasetMetadata {
  std::string params_hash;
  SystemParams params;
  SamplerConfig config;
  std::uint64_t seed = 0;
};

/// Records are only ever appended.
struct Dataset {
  DatasetMetadata metadata;
  std::vector<SampleRecord> records;

  void append(const Dataset& more);
};

/// FNV-1a over the 17-significant-digit rendering of every parameter.
std::string params_hash(const SystemParams& p);

struct InitialSeeds {
  std::vector<Gains4d> thetas;
  std::size_t redraws = 0;
};

/// n gain vectors with i.i.d. Normal(mean, std^2) components. Draws with an
/// infeasible K12 are discarded and redrawn.
InitialSeeds generate_initial(std::size_t n, double mean, double std_dev,
                              std::uint64_t seed, const SystemParams& p);

SearchDirection resolve_direction(DirectionPolicy policy, Label initial);

bool rule_satisfied(const StabilityReport& current, Label label_initial,
                    SearchDirection direction, const SamplerConfig& cfg,
                    const SystemParams& p);

/// Batched gradient walk from every seed towards (or across) the stability
/// boundary. Per iteration each active sample is integrated with tangents,
/// its criterion gradients are combined by surgery and it takes the step
/// theta += alpha * g (g normalized when normalize_step). Samples meeting the
/// rule are frozen; a step landing on an infeasible or non-physical theta is
/// halved up to backtrack_limit times before the walk gives up.
Dataset augment(std::span<const Gains4d> seeds, const SystemParams& p,
                const SamplerConfig& cfg);

}  // namespace freqsamp
