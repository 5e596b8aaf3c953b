#include <doctest.h>

#include <cmath>

#include "freqsamp/sampler.hpp"
#include "support.hpp"

using namespace freqsamp;
using doctest::Approx;

namespace {

Label relabel(const Gains4d& g, const SystemParams& p, const CriteriaSet& c = {}) {
  const std::vector<Gains4d> one = {g};
  return label_dataset(one, p, c)[0].label;
}

bool same_record(const SampleRecord& a, const SampleRecord& b) {
  return a.theta_initial == b.theta_initial && a.theta_final == b.theta_final &&
         a.theta_previous == b.theta_previous && a.label_initial == b.label_initial &&
         a.label_final == b.label_final && a.converged == b.converged &&
         a.iterations == b.iterations && a.direction == b.direction &&
         a.error.has_value() == b.error.has_value();
}

StabilityReport fake_report(double rocof, double nadir, const SystemParams& p) {
  StabilityReport r;
  r.rocof_hz_s = rocof;
  r.nadir_hz = nadir;
  r.pass_rocof = std::fabs(rocof) <= p.thresholds.rocof_hz_s;
  r.pass_nadir = std::fabs(nadir) <= p.thresholds.nadir_hz;
  r.label = r.pass_rocof && r.pass_nadir ? Label::kStable : Label::kUnstable;
  return r;
}

}  // namespace

TEST_CASE("generate_initial") {
  const SystemParams p;
  const auto a = generate_initial(50, 0, 50, 7, p);
  const auto b = generate_initial(50, 0, 50, 7, p);
  CHECK(a.thetas == b.thetas);
  CHECK(generate_initial(50, 0, 50, 8, p).thetas != a.thetas);
  CHECK(generate_initial(0, 0, 50, 7, p).thetas.empty());

  const auto big = generate_initial(10000, 0, 50, 42, p);
  REQUIRE(big.thetas.size() == 10000);
  // K12 is a Normal truncated below at -75 by the redraws; the other
  // components are untouched.
  const double cut = -75.0 / 50.0;
  const double pdf = std::exp(-cut * cut / 2) / std::sqrt(2 * M_PI);
  const double tail = 0.5 * std::erfc(cut / std::sqrt(2.0));
  const double lambda = pdf / tail;
  const double k12_mean = 50 * lambda;
  const double k12_std = 50 * std::sqrt(1 + cut * lambda - lambda * lambda);
  for (int c = 0; c < 4; ++c) {
    double sum = 0, sq = 0;
    for (const auto& g : big.thetas) sum += g(c);
    const double mean = sum / 10000;
    for (const auto& g : big.thetas) sq += (g(c) - mean) * (g(c) - mean);
    const double sd = std::sqrt(sq / 9999);
    CHECK(std::fabs(mean - (c == 1 ? k12_mean : 0.0)) <= 1.5);
    CHECK(std::fabs(sd - (c == 1 ? k12_std : 50.0)) <= 2.0);
  }
  CHECK(big.redraws > 500);

  // Centered inside the infeasible region: plenty of redraws, none kept.
  const auto shifted = generate_initial(200, -70, 20, 3, p);
  CHECK(shifted.redraws > 0);
  for (const auto& g : shifted.thetas) CHECK(validate_gains(g, p).feasible);
}

TEST_CASE("rule_satisfied") {
  const SystemParams p;
  SamplerConfig flip;
  const auto stable = fake_report(-0.5, -0.5, p);
  const auto unstable = fake_report(-1.5, -0.5, p);
  CHECK_FALSE(rule_satisfied(stable, Label::kStable, SearchDirection::kDestabilize, flip, p));
  CHECK(rule_satisfied(unstable, Label::kStable, SearchDirection::kDestabilize, flip, p));
  StabilityReport invalid = stable;
  invalid.label = Label::kInvalid;
  CHECK_FALSE(rule_satisfied(invalid, Label::kUnstable, SearchDirection::kStabilize, flip, p));

  SamplerConfig margin;
  margin.rule = {RuleKind::kMargin, 0.05};
  // RoCoF within 5% of its limit and nadir on the unstable side already.
  CHECK(rule_satisfied(fake_report(-0.97, -0.9, p), Label::kStable,
                       SearchDirection::kDestabilize, margin, p));
  CHECK_FALSE(rule_satisfied(fake_report(-0.90, -0.9, p), Label::kStable,
                             SearchDirection::kDestabilize, margin, p));
  CHECK(rule_satisfied(fake_report(-1.03, -0.5, p), Label::kUnstable,
                       SearchDirection::kStabilize, margin, p));
}

TEST_CASE("resolve_direction") {
  CHECK(resolve_direction(DirectionPolicy::kAuto, Label::kStable) == SearchDirection::kDestabilize);
  CHECK(resolve_direction(DirectionPolicy::kAuto, Label::kUnstable) == SearchDirection::kStabilize);
  CHECK(resolve_direction(DirectionPolicy::kForceStabilize, Label::kStable) ==
        SearchDirection::kStabilize);
  CHECK(resolve_direction(DirectionPolicy::kForceDestabilize, Label::kUnstable) ==
        SearchDirection::kDestabilize);
}

TEST_CASE("config validation") {
  SamplerConfig c;
  CHECK_NOTHROW(c.validate());
  c.alpha = -1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.max_iter = -1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.rule = {RuleKind::kMargin, 0.0};
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.criteria = {false, false, false};
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("degenerate walks") {
  const SystemParams p = test::short_params(20.0);
  const auto seeds = test::random_gains(6, 50, 201);
  SamplerConfig none;
  none.max_iter = 0;
  const auto d0 = augment(seeds, p, none);
  REQUIRE(d0.records.size() == seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    CHECK(d0.records[i].theta_final == seeds[i]);
    CHECK_FALSE(d0.records[i].converged);
    CHECK(d0.records[i].iterations == 0);
  }

  SamplerConfig still;
  still.alpha = 0.0;
  still.max_iter = 5;
  const auto da = augment(seeds, p, still);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    CHECK(da.records[i].theta_final == seeds[i]);
    CHECK_FALSE(da.records[i].converged);  // flip cannot hold at the seed
  }
}

TEST_CASE("walks bracket the boundary and honour their invariants") {
  const SystemParams p = test::short_params(20.0);
  std::vector<Gains4d> seeds = test::random_gains(12, 50, 211);
  seeds.push_back(Gains4d::Zero());
  SamplerConfig cfg;
  cfg.batch_size = 5;
  const auto data = augment(seeds, p, cfg);
  REQUIRE(data.records.size() == seeds.size());
  int converged = 0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& r = data.records[i];
    CHECK(r.theta_initial == seeds[i]);
    CHECK(r.iterations <= cfg.max_iter);
    CHECK(r.label_initial == relabel(seeds[i], p));
    CHECK(r.direction == resolve_direction(cfg.direction_policy, r.label_initial));
    if (!r.converged) continue;
    ++converged;
    REQUIRE(r.report_final.has_value());
    CHECK(rule_satisfied(*r.report_final, r.label_initial, r.direction, cfg, p));
    // Independent relabeling of the last two iterates.
    const Label last = relabel(r.theta_final, p);
    const Label before = relabel(r.theta_previous, p);
    CHECK(last == r.label_final);
    CHECK(before == r.label_initial);
    CHECK(last != before);
  }
  CHECK(converged >= 10);

  // theta = 0 starts unstable under these thresholds and is walked to stable.
  const auto& origin = data.records.back();
  CHECK(origin.label_initial == Label::kUnstable);
  CHECK(origin.converged);
  CHECK(origin.label_final == Label::kStable);
}

TEST_CASE("batching and masking do not change any walk") {
  const SystemParams p = test::short_params(20.0);
  const auto seeds = test::random_gains(7, 50, 221);
  SamplerConfig wide;
  wide.batch_size = 7;
  SamplerConfig narrow = wide;
  narrow.batch_size = 1;
  SamplerConfig mid = wide;
  mid.batch_size = 3;
  const auto a = augment(seeds, p, wide);
  const auto b = augment(seeds, p, narrow);
  const auto c = augment(seeds, p, mid);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    CHECK(same_record(a.records[i], b.records[i]));
    CHECK(same_record(a.records[i], c.records[i]));
  }
  // Frozen samples keep the iterate at which they converged.
  for (const auto& r : a.records) {
    if (r.converged) CHECK(r.report_final->label == r.label_final);
  }
}

TEST_CASE("determinism, including shuffled surgery") {
  const SystemParams p = test::short_params(20.0);
  const auto seeds = test::random_gains(5, 50, 231);
  SamplerConfig cfg;
  cfg.shuffle_surgery = true;
  cfg.criteria.ss = true;
  const auto a = augment(seeds, p, cfg);
  const auto b = augment(seeds, p, cfg);
  for (std::size_t i = 0; i < seeds.size(); ++i) CHECK(same_record(a.records[i], b.records[i]));
  CHECK(a.metadata.params_hash == params_hash(p));
  CHECK(a.metadata.seed == cfg.seed);
  CHECK(params_hash(p).size() == 16);
  SystemParams q = p;
  q.tau = 10.5;
  CHECK(params_hash(q) != params_hash(p));
}

TEST_CASE("append only grows") {
  const SystemParams p = test::short_params(20.0);
  SamplerConfig cfg;
  cfg.max_iter = 3;
  auto a = augment(test::random_gains(3, 50, 241), p, cfg);
  const auto first = a.records;
  const auto b = augment(test::random_gains(2, 50, 242), p, cfg);
  a.append(b);
  REQUIRE(a.records.size() == 5);
  for (std::size_t i = 0; i < first.size(); ++i) CHECK(same_record(a.records[i], first[i]));
}

TEST_CASE("steps into the infeasible region back off and stop") {
  const SystemParams p = test::short_params(20.0);
  // Unstable near the K12 limit; forcing destabilization drives K12 into it.
  const std::vector<Gains4d> seeds = {Gains4d(0, -74.9, 0, 0)};
  SamplerConfig cfg;
  cfg.direction_policy = DirectionPolicy::kForceDestabilize;
  cfg.max_iter = 30;
  const auto data = augment(seeds, p, cfg);
  const auto& r = data.records[0];
  CHECK_FALSE(r.converged);
  CHECK(validate_gains(r.theta_final, p).feasible);
  CHECK(r.label_final == Label::kUnstable);
}

TEST_CASE("margin rule stops near the boundary") {
  const SystemParams p = test::short_params(20.0);
  const auto seeds = test::random_gains(4, 50, 251);
  SamplerConfig cfg;
  cfg.rule = {RuleKind::kMargin, 0.05};
  cfg.alpha = 0.25;
  const auto data = augment(seeds, p, cfg);
  for (const auto& r : data.records) {
    if (r.converged) CHECK(rule_satisfied(*r.report_final, r.label_initial, r.direction, cfg, p));
  }
}
