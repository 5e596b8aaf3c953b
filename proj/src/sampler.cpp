#include "freqsamp/sampler.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "parallel.hpp"

namespace freqsamp {

namespace {

void require(bool ok, const char* what) {
  if (!ok) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string("invalid sampler config: ") + what);
  }
}

// Seed for the surgery shuffle of one sample at one iteration; keeps the
// walk independent of batch composition and scheduling.
std::uint64_t mix_seed(std::uint64_t seed, std::size_t sample, int iteration) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(sample),
                    static_cast<std::uint32_t>(iteration)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

struct Evaluation {
  StabilityReport report;
  GradientSet gradients;
};

Evaluation evaluate_theta(const Gains4d& theta, const SystemParams& p,
                          const SamplerConfig& cfg, SearchDirection dir) {
  if (!validate_gains(theta, p).feasible) {
    throw Error(ErrorKind::kInfeasibleGain,
                "K12=" + std::to_string(theta(1)) + " is infeasible");
  }
  const auto run = integrate(theta, p, {true, Storage::kStreaming, cfg.scheme});
  return {evaluate(run.summary, p, cfg.criteria),
          extract_gradients(run.summary, dir)};
}

bool on_target_side(const StabilityReport& rep, Criterion c,
                    SearchDirection dir) {
  return dir == SearchDirection::kStabilize ? rep.passes(c) : !rep.passes(c);
}

// One sample's walk state.
struct Walker {
  std::size_t global_index = 0;
  SampleRecord record;
  Gains4d theta = Gains4d::Zero();
  std::optional<Evaluation> current;
  bool active = false;
};

Gains4d search_step(const Walker& w, const SamplerConfig& cfg, int iteration) {
  std::vector<Gains4d> grads;
  for (Criterion c : cfg.criteria.enabled()) {
    if (cfg.contribution == Contribution::kViolatedOnly &&
        on_target_side(w.current->report, c, w.record.direction)) {
      continue;
    }
    grads.push_back(w.current->gradients.get(c));
  }
  if (grads.empty()) {
    for (Criterion c : cfg.criteria.enabled()) {
      grads.push_back(w.current->gradients.get(c));
    }
  }
  SurgeryConfig sc;
  sc.formula = cfg.projection;
  if (cfg.shuffle_surgery) sc.shuffle_seed = mix_seed(cfg.seed, w.global_index, iteration);
  Gains4d g = surgery(grads, sc);
  if (cfg.normalize_step) {
    const double norm = g.norm();
    if (norm > 0.0) g /= norm;
  }
  return cfg.alpha * g;
}

void advance(Walker& w, const SystemParams& p, const SamplerConfig& cfg,
             int iteration) {
  Gains4d step = search_step(w, cfg, iteration);
  for (int attempt = 0;; ++attempt) {
    const Gains4d candidate = w.theta + step;
    try {
      auto eval = evaluate_theta(candidate, p, cfg, w.record.direction);
      w.record.theta_previous = w.theta;
      w.theta = candidate;
      w.current = std::move(eval);
      w.record.iterations = iteration;
      return;
    } catch (const Error& e) {
      if (attempt >= cfg.backtrack_limit) {
        w.record.error = ErrorRecord{
            e.kind(), "step rejected after " + std::to_string(attempt) +
                          " halvings: " + e.what()};
        w.active = false;
        return;
      }
      step *= 0.5;
    }
  }
}

void finish(Walker& w) {
  w.record.theta_final = w.theta;
  if (w.current) {
    w.record.report_final = w.current->report;
    w.record.label_final = w.current->report.label;
  }
}

}  // namespace

void SamplerConfig::validate() const {
  require(alpha >= 0.0 && std::isfinite(alpha), "alpha must be >= 0");
  require(max_iter >= 0, "max_iter must be >= 0");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(rule.kind != RuleKind::kMargin || rule.delta > 0.0,
          "margin delta must be > 0");
  require(backtrack_limit >= 0, "backtrack_limit must be >= 0");
  require(!criteria.enabled().empty(), "at least one criterion must be enabled");
}

void Dataset::append(const Dataset& more) {
  records.insert(records.end(), more.records.begin(), more.records.end());
}

std::string params_hash(const SystemParams& p) {
  char text[512];
  std::snprintf(text, sizeof text,
                "%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g",
                p.r, p.tau, p.m0, p.d0, p.delta_p, p.f_base,
                p.thresholds.ss_hz, p.thresholds.nadir_hz,
                p.thresholds.rocof_hz_s, p.horizon_t, p.dt);
  std::uint64_t h = 1469598103934665603ull;
  for (const char* c = text; *c; ++c) {
    h ^= static_cast<unsigned char>(*c);
    h *= 1099511628211ull;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

InitialSeeds generate_initial(std::size_t n, double mean, double std_dev,
                              std::uint64_t seed, const SystemParams& p) {
  if (!(std_dev >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "std must be >= 0");
  }
  InitialSeeds out;
  out.thetas.reserve(n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(mean, std_dev);
  const std::size_t max_redraws = 1000 * (n + 1);
  while (out.thetas.size() < n) {
    Gains4d theta;
    for (int i = 0; i < 4; ++i) theta(i) = std_dev == 0.0 ? mean : normal(rng);
    if (validate_gains(theta, p).feasible) {
      out.thetas.push_back(theta);
    } else if (++out.redraws > max_redraws) {
      throw Error(ErrorKind::kInvalidArgument,
                  "seed distribution yields almost no feasible gains");
    }
  }
  return out;
}

SearchDirection resolve_direction(DirectionPolicy policy, Label initial) {
  switch (policy) {
    case DirectionPolicy::kForceStabilize: return SearchDirection::kStabilize;
    case DirectionPolicy::kForceDestabilize: return SearchDirection::kDestabilize;
    case DirectionPolicy::kAuto:
      return initial == Label::kUnstable ? SearchDirection::kStabilize
                                         : SearchDirection::kDestabilize;
  }
  return SearchDirection::kDestabilize;
}

bool rule_satisfied(const StabilityReport& current, Label label_initial,
                    SearchDirection direction, const SamplerConfig& cfg,
                    const SystemParams& p) {
  if (current.label == Label::kInvalid) return false;
  if (cfg.rule.kind == RuleKind::kFlip) {
    return label_initial != Label::kInvalid && current.label != label_initial;
  }
  for (Criterion c : cfg.criteria.enabled()) {
    const double limit = threshold(p, c);
    const double value = std::abs(current.value(c));
    const bool near = std::abs(value - limit) <= cfg.rule.delta * limit;
    if (!near && !on_target_side(current, c, direction)) return false;
  }
  return true;
}

Dataset augment(std::span<const Gains4d> seeds, const SystemParams& p,
                const SamplerConfig& cfg) {
  p.validate();
  cfg.validate();
  Dataset data;
  data.metadata = {params_hash(p), p, cfg, cfg.seed};
  data.records.reserve(seeds.size());

  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  for (std::size_t start = 0; start < seeds.size(); start += batch) {
    const std::size_t count = std::min(batch, seeds.size() - start);
    std::vector<Walker> walkers(count);

    detail::parallel_for(count, [&](std::size_t j) {
      Walker& w = walkers[j];
      w.global_index = start + j;
      w.theta = seeds[start + j];
      w.record.theta_initial = w.theta;
      w.record.theta_previous = w.theta;
      try {
        // Label first, then resolve the direction the gradients are signed by.
        auto eval = evaluate_theta(w.theta, p, cfg, SearchDirection::kDestabilize);
        w.record.label_initial = eval.report.label;
        w.record.direction =
            resolve_direction(cfg.direction_policy, w.record.label_initial);
        if (w.record.direction == SearchDirection::kStabilize) {
          for (Criterion c : kAllCriteria) eval.gradients.get(c) = -eval.gradients.get(c);
          eval.gradients.direction = SearchDirection::kStabilize;
        }
        w.current = std::move(eval);
        w.record.converged = rule_satisfied(w.current->report, w.record.label_initial,
                                            w.record.direction, cfg, p);
        w.active = !w.record.converged;
      } catch (const Error& e) {
        w.record.error = ErrorRecord{e.kind(), e.what()};
        w.active = false;
      }
    });

    for (int k = 1; k <= cfg.max_iter; ++k) {
      std::vector<std::size_t> active;
      for (std::size_t j = 0; j < count; ++j) {
        if (walkers[j].active) active.push_back(j);
      }
      if (active.empty()) break;
      detail::parallel_for(active.size(), [&](std::size_t a) {
        Walker& w = walkers[active[a]];
        advance(w, p, cfg, k);
        if (!w.active) return;
        if (rule_satisfied(w.current->report, w.record.label_initial,
                           w.record.direction, cfg, p)) {
          w.record.converged = true;
          w.active = false;
        }
      });
    }

    for (auto& w : walkers) {
      finish(w);
      data.records.push_back(std::move(w.record));
    }
  }
  return data;
}

}  // namespace freqsamp
