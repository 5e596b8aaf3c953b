// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
// (sub-checks indented beneath it) and exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "freqsamp/config.hpp"
#include "freqsamp/csv.hpp"
#include "freqsamp/integrator.hpp"
#include "freqsamp/sampler.hpp"
#include "freqsamp/sensitivity.hpp"
#include "freqsamp/surgery.hpp"
#include "support.hpp"

using namespace freqsamp;

namespace {

// Tolerances.
constexpr double kGradTolPct = 1e-2;
constexpr double kStateTolPct = 1e-10;
constexpr double kRuntimeLimitS = 60.0;
constexpr double kBlowupPct = 100.0;
constexpr double kAnalyticTolPu = 2e-4;
constexpr double kOrderTarget = 1.0;
constexpr double kOrderTol = 0.2;
constexpr double kResidualTol = 1e-12;
constexpr double kSurgeryOrthTol = 1e-12;
constexpr double kMinConvergedFraction = 0.5;
constexpr std::uint64_t kSeed = 42;

struct Gate {
  int failed = 0;

  void criterion(int id, const char* name, bool ok, const std::string& detail) {
    std::printf("[%s] %d %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
    if (!ok) ++failed;
  }
  static void sub(bool ok, const std::string& what) {
    std::printf("       %s %s\n", ok ? "ok  " : "FAIL", what.c_str());
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

const ComparisonRow& row(const ComparisonReport& r, const std::string& name) {
  for (const auto& x : r.rows)
    if (x.method == name) return x;
  std::fprintf(stderr, "missing bench row %s\n", name.c_str());
  std::exit(2);
}

Label relabel(const Gains4d& g, const SystemParams& p) {
  const std::vector<Gains4d> one = {g};
  return label_dataset(one, p)[0].label;
}

bool brackets(const SampleRecord& r, const SystemParams& p) {
  return r.converged && relabel(r.theta_final, p) != relabel(r.theta_previous, p);
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  Gate gate;
  const RunConfig shipped = load_config(FREQSAMP_DEFAULT_CONFIG);
  const SystemParams& p = shipped.system;
  const auto batch = generate_initial(20, 0.0, 50.0, kSeed, p).thetas;

  // One benchmark run shared by criteria 1, 2, 7 and 8.
  std::vector<MethodSpec> methods;
  for (const char* m : {"fmad", "fmad-streaming", "fd-central:1e-6r", "fd-forward:1e-12",
                        "fd-forward:1e-14"}) {
    methods.push_back(parse_method(m));
  }
  const auto bench = compare_methods(batch, p, methods, parse_method("fmad"), {5});
  const auto& fmad = row(bench, "fmad");
  const auto& streaming = row(bench, "fmad-streaming");
  const auto& central = row(bench, parse_method("fd-central:1e-6r").name());
  const auto& fwd14 = row(bench, parse_method("fd-forward:1e-14").name());
  for (const auto& r : bench.rows) {
    std::printf("  bench %-22s time %.4f s  mem %lld B  x(tss) %.3g%%  x(tnadir) %.3g%%  "
                "x(trocof) %.3g%%  g_nadir %.3g%%  g_rocof %.3g%%  g_ss %.3g%%\n",
                r.method.c_str(), r.time_s, static_cast<long long>(r.memory_bytes),
                r.err_x_tss, r.err_x_tnadir, r.err_x_trocof, r.err_g_nadir, r.err_g_rocof,
                r.err_g_ss);
  }

  {  // 1
    const bool all_used = bench.samples_used == 20;
    const bool grads = central.err_g_nadir <= kGradTolPct && central.err_g_rocof <= kGradTolPct;
    const double state = std::max({central.err_x_tss, central.err_x_tnadir, central.err_x_trocof});
    const bool states = state <= kStateTolPct;
    const double runtime = fmad.time_s + central.time_s;
    const bool fast = runtime < kRuntimeLimitS;
    gate.criterion(1, "FMAD vs central FD gradient agreement", all_used && grads && states && fast,
                   fmt("g_nadir %.3g%%, g_rocof %.3g%% (<= 0.01%%); states %.3g%% (<= 1e-10%%); "
                        "FMAD+FD time %.3f s",
                        central.err_g_nadir, central.err_g_rocof, state, runtime) +
                       " over " + std::to_string(bench.samples_used) + " samples");
  }

  {  // 2
    const double blown = std::max(fwd14.err_g_nadir, fwd14.err_g_rocof);
    const bool ok = blown > kBlowupPct && central.err_g_nadir <= kGradTolPct &&
                    central.err_g_rocof <= kGradTolPct;
    gate.criterion(2, "forward FD blow-up at eps=1e-14", ok,
                   fmt("forward 1e-14 max error %.4g%% (> 100%%); central max %.3g%% (<= 0.01%%)",
                       blown, std::max(central.err_g_nadir, central.err_g_rocof)));
  }

  {  // 3
    const auto run = integrate(Gains4d::Zero().eval(), p, {false});
    double gap = 0.0;
    for (std::size_t i = 0; i < run.trajectory->size(); ++i) {
      gap = std::max(gap, std::fabs(run.trajectory->states[i](0) -
                                    analytic_solution_k0(run.trajectory->times[i], p)(0)));
    }
    const std::vector<double> dts = {4e-3, 2e-3, 1e-3};
    const auto probe = convergence_probe(p, dts);
    const double order = probe.order.value_or(NAN);
    const bool ok = gap <= kAnalyticTolPu && std::fabs(order - kOrderTarget) <= kOrderTol;
    gate.criterion(3, "closed-form trajectory and convergence order", ok,
                   fmt("max |omega - exact| %.3g p.u. (<= 2e-4); order %.4f (1.0 +- 0.2)", gap,
                       order));
  }

  {  // 4
    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> k12(-75.0, 500.0);
    double worst = 0.0, max_w = -INFINITY;
    for (int i = 0; i < 1000; ++i) {
      const double k = k12(rng);
      const double w = initial_state(Gains4d(0, k, 0, 0), p)(1);
      worst = std::max(worst, std::fabs(k * w * w - p.m0 * w + p.delta_p));
      max_w = std::max(max_w, w);
    }
    gate.criterion(4, "initial-condition identity", worst <= kResidualTol && max_w <= 0.0,
                   fmt("max residual %.3g (<= 1e-12); max omega_dot(0+) %.4g (<= 0)", worst,
                       max_w));
  }

  {  // 5
    using V = Eigen::Vector4d;
    std::mt19937_64 rng(kSeed);
    std::normal_distribution<double> d(0.0, 1.0);
    bool sum_ok = true;
    double orth = 0.0;
    int no_conflict = 0, projections = 0;
    for (int t = 0; t < 2000; ++t) {
      std::vector<V> set(3);
      for (auto& v : set) v = V(d(rng), d(rng), d(rng), d(rng));
      bool conflict = false;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          if (i != j && set[i].dot(set[j]) < 0) conflict = true;
      if (!conflict) {
        ++no_conflict;
        sum_ok = sum_ok && surgery(set) == set[0] + set[1] + set[2];
      }
      V g = set[0];
      if (project_if_conflicting(g, set[1])) {
        ++projections;
        orth = std::max(orth, std::fabs(g.dot(set[1])) / (g.norm() * set[1].norm()));
      }
    }
    const V worked = surgery(std::vector<V>{V(2, 0, 0, 0), V(-1, 1, 0, 0)});
    const bool ok = sum_ok && orth <= kSurgeryOrthTol && worked == V(1, 2, 0, 0);
    gate.criterion(5, "gradient surgery properties", ok,
                   fmt("no-conflict sums exact on %.0f sets; max post-projection cosine %.3g "
                       "(<= 1e-12) over %.0f projections; worked example ",
                       no_conflict, orth, projections) +
                       (worked == V(1, 2, 0, 0) ? "(1,2,0,0) bitwise" : "WRONG"));
  }

  {  // 6
    const SamplerConfig cfg = shipped.sampler;
    auto seeds = generate_initial(shipped.initial.count, shipped.initial.mean,
                                  shipped.initial.std_dev, kSeed, p)
                     .thetas;
    seeds.push_back(Gains4d::Zero());
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset data = augment(seeds, p, cfg);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& origin = data.records.back();
    const std::vector<Gains4d> zero = {Gains4d::Zero()};
    const double seed_nadir = label_dataset(zero, p)[0].report->nadir_hz;

    const bool origin_ok = origin.label_initial == Label::kStable && origin.converged &&
                           origin.label_final == Label::kUnstable && brackets(origin, p);
    Gate::sub(origin_ok, std::string("theta=0 as a stable seed flips to 1: initial label ") +
                             std::string(to_string(origin.label_initial)) + ", final " +
                             std::string(to_string(origin.label_final)) +
                             (origin.converged ? ", converged" : ", not converged") +
                             fmt(", seed nadir %.4f Hz vs limit 0.8 Hz", seed_nadir));

    const SampleRecord* stable = nullptr;
    const SampleRecord* unstable = nullptr;
    std::size_t converged = 0, n_random = seeds.size() - 1;
    for (std::size_t i = 0; i < n_random; ++i) {
      const auto& r = data.records[i];
      converged += r.converged;
      if (!stable && r.label_initial == Label::kStable) stable = &r;
      if (!unstable && r.label_initial == Label::kUnstable) unstable = &r;
    }
    const bool stable_ok = stable && stable->converged && stable->label_final == Label::kUnstable &&
                           brackets(*stable, p) && stable->iterations <= cfg.max_iter;
    Gate::sub(stable_ok, stable ? fmt("first stable seed flips to 1 in %.0f iterations, last "
                                      "two iterates bracket the boundary",
                                      stable->iterations)
                                : std::string("no stable seed in the draw"));
    const bool unstable_ok = unstable && unstable->converged &&
                             unstable->label_final == Label::kStable && brackets(*unstable, p);
    Gate::sub(unstable_ok, unstable ? fmt("first unstable seed stabilizes in %.0f iterations, "
                                          "brackets the boundary",
                                          unstable->iterations)
                                    : std::string("no unstable seed in the draw"));
    const bool origin_stabilizes = origin.label_initial == Label::kUnstable && brackets(origin, p) &&
                                   origin.label_final == Label::kStable;
    Gate::sub(origin_stabilizes, fmt("theta=0 (unstable) stabilizes in %.0f iterations",
                                     origin.iterations));
    const double rate = static_cast<double>(converged) / n_random;
    Gate::sub(rate >= kMinConvergedFraction,
              fmt("convergence rate %.0f/%.0f = %.2f (>= 0.5), %.1f s", converged, n_random,
                  rate, secs));

    gate.criterion(6, "boundary sampling reproduction",
                   origin_ok && stable_ok && unstable_ok && rate >= kMinConvergedFraction,
                   fmt("convergence rate %.2f; theta=0 stable-seed clause ", rate) +
                       (origin_ok ? "holds" : "does not hold (theta=0 is unstable)"));
  }

  {  // 7
    const bool ok = central.err_g_ss <= kGradTolPct;
    gate.criterion(7, "steady-state gradient", ok,
                   fmt("FMAD vs central FD g_ss error %.3g%% (<= 0.01%%); reported "
                       "|g_ss|/max(|g_rocof|,|g_nadir|) = %.4g",
                       central.err_g_ss, bench.ss_gradient_ratio));
  }

  {  // 8
    const bool ok = streaming.memory_bytes < fmad.memory_bytes;
    gate.criterion(8, "streaming memory below full storage", ok,
                   fmt("streaming %.0f B < full %.0f B (batch 20, 60000 steps, tangents)",
                       static_cast<double>(streaming.memory_bytes),
                       static_cast<double>(fmad.memory_bytes)));
  }

  {  // 9
    test::TempDir dir;
    auto run = [&](const std::string& out) {
      const std::string cmd = std::string("\"") + FREQSAMP_TOOL + "\" sample --config \"" +
                              FREQSAMP_DEFAULT_CONFIG + "\" --count 20 --no-timestamp --output \"" +
                              out + "\" > /dev/null";
      return std::system(cmd.c_str());
    };
    const int a = run(dir.file("a.csv"));
    const int b = run(dir.file("b.csv"));
    const std::string da = test::slurp(dir.file("a.csv"));
    const bool same = a == 0 && b == 0 && !da.empty() && da == test::slurp(dir.file("b.csv")) &&
                      test::slurp(dir.file("a.csv.pairs.csv")) ==
                          test::slurp(dir.file("b.csv.pairs.csv"));
    gate.criterion(9, "deterministic sample output", same,
                   fmt("two CLI runs, %.0f bytes each, byte-identical: ", da.size()) +
                       (same ? "yes" : "no"));
  }

  std::printf("%d of 9 criteria failed\n", gate.failed);
  return gate.failed == 0 ? 0 : 1;
}
