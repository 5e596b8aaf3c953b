#include "freqsamp/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "freqsamp/config.hpp"
#include "freqsamp/csv.hpp"
#include "freqsamp/sampler.hpp"
#include "freqsamp/sensitivity.hpp"

namespace freqsamp {

namespace {

struct Flags {
  std::string config;
  std::string input;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<int> max_iter;
  std::optional<int> batch_size;
  std::optional<std::string> rule;
  std::optional<std::string> direction;
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<std::string> scheme;
  std::optional<double> epsilon;
  std::optional<std::string> integrator;
  bool no_timestamp = false;
  bool raw_step = false;

  // Subcommand specific.
  std::string theta;
  bool tangents = false;
  std::optional<std::size_t> count;
  std::optional<double> mean;
  std::optional<double> std_dev;
  std::string methods;
  std::optional<int> runs;
  std::string trajectory_dir;
  std::size_t trajectory_count = 1;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run configuration");
  sub->add_option("--input", f.input, "input CSV");
  sub->add_option("--output", f.output, "output CSV");
  sub->add_option("--seed", f.seed, "random seed");
  sub->add_option("--alpha", f.alpha, "sampler step size");
  sub->add_option("--max-iter", f.max_iter, "sampler iteration cap");
  sub->add_option("--batch-size", f.batch_size, "sampler mini-batch size");
  sub->add_option("--rule", f.rule, "flip | margin:DELTA");
  sub->add_option("--direction", f.direction, "auto | stabilize | destabilize");
  sub->add_option("--dt", f.dt, "integration step (s)");
  sub->add_option("--horizon", f.horizon, "simulation horizon (s)");
  sub->add_option("--scheme", f.scheme, "finite-difference scheme: forward | central");
  sub->add_option("--epsilon", f.epsilon, "finite-difference perturbation");
  sub->add_option("--integrator", f.integrator, "euler | rk4");
  sub->add_flag("--no-timestamp", f.no_timestamp, "omit the timestamp header line");
  sub->add_flag("--raw-step", f.raw_step, "step along the raw (unnormalized) gradient");
}

RunConfig resolve_config(const Flags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
  if (f.seed) cfg.sampler.seed = *f.seed;
  if (f.alpha) cfg.sampler.alpha = *f.alpha;
  if (f.max_iter) cfg.sampler.max_iter = *f.max_iter;
  if (f.batch_size) cfg.sampler.batch_size = *f.batch_size;
  if (f.rule) cfg.sampler.rule = parse_rule(*f.rule);
  if (f.direction) cfg.sampler.direction_policy = parse_direction(*f.direction);
  if (f.dt) cfg.system.dt = *f.dt;
  if (f.horizon) cfg.system.horizon_t = *f.horizon;
  if (f.scheme) cfg.fd.scheme = parse_fd_scheme(*f.scheme);
  if (f.epsilon) cfg.fd.epsilon = *f.epsilon;
  if (f.integrator) cfg.scheme = parse_scheme(*f.integrator);
  if (f.no_timestamp) cfg.output.timestamp = false;
  if (f.raw_step) cfg.sampler.normalize_step = false;
  if (f.count) cfg.initial.count = *f.count;
  if (f.mean) cfg.initial.mean = *f.mean;
  if (f.std_dev) cfg.initial.std_dev = *f.std_dev;
  if (f.runs) cfg.bench.runs = *f.runs;
  cfg.sampler.scheme = cfg.scheme;
  cfg.fd.integrator = cfg.scheme;
  cfg.validate();
  return cfg;
}

void require_output(const Flags& f) {
  if (f.output.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "--output is required");
  }
}

Gains4d single_theta(const Flags& f) {
  if (!f.theta.empty()) {
    std::vector<double> values;
    std::stringstream ss(f.theta);
    std::string item;
    while (std::getline(ss, item, ',')) {
      values.push_back(csv::parse_double(item, 0, "--theta"));
    }
    if (values.size() != 4) {
      throw Error(ErrorKind::kInvalidArgument, "--theta needs K11,K12,K21,K22");
    }
    return Gains4d(values[0], values[1], values[2], values[3]);
  }
  if (!f.input.empty()) {
    const auto thetas = csv::read_thetas(f.input);
    if (thetas.empty()) {
      throw Error(ErrorKind::kSchemaMismatch, f.input + ": no rows");
    }
    return thetas.front();
  }
  return Gains4d::Zero();
}

std::vector<Gains4d> seeds_for(const Flags& f, const RunConfig& cfg,
                               std::size_t count, std::ostream& out) {
  if (!f.input.empty()) return csv::read_thetas(f.input);
  auto drawn = generate_initial(count, cfg.initial.mean, cfg.initial.std_dev,
                                cfg.sampler.seed, cfg.system);
  out << "generated " << drawn.thetas.size() << " seeds (" << drawn.redraws
      << " infeasible redraws)\n";
  return drawn.thetas;
}

csv::WriteOptions write_options(const RunConfig& cfg) {
  csv::WriteOptions o;
  o.timestamp = cfg.output.timestamp;
  return o;
}

int cmd_simulate(const Flags& f, std::ostream& out) {
  require_output(f);
  const RunConfig cfg = resolve_config(f);
  const Gains4d theta = single_theta(f);
  const bool tangents = f.tangents || cfg.output.tangents;
  const auto run = integrate(theta, cfg.system, {tangents, Storage::kFull, cfg.scheme});
  csv::write_trajectory(f.output, *run.trajectory, tangents, write_options(cfg));
  const auto rep = evaluate(run.summary, cfg.system, cfg.sampler.criteria);
  out << "label " << to_string(rep.label) << "  rocof " << rep.rocof_hz_s
      << " Hz/s  nadir " << rep.nadir_hz << " Hz  ss " << rep.ss_hz << " Hz\n";
  return 0;
}

int cmd_label(const Flags& f, std::ostream& out) {
  require_output(f);
  if (f.input.empty()) throw Error(ErrorKind::kInvalidArgument, "--input is required");
  const RunConfig cfg = resolve_config(f);
  const auto thetas = csv::read_thetas(f.input);
  const auto labels = label_dataset(thetas, cfg.system, cfg.sampler.criteria, cfg.scheme);
  csv::write_labeled(f.output, thetas, labels, write_options(cfg));
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& l : labels) ++counts[static_cast<int>(l.label)];
  out << "labeled " << labels.size() << ": stable " << counts[0] << ", unstable "
      << counts[1] << ", invalid " << counts[2] << "\n";
  return 0;
}

int cmd_grad(const Flags& f, std::ostream& out) {
  require_output(f);
  const RunConfig cfg = resolve_config(f);
  const Gains4d theta = single_theta(f);
  SearchDirection dir = SearchDirection::kDestabilize;
  if (cfg.sampler.direction_policy == DirectionPolicy::kForceStabilize) {
    dir = SearchDirection::kStabilize;
  }
  const auto run = integrate(theta, cfg.system, {true, Storage::kStreaming, cfg.scheme});
  const GradientSet fmad = extract_gradients(run.summary, dir);
  FdOptions fd = cfg.fd;
  fd.direction = dir;
  const FdResult approx = finite_diff_gradients(theta, cfg.system, fd);

  std::vector<csv::GradientRow> rows;
  char fd_name[64];
  std::snprintf(fd_name, sizeof fd_name, "fd-%s:%g%s", to_string(fd.scheme).c_str(),
                fd.epsilon, fd.relative ? "r" : "");
  for (Criterion c : kAllCriteria) {
    rows.push_back({std::string(to_string(c)), "fmad", fmad.get(c), 0.0});
    rows.push_back({std::string(to_string(c)), fd_name, approx.gradients.get(c),
                    percentage_error(approx.gradients.get(c), fmad.get(c))});
    out << to_string(c) << ": fmad vs " << fd_name << " max abs % err "
        << rows.back().err_pct << "\n";
  }
  csv::write_gradients(f.output, rows, write_options(cfg));
  return 0;
}

void emit_pair_trajectories(const Flags& f, const RunConfig& cfg,
                            const Dataset& data) {
  namespace fs = std::filesystem;
  fs::create_directories(f.trajectory_dir);
  const std::size_t n = std::min(f.trajectory_count, data.records.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = data.records[i];
    const std::pair<const char*, const Gains4d*> which[] = {
        {"seed", &r.theta_initial}, {"final", &r.theta_final}};
    for (const auto& [tag, theta] : which) {
      try {
        const auto run = integrate(*theta, cfg.system, {false, Storage::kFull, cfg.scheme});
        const auto path = fs::path(f.trajectory_dir) /
                          (std::string(tag) + "_" + std::to_string(i) + ".csv");
        csv::write_trajectory(path.string(), *run.trajectory, false, write_options(cfg));
      } catch (const Error&) {
        // Invalid records have no trajectory to draw.
      }
    }
  }
}

int cmd_sample(const Flags& f, std::ostream& out) {
  require_output(f);
  const RunConfig cfg = resolve_config(f);
  const auto seeds = seeds_for(f, cfg, cfg.initial.count, out);
  const Dataset data = augment(seeds, cfg.system, cfg.sampler);
  csv::write_dataset(f.output, data, write_options(cfg));
  std::size_t converged = 0, flipped_to[2] = {0, 0};
  for (const auto& r : data.records) {
    converged += r.converged;
    if (r.converged && r.label_final != Label::kInvalid) {
      ++flipped_to[static_cast<int>(r.label_final)];
    }
  }
  out << "converged " << converged << "/" << data.records.size()
      << " (to stable " << flipped_to[0] << ", to unstable " << flipped_to[1]
      << ")\n";
  if (!f.trajectory_dir.empty()) emit_pair_trajectories(f, cfg, data);
  return 0;
}

int cmd_bench(const Flags& f, std::ostream& out) {
  require_output(f);
  RunConfig cfg = resolve_config(f);
  std::vector<MethodSpec> methods;
  std::vector<std::string> names = cfg.bench.methods;
  if (!f.methods.empty()) {
    names.clear();
    std::stringstream ss(f.methods);
    std::string item;
    while (std::getline(ss, item, ',')) names.push_back(item);
  }
  for (const auto& n : names) {
    MethodSpec spec = parse_method(n);
    // Bare FD names pick up the configured epsilon.
    if (n.find(':') == std::string::npos &&
        (spec.method == Method::kFdCentral || spec.method == Method::kFdForward)) {
      spec.epsilon = cfg.fd.epsilon;
      spec.relative_epsilon = cfg.fd.relative;
    }
    methods.push_back(spec);
  }
  const std::size_t count = f.count ? *f.count : cfg.bench.count;
  const auto thetas = seeds_for(f, cfg, count, out);
  const auto report = compare_methods(thetas, cfg.system, methods,
                                      parse_method(cfg.bench.reference),
                                      {cfg.bench.runs, cfg.scheme});
  csv::write_bench(f.output, report, write_options(cfg));
  for (const auto& row : report.rows) {
    out << row.method << ": time " << row.time_s << " s, memory "
        << row.memory_bytes << " B, err g_nadir " << row.err_g_nadir
        << " %, err g_rocof " << row.err_g_rocof << " %\n";
  }
  out << "g_ss / max(g_rocof, g_nadir) = " << report.ss_gradient_ratio << "\n";
  return 0;
}

int cmd_gen(const Flags& f, std::ostream& out) {
  require_output(f);
  const RunConfig cfg = resolve_config(f);
  const auto drawn = generate_initial(cfg.initial.count, cfg.initial.mean,
                                      cfg.initial.std_dev, cfg.sampler.seed,
                                      cfg.system);
  csv::WriteOptions o = write_options(cfg);
  o.metadata.push_back("seed=" + std::to_string(cfg.sampler.seed));
  o.metadata.push_back("redraws=" + std::to_string(drawn.redraws));
  csv::write_thetas(f.output, drawn.thetas, o);
  out << "wrote " << drawn.thetas.size() << " seeds (" << drawn.redraws
      << " infeasible redraws)\n";
  return 0;
}

void print_error(std::ostream& err, std::string_view kind, const std::string& message) {
  err << nlohmann::json{{"error", kind}, {"message", message}}.dump() << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Frequency-stability dataset sampler"};
  app.require_subcommand(1);
  Flags f;

  auto* simulate = app.add_subcommand("simulate", "one theta -> trajectory CSV");
  add_common(simulate, f);
  simulate->add_option("--theta", f.theta, "K11,K12,K21,K22 (default: first --input row, else 0)");
  simulate->add_flag("--tangents", f.tangents, "include sensitivity columns");

  auto* label = app.add_subcommand("label", "theta CSV -> labeled CSV");
  add_common(label, f);

  auto* grad = app.add_subcommand("grad", "one theta -> FMAD vs finite-difference gradients");
  add_common(grad, f);
  grad->add_option("--theta", f.theta, "K11,K12,K21,K22");

  auto* sample = app.add_subcommand("sample", "seeds -> augmented dataset CSV");
  add_common(sample, f);
  sample->add_option("--count", f.count, "generated seed count when no --input");
  sample->add_option("--trajectories", f.trajectory_dir, "directory for seed/final trajectory CSVs");
  sample->add_option("--trajectory-count", f.trajectory_count, "records to export trajectories for");

  auto* bench = app.add_subcommand("bench", "compare gradient methods -> bench CSV");
  add_common(bench, f);
  bench->add_option("--methods", f.methods, "comma-separated methods");
  bench->add_option("--runs", f.runs, "timing repetitions");
  bench->add_option("--count", f.count, "generated batch size when no --input");

  auto* gen = app.add_subcommand("gen", "Normal seeds CSV");
  add_common(gen, f);
  gen->add_option("--count", f.count, "number of seeds");
  gen->add_option("--mean", f.mean, "component mean");
  gen->add_option("--std", f.std_dev, "component standard deviation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    print_error(err, "Usage", e.what());
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(f, out);
    if (label->parsed()) return cmd_label(f, out);
    if (grad->parsed()) return cmd_grad(f, out);
    if (sample->parsed()) return cmd_sample(f, out);
    if (bench->parsed()) return cmd_bench(f, out);
    if (gen->parsed()) return cmd_gen(f, out);
  } catch (const Error& e) {
    print_error(err, to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error(err, "Io", e.what());
    return 1;
  }
  return 2;
}

}  // namespace freqsamp
