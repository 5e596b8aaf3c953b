#include "freqsamp/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace freqsamp {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) {
  throw Error(ErrorKind::kSchemaMismatch, "config: " + what);
}

const json& section(const json& root, const char* name) {
  static const json empty = json::object();
  if (!root.contains(name)) return empty;
  const json& s = root.at(name);
  if (!s.is_object()) bad(std::string("section '") + name + "' must be an object");
  return s;
}

void reject_unknown(const json& obj, const std::string& where,
                    const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) bad("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    bad(std::string("key '") + key + "': " + e.what());
  }
}

std::string to_string(Contribution c) {
  return c == Contribution::kViolatedOnly ? "violated" : "all";
}

Contribution parse_contribution(const std::string& s) {
  if (s == "all") return Contribution::kAllEnabled;
  if (s == "violated") return Contribution::kViolatedOnly;
  bad("contribution must be all|violated, got '" + s + "'");
}

std::string to_string(ProjectionFormula f) {
  return f == ProjectionFormula::kPrintedNumerator ? "printed" : "normal-plane";
}

ProjectionFormula parse_projection(const std::string& s) {
  if (s == "normal-plane") return ProjectionFormula::kNormalPlane;
  if (s == "printed") return ProjectionFormula::kPrintedNumerator;
  bad("projection must be normal-plane|printed, got '" + s + "'");
}

}  // namespace

std::string to_string(Scheme s) { return s == Scheme::kRk4 ? "rk4" : "euler"; }

Scheme parse_scheme(const std::string& text) {
  if (text == "euler") return Scheme::kEuler;
  if (text == "rk4") return Scheme::kRk4;
  throw Error(ErrorKind::kInvalidArgument, "integrator must be euler|rk4, got '" + text + "'");
}

std::string to_string(const SamplingRule& rule) {
  if (rule.kind == RuleKind::kFlip) return "flip";
  char buf[64];
  std::snprintf(buf, sizeof buf, "margin:%.17g", rule.delta);
  return buf;
}

SamplingRule parse_rule(const std::string& text) {
  SamplingRule rule;
  if (text == "flip") return rule;
  if (text.rfind("margin:", 0) == 0) {
    const std::string num = text.substr(7);
    char* end = nullptr;
    rule.kind = RuleKind::kMargin;
    rule.delta = std::strtod(num.c_str(), &end);
    if (!num.empty() && end == num.c_str() + num.size() && rule.delta > 0) {
      return rule;
    }
  }
  throw Error(ErrorKind::kInvalidArgument,
              "rule must be flip|margin:DELTA with DELTA > 0, got '" + text + "'");
}

std::string to_string(DirectionPolicy d) {
  switch (d) {
    case DirectionPolicy::kAuto: return "auto";
    case DirectionPolicy::kForceStabilize: return "stabilize";
    case DirectionPolicy::kForceDestabilize: return "destabilize";
  }
  return "auto";
}

DirectionPolicy parse_direction(const std::string& text) {
  if (text == "auto") return DirectionPolicy::kAuto;
  if (text == "stabilize") return DirectionPolicy::kForceStabilize;
  if (text == "destabilize") return DirectionPolicy::kForceDestabilize;
  throw Error(ErrorKind::kInvalidArgument,
              "direction must be auto|stabilize|destabilize, got '" + text + "'");
}

FdScheme parse_fd_scheme(const std::string& text) {
  if (text == "forward") return FdScheme::kForward;
  if (text == "central") return FdScheme::kCentral;
  throw Error(ErrorKind::kInvalidArgument,
              "scheme must be forward|central, got '" + text + "'");
}

std::string to_string(FdScheme s) {
  return s == FdScheme::kForward ? "forward" : "central";
}

void RunConfig::validate() const {
  system.validate();
  system.steps();
  sampler.validate();
  if (!(fd.epsilon > 0)) throw Error(ErrorKind::kInvalidArgument, "fd epsilon must be > 0");
  if (bench.runs < 1) throw Error(ErrorKind::kInvalidArgument, "bench runs must be >= 1");
  if (!(initial.std_dev >= 0)) throw Error(ErrorKind::kInvalidArgument, "initial std must be >= 0");
  for (const auto& m : bench.methods) parse_method(m);
  parse_method(bench.reference);
}

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) bad("top level must be an object");
  reject_unknown(root, "top level",
                 {"system", "solver", "criteria", "sampler", "bench", "output"});

  RunConfig cfg;
  const json& sys = section(root, "system");
  reject_unknown(sys, "system", {"r", "tau", "m0", "d0", "delta_p", "f_base"});
  read(sys, "r", cfg.system.r);
  read(sys, "tau", cfg.system.tau);
  read(sys, "m0", cfg.system.m0);
  read(sys, "d0", cfg.system.d0);
  read(sys, "delta_p", cfg.system.delta_p);
  read(sys, "f_base", cfg.system.f_base);

  const json& solver = section(root, "solver");
  reject_unknown(solver, "solver", {"integrator", "dt", "horizon_t"});
  read(solver, "dt", cfg.system.dt);
  read(solver, "horizon_t", cfg.system.horizon_t);
  std::string scheme = to_string(cfg.scheme);
  read(solver, "integrator", scheme);
  cfg.scheme = parse_scheme(scheme);

  const json& crit = section(root, "criteria");
  reject_unknown(crit, "criteria",
                 {"enabled", "tau_ss_hz", "tau_nadir_hz", "tau_rocof_hz_s"});
  read(crit, "tau_ss_hz", cfg.system.thresholds.ss_hz);
  read(crit, "tau_nadir_hz", cfg.system.thresholds.nadir_hz);
  read(crit, "tau_rocof_hz_s", cfg.system.thresholds.rocof_hz_s);
  if (crit.contains("enabled")) {
    std::vector<std::string> names;
    read(crit, "enabled", names);
    CriteriaSet set{false, false, false};
    for (const auto& n : names) {
      bool known = false;
      for (Criterion c : kAllCriteria) {
        if (n == to_string(c)) {
          set.set(c, true);
          known = true;
        }
      }
      if (!known) bad("unknown criterion '" + n + "'");
    }
    cfg.sampler.criteria = set;
  }

  const json& smp = section(root, "sampler");
  reject_unknown(smp, "sampler",
                 {"alpha", "max_iter", "batch_size", "rule", "direction",
                  "normalize_step", "backtrack_limit", "seed", "shuffle_surgery",
                  "projection", "contribution", "initial_count", "initial_mean",
                  "initial_std"});
  read(smp, "alpha", cfg.sampler.alpha);
  read(smp, "max_iter", cfg.sampler.max_iter);
  read(smp, "batch_size", cfg.sampler.batch_size);
  read(smp, "normalize_step", cfg.sampler.normalize_step);
  read(smp, "backtrack_limit", cfg.sampler.backtrack_limit);
  read(smp, "seed", cfg.sampler.seed);
  read(smp, "shuffle_surgery", cfg.sampler.shuffle_surgery);
  read(smp, "initial_count", cfg.initial.count);
  read(smp, "initial_mean", cfg.initial.mean);
  read(smp, "initial_std", cfg.initial.std_dev);
  std::string text = to_string(cfg.sampler.rule);
  read(smp, "rule", text);
  cfg.sampler.rule = parse_rule(text);
  text = to_string(cfg.sampler.direction_policy);
  read(smp, "direction", text);
  cfg.sampler.direction_policy = parse_direction(text);
  text = to_string(cfg.sampler.projection);
  read(smp, "projection", text);
  cfg.sampler.projection = parse_projection(text);
  text = to_string(cfg.sampler.contribution);
  read(smp, "contribution", text);
  cfg.sampler.contribution = parse_contribution(text);

  const json& bench = section(root, "bench");
  reject_unknown(bench, "bench",
                 {"methods", "reference", "runs", "count", "fd_scheme",
                  "epsilon", "relative_epsilon"});
  read(bench, "methods", cfg.bench.methods);
  read(bench, "reference", cfg.bench.reference);
  read(bench, "runs", cfg.bench.runs);
  read(bench, "count", cfg.bench.count);
  read(bench, "epsilon", cfg.fd.epsilon);
  read(bench, "relative_epsilon", cfg.fd.relative);
  text = to_string(cfg.fd.scheme);
  read(bench, "fd_scheme", text);
  cfg.fd.scheme = parse_fd_scheme(text);

  const json& out = section(root, "output");
  reject_unknown(out, "output", {"timestamp", "tangents"});
  read(out, "timestamp", cfg.output.timestamp);
  read(out, "tangents", cfg.output.tangents);

  cfg.sampler.scheme = cfg.scheme;
  cfg.fd.integrator = cfg.scheme;
  cfg.validate();
  return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
  std::vector<std::string> enabled;
  for (Criterion c : cfg.sampler.criteria.enabled()) {
    enabled.emplace_back(to_string(c));
  }
  json root = {
      {"system",
       {{"r", cfg.system.r},
        {"tau", cfg.system.tau},
        {"m0", cfg.system.m0},
        {"d0", cfg.system.d0},
        {"delta_p", cfg.system.delta_p},
        {"f_base", cfg.system.f_base}}},
      {"solver",
       {{"integrator", to_string(cfg.scheme)},
        {"dt", cfg.system.dt},
        {"horizon_t", cfg.system.horizon_t}}},
      {"criteria",
       {{"enabled", enabled},
        {"tau_ss_hz", cfg.system.thresholds.ss_hz},
        {"tau_nadir_hz", cfg.system.thresholds.nadir_hz},
        {"tau_rocof_hz_s", cfg.system.thresholds.rocof_hz_s}}},
      {"sampler",
       {{"alpha", cfg.sampler.alpha},
        {"max_iter", cfg.sampler.max_iter},
        {"batch_size", cfg.sampler.batch_size},
        {"rule", to_string(cfg.sampler.rule)},
        {"direction", to_string(cfg.sampler.direction_policy)},
        {"normalize_step", cfg.sampler.normalize_step},
        {"backtrack_limit", cfg.sampler.backtrack_limit},
        {"seed", cfg.sampler.seed},
        {"shuffle_surgery", cfg.sampler.shuffle_surgery},
        {"projection", to_string(cfg.sampler.projection)},
        {"contribution", to_string(cfg.sampler.contribution)},
        {"initial_count", cfg.initial.count},
        {"initial_mean", cfg.initial.mean},
        {"initial_std", cfg.initial.std_dev}}},
      {"bench",
       {{"methods", cfg.bench.methods},
        {"reference", cfg.bench.reference},
        {"runs", cfg.bench.runs},
        {"count", cfg.bench.count},
        {"fd_scheme", to_string(cfg.fd.scheme)},
        {"epsilon", cfg.fd.epsilon},
        {"relative_epsilon", cfg.fd.relative}}},
      {"output",
       {{"timestamp", cfg.output.timestamp},
        {"tangents", cfg.output.tangents}}},
  };
  return root.dump(2) + "\n";
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace freqsamp
