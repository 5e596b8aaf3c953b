#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "freqsamp/sampler.hpp"
#include "freqsamp/sensitivity.hpp"
#include "freqsamp/types.hpp"

namespace freqsamp {

struct InitialDraw {
  std::size_t count = 100;
  double mean = 0.0;
  double std_dev = 50.0;
};

struct BenchConfig {
  std::vector<std::string> methods = {"fmad", "fmad-streaming",
                                      "fd-central:1e-6r", "fd-forward:1e-12",
                                      "fd-forward:1e-14"};
  std::string reference = "fmad";
  int runs = 5;
  std::size_t count = 20;
};

struct OutputConfig {
  bool timestamp = true;
  bool tangents = false;
};

/// Everything a CLI run needs. Round-trips losslessly through JSON with
/// sections {system, solver, criteria, sampler, bench, output}; unknown keys
/// are rejected.
struct RunConfig {
  SystemParams system;
  Scheme scheme = Scheme::kEuler;
  SamplerConfig sampler;
  InitialDraw initial;
  FdOptions fd;
  BenchConfig bench;
  OutputConfig output;

  void validate() const;
};

RunConfig parse_config(const std::string& json_text);
std::string serialize_config(const RunConfig& cfg);
RunConfig load_config(const std::string& path);

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& text);
std::string to_string(const SamplingRule& rule);
/// "flip" or "margin:DELTA".
SamplingRule parse_rule(const std::string& text);
std::string to_string(DirectionPolicy d);
DirectionPolicy parse_direction(const std::string& text);
FdScheme parse_fd_scheme(const std::string& text);
std::string to_string(FdScheme s);

}  // namespace freqsamp
