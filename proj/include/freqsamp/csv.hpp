#pragma once

// CSV file formats. Numbers are written with 17 significant digits so every
// double round-trips exactly; lines starting with '#' are metadata and are
// skipped by readers that do not need them. All writers replace the target
// atomically (temp file + rename).

#include <string>
#include <vector>

#include "freqsamp/criteria.hpp"
#include "freqsamp/sampler.hpp"
#include "freqsamp/sensitivity.hpp"

namespace freqsamp::csv {

/// Header-line options shared by all writers.
struct WriteOptions {
  bool timestamp = true;
  // Extra "# key=value" lines, written after the timestamp.
  std::vector<std::string> metadata;
};

std::string format_double(double v);
double parse_double(const std::string& field, std::size_t row,
                    const std::string& column);

/// Writes `content` to `path` through a sibling temp file and rename.
void write_atomic(const std::string& path, const std::string& content);

std::vector<Gains4d> read_thetas(const std::string& path);
void write_thetas(const std::string& path, const std::vector<Gains4d>& thetas,
                  const WriteOptions& opts = {});

/// Labeled output for plain labeling (converged=0, iterations=0).
void write_labeled(const std::string& path, const std::vector<Gains4d>& thetas,
                   const std::vector<LabeledSample>& labels,
                   const WriteOptions& opts = {});

/// Dataset CSV plus the companion "<path>.pairs.csv" holding each record's
/// seed, previous iterate, direction and failure state.
void write_dataset(const std::string& path, const Dataset& data,
                   const WriteOptions& opts = {});
Dataset read_dataset(const std::string& path);
std::string pairs_path(const std::string& dataset_path);

void write_trajectory(const std::string& path, const Trajectoryd& traj,
                      bool with_tangents, const WriteOptions& opts = {});
Trajectoryd read_trajectory(const std::string& path);

void write_bench(const std::string& path, const ComparisonReport& report,
                 const WriteOptions& opts = {});

struct GradientRow {
  std::string criterion;
  std::string method;
  Gains4d gradient = Gains4d::Zero();
  double err_pct = 0.0;
};

void write_gradients(const std::string& path,
                     const std::vector<GradientRow>& rows,
                     const WriteOptions& opts = {});

inline const char* kThetaHeader = "K11,K12,K21,K22";
inline const char* kDatasetHeader =
    "K11,K12,K21,K22,label,rocof_hz_s,nadir_hz,ss_hz,t_rocof,t_nadir,"
    "converged,iterations";
inline const char* kBenchHeader =
    "method,memory_bytes,time_s,err_x_tss,err_x_tnadir,err_x_trocof,"
    "err_g_nadir,err_g_rocof";

}  // namespace freqsamp::csv
