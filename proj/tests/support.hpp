#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "freqsamp/dynamics.hpp"
#include "freqsamp/types.hpp"

namespace freqsamp::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("freqsamp_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

/// Gains with i.i.d. Normal(0, sd^2) components, feasible K12.
inline std::vector<Gains4d> random_gains(std::size_t n, double sd,
                                         std::uint64_t seed,
                                         const SystemParams& p = {}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, sd);
  std::vector<Gains4d> out;
  while (out.size() < n) {
    Gains4d g(dist(rng), dist(rng), dist(rng), dist(rng));
    if (validate_gains(g, p).feasible) out.push_back(g);
  }
  return out;
}

inline double inf_norm(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

/// |a - b|_inf / max(|b|_inf, floor).
inline double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                      double floor = 1e-12) {
  return inf_norm(a - b) / std::max(inf_norm(b), floor);
}

/// Shorter horizon for tests that only need the transient.
inline SystemParams short_params(double horizon = 10.0) {
  SystemParams p;
  p.horizon_t = horizon;
  return p;
}

}  // namespace freqsamp::test
