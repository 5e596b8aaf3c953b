#pragma once

#include <atomic>
#include <cstdint>
#include <thread>

namespace freqsamp {

/// Current resident set size in bytes, from /proc/self/statm (0 if
/// unavailable).
std::int64_t resident_bytes();

/// Samples resident memory every millisecond on a background thread while
/// alive; peak_delta() is the largest increase over the RSS at construction.
class PeakRssSampler {
 public:
  PeakRssSampler();
  ~PeakRssSampler();
  PeakRssSampler(const PeakRssSampler&) = delete;
  PeakRssSampler& operator=(const PeakRssSampler&) = delete;

  /// Stops sampling (idempotent) and returns the peak delta in bytes.
  std::int64_t stop();
  std::int64_t peak_delta() const { return peak_.load() - baseline_; }

 private:
  void observe();

  std::int64_t baseline_;
  std::atomic<std::int64_t> peak_;
  std::atomic<bool> running_{true};
  std::jthread worker_;
};

}  // namespace freqsamp
