#include "freqsamp/memory.hpp"

#include <unistd.h>

#include <chrono>
#include <fstream>

namespace freqsamp {

std::int64_t resident_bytes() {
  std::ifstream statm("/proc/self/statm");
  std::int64_t total_pages = 0, resident_pages = 0;
  if (!(statm >> total_pages >> resident_pages)) return 0;
  return resident_pages * static_cast<std::int64_t>(sysconf(_SC_PAGESIZE));
}

PeakRssSampler::PeakRssSampler()
    : baseline_(resident_bytes()), peak_(baseline_) {
  worker_ = std::jthread([this] {
    while (running_.load()) {
      observe();
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
  });
}

PeakRssSampler::~PeakRssSampler() { stop(); }

void PeakRssSampler::observe() {
  const std::int64_t now = resident_bytes();
  std::int64_t seen = peak_.load();
  while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
  }
}

std::int64_t PeakRssSampler::stop() {
  if (running_.exchange(false) && worker_.joinable()) worker_.join();
  observe();
  return peak_delta();
}

}  // namespace freqsamp
