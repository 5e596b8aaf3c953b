#include <cmath>
#include <string>

#include "freqsamp/error.hpp"
#include "freqsamp/types.hpp"

namespace freqsamp {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::kInvalidArgument, std::string("invalid system parameters: ") + what);
}

}  // namespace

void SystemParams::validate() const {
  require(r > 0, "r must be > 0");
  require(tau > 0, "tau must be > 0");
  require(m0 > 0, "m0 must be > 0");
  require(dt > 0, "dt must be > 0");
  require(horizon_t >= dt, "horizon_t must be >= dt");
  require(f_base > 0, "f_base must be > 0");
  require(thresholds.ss_hz > 0 && thresholds.nadir_hz > 0 &&
              thresholds.rocof_hz_s > 0,
          "thresholds must be > 0");
  require(std::isfinite(d0) && std::isfinite(delta_p), "d0 and delta_p must be finite");
}

long SystemParams::steps() const {
  const double ratio = horizon_t / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw Error(ErrorKind::kInvalidArgument,
                "dt=" + std::to_string(dt) + " does not divide horizon_t=" +
                    std::to_string(horizon_t));
  }
  return static_cast<long>(rounded);
}

}  // namespace freqsamp
