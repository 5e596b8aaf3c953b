#include "freqsamp/criteria.hpp"

#include <cmath>

namespace freqsamp {

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::kRocof: return "rocof";
    case Criterion::kNadir: return "nadir";
    case Criterion::kSs: return "ss";
  }
  return "unknown";
}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::kStable: return "0";
    case Label::kUnstable: return "1";
    case Label::kInvalid: return "invalid";
  }
  return "invalid";
}

bool CriteriaSet::contains(Criterion c) const {
  switch (c) {
    case Criterion::kRocof: return rocof;
    case Criterion::kNadir: return nadir;
    case Criterion::kSs: return ss;
  }
  return false;
}

void CriteriaSet::set(Criterion c, bool on) {
  switch (c) {
    case Criterion::kRocof: rocof = on; break;
    case Criterion::kNadir: nadir = on; break;
    case Criterion::kSs: ss = on; break;
  }
}

std::vector<Criterion> CriteriaSet::enabled() const {
  std::vector<Criterion> out;
  for (Criterion c : kAllCriteria) {
    if (contains(c)) out.push_back(c);
  }
  return out;
}

double StabilityReport::value(Criterion c) const {
  switch (c) {
    case Criterion::kRocof: return rocof_hz_s;
    case Criterion::kNadir: return nadir_hz;
    case Criterion::kSs: return ss_hz;
  }
  return 0.0;
}

bool StabilityReport::passes(Criterion c) const {
  switch (c) {
    case Criterion::kRocof: return pass_rocof;
    case Criterion::kNadir: return pass_nadir;
    case Criterion::kSs: return pass_ss;
  }
  return false;
}

double threshold(const SystemParams& p, Criterion c) {
  switch (c) {
    case Criterion::kRocof: return p.thresholds.rocof_hz_s;
    case Criterion::kNadir: return p.thresholds.nadir_hz;
    case Criterion::kSs: return p.thresholds.ss_hz;
  }
  return 0.0;
}

CriticalTimes critical_times(const TrajectorySummaryd& summary) {
  CriticalTimes ct;
  ct.i_rocof = summary.peak_x2.index;
  ct.t_rocof = summary.peak_x2.time;
  ct.i_nadir = summary.peak_x1.index;
  ct.t_nadir = summary.peak_x1.time;
  ct.i_ss = summary.terminal.index;
  ct.t_ss = summary.terminal.time;
  return ct;
}

CriticalTimes critical_times(const Trajectoryd& traj) {
  return critical_times(summarize(traj));
}

StabilityReport evaluate(const TrajectorySummaryd& summary,
                         const SystemParams& p, const CriteriaSet& enabled) {
  StabilityReport rep;
  rep.critical = critical_times(summary);
  rep.rocof_hz_s = summary.peak_x2.state(1) * p.f_base;
  rep.nadir_hz = summary.peak_x1.state(0) * p.f_base;
  rep.ss_hz = summary.terminal.state(0) * p.f_base;
  rep.pass_rocof = std::abs(rep.rocof_hz_s) <= p.thresholds.rocof_hz_s;
  rep.pass_nadir = std::abs(rep.nadir_hz) <= p.thresholds.nadir_hz;
  rep.pass_ss = std::abs(rep.ss_hz) <= p.thresholds.ss_hz;
  bool stable = true;
  for (Criterion c : enabled.enabled()) stable = stable && rep.passes(c);
  rep.label = stable ? Label::kStable : Label::kUnstable;
  return rep;
}

StabilityReport evaluate(const Trajectoryd& traj, const SystemParams& p,
                         const CriteriaSet& enabled) {
  return evaluate(summarize(traj), p, enabled);
}

std::vector<LabeledSample> label_dataset(std::span<const Gains4d> thetas,
                                         const SystemParams& p,
                                         const CriteriaSet& enabled,
                                         Scheme scheme) {
  const auto runs =
      integrate_batch(thetas, p, {false, Storage::kStreaming, scheme});
  std::vector<LabeledSample> out(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].ok()) {
      out[i].report = evaluate(runs[i].value->summary, p, enabled);
      out[i].label = out[i].report->label;
    } else {
      out[i].error = runs[i].error;
    }
  }
  return out;
}

}  // namespace freqsamp
