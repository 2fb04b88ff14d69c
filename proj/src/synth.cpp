#include "sepcast/synth.hpp"

#include <algorithm>
#include <cmath>

namespace sepcast {

std::string to_string(SignalMode mode) {
  return mode == SignalMode::progressive ? "progressive" : "sudden";
}

SignalMode signal_mode_from_string(const std::string& s) {
  if (s == "progressive") return SignalMode::progressive;
  if (s == "sudden") return SignalMode::sudden;
  throw ConfigError("unknown signal mode '" + s + "'");
}

void SynthConfig::validate() const {
  if (n_patients < 1) throw ConfigError("n_patients must be >= 1");
  if (event_rate < 0.0 || event_rate > 1.0)
    throw ConfigError("event_rate must be in [0, 1]");
  if (stay_hours_min < 1 || stay_hours_max < stay_hours_min)
    throw ConfigError("stay_hours range is degenerate");
  if (onset_day_min < 2 || onset_day_max < onset_day_min || onset_day_max > 14)
    throw ConfigError("onset_day range must sit within days 2..14");
  if (pre_onset_ramp_hours < 1)
    throw ConfigError("pre_onset_ramp_hours must be >= 1");
  for (const auto& [g, r] : missing_rate)
    if (r < 0.0 || r > 1.0)
      throw ConfigError("missing rate for " + to_string(g) + " must be in [0, 1]");
  const int onset_lo = std::max(min_onset_hour, 24 * (onset_day_min - 1));
  const int onset_hi = 24 * onset_day_max - 1;
  if (event_rate > 0.0 && (onset_lo > onset_hi || onset_lo + 1 > stay_hours_max))
    throw ConfigError("onset window is infeasible for the configured stay length");
}

namespace {

struct VitalSpec {
  const char* name;
  double mean, baseline_sd, step_sd;
};

// AR(1) persistence for vitals.
constexpr double kPhi = 0.8;

const VitalSpec kVitals[] = {
    {"heart_rate", 80.0, 12.0, 2.0}, {"resp_rate", 18.0, 3.5, 0.8},
    {"temperature", 37.0, 0.5, 0.12}, {"map", 85.0, 10.0, 1.8},
    {"dbp", 65.0, 8.0, 1.5},          {"fio2", 0.45, 0.12, 0.02},
};

struct LabSpec {
  const char* name;
  double mean, baseline_sd, step_sd;
  bool trendable;
};

const LabSpec kLabs[] = {
    {"creatinine", 1.0, 0.25, 0.05, true}, {"lactate", 1.8, 0.5, 0.12, true},
    {"bicarb", 24.0, 2.0, 0.3, true},      {"wbc", 11.0, 3.0, 0.5, false},
    {"bun", 18.0, 5.0, 0.6, true},         {"urine_output", 70.0, 25.0, 8.0, false},
};

// Signed drift per fully-ramped informative column (progressive mode).
// Which columns respond, and how hard, varies per patient.
struct Drift {
  const char* column;
  double amount;
};

const Drift kProgressiveDrift[] = {
    {"heart_rate", 14.0}, {"resp_rate", 4.5},  {"temperature", 1.0},
    {"map", -10.0},       {"dbp", -7.0},       {"fio2", 0.09},
    {"creatinine", 0.7},
};

const Drift kSuddenStep[] = {
    {"heart_rate", 30.0}, {"map", -24.0}, {"lactate", 3.0},
};

// Weak precursor ahead of the step; deliberately faint at the 6-hour mark.
const Drift kSuddenPrecursor[] = {
    {"heart_rate", 8.0}, {"resp_rate", 2.6}, {"map", -5.5}, {"dbp", -4.0},
};

constexpr int kSuddenPrecursorHours = 10;
constexpr double kResponderRate = 0.55;

}  // namespace

FeatureSchema synth_schema() {
  FeatureSchema s;
  for (const auto& v : kVitals) s.columns.push_back({v.name, Group::G1, true});
  for (const char* name :
       {"age", "sex", "transfer_admit", "apache", "abx_48h", "surg_48h"})
    s.columns.push_back({name, Group::G2, false});
  s.columns.push_back({"bolus_total", Group::G3, true});
  for (const char* name : {"rbc_total", "vent_days", "surg_hours"})
    s.columns.push_back({name, Group::G3, false});
  for (const auto& l : kLabs) s.columns.push_back({l.name, Group::G4, l.trendable});
  s.validate();
  return s;
}

namespace {

struct PatientPlan {
  int stay = 0;
  int onset = -1;  // < 0: control
};

double drift_multiplier(const SynthConfig& cfg, int hour, int onset) {
  if (onset < 0) return 0.0;
  if (cfg.signal_mode == SignalMode::progressive) {
    const int start = onset - cfg.pre_onset_ramp_hours;
    if (hour < start) return 0.0;
    const double progress =
        static_cast<double>(hour - start + 1) / cfg.pre_onset_ramp_hours;
    return std::min(1.0, progress);
  }
  return 0.0;
}

double sudden_precursor_multiplier(const SynthConfig& cfg, int hour, int onset) {
  if (onset < 0 || cfg.signal_mode != SignalMode::sudden) return 0.0;
  const int start = onset - kSuddenPrecursorHours;
  if (hour < start) return 0.0;
  return std::min(1.0, static_cast<double>(hour - start + 1) /
                           kSuddenPrecursorHours);
}

bool sudden_step_active(const SynthConfig& cfg, int hour, int onset) {
  return onset >= 0 && cfg.signal_mode == SignalMode::sudden && hour >= onset - 1;
}

/// Per-patient effective drift amounts: a seeded subset of the mode's drift
/// columns responds (at least two), with a patient-level amplitude factor.
std::map<std::string, double> plan_drifts(const SynthConfig& cfg, Rng& rng,
                                          bool is_event) {
  std::map<std::string, double> plan;
  if (!is_event) return plan;
  const Drift* table = cfg.signal_mode == SignalMode::progressive
                           ? kProgressiveDrift
                           : kSuddenPrecursor;
  const size_t count = cfg.signal_mode == SignalMode::progressive
                           ? std::size(kProgressiveDrift)
                           : std::size(kSuddenPrecursor);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double jitter = 0.55 + 0.9 * unit(rng);
  std::vector<size_t> active;
  for (size_t i = 0; i < count; ++i)
    if (unit(rng) < kResponderRate) active.push_back(i);
  size_t forced = 0;
  while (active.size() < 2) {  // every case responds somewhere
    std::uniform_int_distribution<size_t> pick(0, count - 1);
    const size_t i = pick(rng);
    if (std::find(active.begin(), active.end(), i) == active.end())
      active.push_back(i);
    if (++forced > 32) break;
  }
  for (size_t i : active) plan[table[i].column] = table[i].amount * jitter;
  return plan;
}

double signal_for(const SynthConfig& cfg,
                  const std::map<std::string, double>& plan,
                  const std::string& column, int hour, int onset) {
  double total = 0.0;
  if (cfg.signal_mode == SignalMode::progressive) {
    const double m = drift_multiplier(cfg, hour, onset);
    if (m > 0.0) {
      auto it = plan.find(column);
      if (it != plan.end()) total += it->second * m;
    }
  } else {
    const double m = sudden_precursor_multiplier(cfg, hour, onset);
    if (m > 0.0) {
      auto it = plan.find(column);
      if (it != plan.end()) total += it->second * m;
    }
    if (sudden_step_active(cfg, hour, onset))
      for (const auto& d : kSuddenStep)
        if (column == d.column) total += d.amount;
  }
  return total * cfg.signal_scale;
}

}  // namespace

Cohort generate_cohort(const SynthConfig& cfg) {
  cfg.validate();
  Cohort cohort;
  cohort.schema = synth_schema();
  const int f = cohort.schema.size();

  const int onset_lo = std::max(cfg.min_onset_hour, 24 * (cfg.onset_day_min - 1));
  const int onset_day_hi = 24 * cfg.onset_day_max - 1;

  for (int pid = 0; pid < cfg.n_patients; ++pid) {
    Rng rng(derive_seed(cfg.seed, "patient", static_cast<uint64_t>(pid)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    PatientPlan plan;
    const bool is_event = unit(rng) < cfg.event_rate;
    if (is_event) {
      const int stay_lo = std::max(cfg.stay_hours_min, onset_lo + 1);
      if (stay_lo > cfg.stay_hours_max)
        throw ConfigError("onset window is infeasible for the configured stay length");
      std::uniform_int_distribution<int> stay_pick(stay_lo, cfg.stay_hours_max);
      plan.stay = stay_pick(rng);
      const int hi = std::min(plan.stay - 1, onset_day_hi);
      std::uniform_int_distribution<int> onset_pick(onset_lo, hi);
      plan.onset = onset_pick(rng);
    } else {
      std::uniform_int_distribution<int> stay_pick(cfg.stay_hours_min,
                                                   cfg.stay_hours_max);
      plan.stay = stay_pick(rng);
    }

    const std::map<std::string, double> drifts = plan_drifts(cfg, rng, is_event);

    PatientSeries p;
    p.patient_id = "p" + std::to_string(pid + 1);
    p.start_hour = 0;
    p.values.resize(plan.stay, f);
    p.observed = MaskArray::Constant(plan.stay, f, true);
    p.labels.onset = VectorXi::Zero(plan.stay);
    if (plan.onset >= 0)
      for (int h = plan.onset; h < plan.stay; ++h) p.labels.onset[h] = 1;

    int col = 0;
    // G1 vitals: AR(1) around a per-patient baseline, signal added on top.
    for (const auto& v : kVitals) {
      const double baseline = v.mean + v.baseline_sd * gauss(rng);
      double latent = baseline + v.step_sd * gauss(rng);
      for (int h = 0; h < plan.stay; ++h) {
        p.values(h, col) = latent + signal_for(cfg, drifts, v.name, h, plan.onset);
        latent = baseline + kPhi * (latent - baseline) + v.step_sd * gauss(rng);
      }
      ++col;
    }
    // G2 static profile, constant per patient.
    {
      std::uniform_int_distribution<int> age_pick(16, 90);
      const double age = age_pick(rng);
      const double sex = unit(rng) < 0.5 ? 0.0 : 1.0;
      const double transfer = unit(rng) < 0.3 ? 1.0 : 0.0;
      const double apache = std::clamp(55.0 + 15.0 * gauss(rng), 0.0, 120.0);
      const double abx = unit(rng) < 0.45 ? 1.0 : 0.0;
      const double surg = unit(rng) < 0.5 ? 1.0 : 0.0;
      const double statics[6] = {age, sex, transfer, apache, abx, surg};
      for (double s : statics) {
        for (int h = 0; h < plan.stay; ++h) p.values(h, col) = s;
        ++col;
      }
    }
    // G3 cumulative exposures.
    {
      double bolus = 500.0 * std::floor(4.0 * unit(rng));
      double rbc = 0.0, surg_hours = 0.0;
      for (int h = 0; h < plan.stay; ++h) {
        if (unit(rng) < 0.08) bolus += 250.0 + 750.0 * unit(rng);
        if (unit(rng) < 0.02) rbc += 1.0 + std::floor(2.0 * unit(rng));
        if (unit(rng) < 0.01) surg_hours += 1.0 + 3.0 * unit(rng);
        p.values(h, col + 0) = bolus;
        p.values(h, col + 1) = rbc;
        p.values(h, col + 2) = h / 24;
        p.values(h, col + 3) = surg_hours;
      }
      col += 4;
    }
    // G4 labs: slow random walk; sparse observation handled by the mask.
    for (const auto& l : kLabs) {
      double latent = l.mean + l.baseline_sd * gauss(rng);
      for (int h = 0; h < plan.stay; ++h) {
        p.values(h, col) = latent + signal_for(cfg, drifts, l.name, h, plan.onset);
        latent += l.step_sd * gauss(rng);
      }
      ++col;
    }

    // Missingness per group; hidden cells are blanked to keep the CSV honest.
    for (int j = 0; j < f; ++j) {
      const double rate = cfg.missing_rate.count(cohort.schema.columns[j].group)
                              ? cfg.missing_rate.at(cohort.schema.columns[j].group)
                              : 0.0;
      if (rate <= 0.0) continue;
      for (int h = 0; h < plan.stay; ++h) {
        if (unit(rng) < rate) {
          p.observed(h, j) = false;
          p.values(h, j) = std::numeric_limits<double>::quiet_NaN();
        }
      }
    }
    cohort.patients.push_back(std::move(p));
  }
  return cohort;
}

}  // namespace sepcast
