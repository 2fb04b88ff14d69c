#pragma once

#include <optional>

#include "sepcast/cohort.hpp"

namespace sepcast {

/// Shifts onset indicators earlier by h hours: shifted[t] = onset[t+h].
/// The trailing h rows have no target and are dropped by the caller.
/// Throws DataError when h >= onset length (empty result).
LabelTrack shift_labels(const LabelTrack& track, int h);

/// Keeps rows up to and including the first onset hour; everything after is
/// removed. No-op when the patient never has an onset.
PatientSeries truncate_after_onset(const PatientSeries& series);

/// Keeps rows with hour in [24*(start_day-1), 24*end_day - 1] (day 1 covers
/// hours 0..23). Returns nullopt when no rows remain, so the caller can
/// exclude the patient without treating it as fatal.
std::optional<PatientSeries> clip_to_day_range(const PatientSeries& series,
                                               int start_day, int end_day);

struct FilterStats {
  long patients_in = 0;
  long patients_excluded = 0;       // emptied by clipping
  long patients_onset_pre_window = 0;  // onset before start_day: negatives only
  long rows_in = 0;
  long rows_out = 0;
};

/// Canonical cohort filter: truncate_after_onset then clip_to_day_range for
/// every patient; emptied patients are dropped and counted in `stats`.
Cohort filter_cohort(const Cohort& cohort, int start_day, int end_day,
                     FilterStats* stats = nullptr);

}  // namespace sepcast
