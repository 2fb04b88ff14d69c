#include "sepcast/labeling.hpp"

namespace sepcast {

LabelTrack shift_labels(const LabelTrack& track, int h) {
  if (h < 0) throw ConfigError("shift_labels: negative horizon");
  const int t = static_cast<int>(track.onset.size());
  if (h >= t)
    throw DataError("shift_labels: horizon " + std::to_string(h) +
                    " leaves no rows (series length " + std::to_string(t) + ")");
  LabelTrack out;
  out.onset = track.onset;
  out.horizon = h;
  out.shifted = track.onset.segment(h, t - h);
  return out;
}

namespace {

PatientSeries keep_rows(const PatientSeries& series, int first, int count) {
  PatientSeries out;
  out.patient_id = series.patient_id;
  out.start_hour = series.start_hour + first;
  out.values = series.values.middleRows(first, count);
  out.observed = series.observed.middleRows(first, count);
  out.labels.onset = series.labels.onset.segment(first, count);
  return out;
}

}  // namespace

PatientSeries truncate_after_onset(const PatientSeries& series) {
  const int t = series.rows();
  for (int row = 0; row < t; ++row) {
    if (series.labels.onset[row] == 1) {
      if (row == t - 1) return series;
      return keep_rows(series, 0, row + 1);
    }
  }
  return series;
}

std::optional<PatientSeries> clip_to_day_range(const PatientSeries& series,
                                               int start_day, int end_day) {
  if (start_day < 1 || end_day < start_day)
    throw ConfigError("clip_to_day_range: need 1 <= start_day <= end_day");
  const int lo = 24 * (start_day - 1);
  const int hi = 24 * end_day - 1;
  const int t = series.rows();
  int first = -1, last = -1;
  for (int row = 0; row < t; ++row) {
    const int hour = series.hour_at(row);
    if (hour >= lo && hour <= hi) {
      if (first < 0) first = row;
      last = row;
    }
  }
  if (first < 0) return std::nullopt;
  return keep_rows(series, first, last - first + 1);
}

Cohort filter_cohort(const Cohort& cohort, int start_day, int end_day,
                     FilterStats* stats) {
  FilterStats local;
  Cohort out;
  out.schema = cohort.schema;
  const int window_start_hour = 24 * (start_day - 1);
  for (const auto& p : cohort.patients) {
    ++local.patients_in;
    local.rows_in += p.rows();
    PatientSeries truncated = truncate_after_onset(p);
    for (int row = 0; row < truncated.rows(); ++row) {
      if (truncated.labels.onset[row] == 1 &&
          truncated.hour_at(row) < window_start_hour) {
        ++local.patients_onset_pre_window;
        break;
      }
    }
    auto clipped = clip_to_day_range(truncated, start_day, end_day);
    if (!clipped) {
      ++local.patients_excluded;
      continue;
    }
    local.rows_out += clipped->rows();
    out.patients.push_back(std::move(*clipped));
  }
  if (stats) *stats = local;
  return out;
}

}  // namespace sepcast
