#pragma once

#include <set>
#include <string>
#include <vector>

#include "sepcast/common.hpp"
#include "sepcast/schema.hpp"

namespace sepcast {

/// Ground-truth onset indicators per hour, plus the horizon-shifted targets
/// once shift_labels has been applied.
struct LabelTrack {
  VectorXi onset;    // 0/1 per hour
  int horizon = -1;  // < 0 until shifted
  VectorXi shifted;  // length onset.size() - horizon once shifted, else empty

  bool is_shifted() const { return horizon >= 0; }
};

/// One patient's hourly observation matrix. Rows are consecutive hours
/// starting at start_hour; unobserved cells hold NaN until imputation and
/// are marked false in `observed`.
struct PatientSeries {
  std::string patient_id;
  int start_hour = 0;
  MatrixXd values;     // t x f
  MaskArray observed;  // t x f
  LabelTrack labels;

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
  int hour_at(int row) const { return start_hour + row; }
};

struct Cohort {
  FeatureSchema schema;
  std::vector<PatientSeries> patients;

  long total_rows() const;
  const PatientSeries* find(const std::string& patient_id) const;
};

/// Reads the cohort CSV format: header `patient_id,hour,label,<schema cols>`.
/// Rows are grouped per patient and sorted by hour; interior hour gaps are
/// materialized as fully-missing rows. Empty feature cells are missing.
/// Empty label cells take the previous hour's label (0 at series start).
/// Throws DataError naming the offending line on malformed rows or duplicate
/// (patient, hour) pairs.
Cohort ingest_csv(const std::string& path, const FeatureSchema& schema);

/// Writes the same CSV format; missing cells become empty fields. Observed
/// values round-trip bit-exactly through ingest_csv.
void write_csv(const Cohort& cohort, const std::string& path);

/// Per-column median over observed values only (cohort-wide). Throws
/// DataError naming the column if it is observed nowhere.
std::vector<double> column_medians(const Cohort& cohort);

/// Carry-forward imputation: each missing cell takes the most recent
/// observed value of its column within the patient; cells missing before any
/// observation take the cohort-level column median. The observed mask is
/// left untouched.
Cohort carry_forward_impute(const Cohort& cohort);

/// Keeps only columns whose group is in `groups`, order preserved.
Cohort select_groups(const Cohort& cohort, const std::set<Group>& groups);

}  // namespace sepcast
