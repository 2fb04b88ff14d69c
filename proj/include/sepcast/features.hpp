#pragma once

#include <string>
#include <vector>

#include "sepcast/cohort.hpp"

namespace sepcast {

struct WindowSpec {
  int w = 6;  // trailing observation window; stats see up to w+1 samples
  bool enable_delta = true;
  bool enable_stats = true;

  void validate() const {
    if (w < 1) throw ConfigError("window size must be >= 1");
  }
};

struct NamedColumns {
  std::vector<std::string> names;
  MatrixXd values;  // rows align with the producing series
};

struct RowKey {
  std::string patient_id;
  int hour = 0;

  bool operator==(const RowKey& o) const {
    return hour == o.hour && patient_id == o.patient_id;
  }
};

/// Flattened per-(patient,hour) design matrix. `target` is empty for
/// unlabeled (inference) frames.
struct FeatureFrame {
  std::vector<std::string> columns;
  MatrixXd values;  // n x F
  std::vector<RowKey> rows;
  VectorXi target;

  long n() const { return static_cast<long>(rows.size()); }
  int col(const std::string& name) const;
  bool has_target() const { return target.size() == values.rows(); }
};

/// Extra columns keyed by row, appended to the design matrix after an exact
/// row-alignment check.
struct ExtraColumns {
  std::vector<std::string> names;
  MatrixXd values;
  std::vector<RowKey> rows;
};

/// First differences for every trendable column: `<name>_delta`,
/// x[t] - x[t-1], with 0 at the first row. Requires imputed input.
NamedColumns delta_features(const PatientSeries& series,
                            const FeatureSchema& schema,
                            const WindowSpec& spec);

/// Six trailing-window statistics per trendable column:
/// `<name>_mean|min|max|std|skew|kurt` over the last w+1 samples (expanding
/// prefix near the series start). Population forms; skew and kurt are 0
/// when the window standard deviation falls below 1e-12.
NamedColumns window_stats(const PatientSeries& series,
                          const FeatureSchema& schema, const WindowSpec& spec);

/// Raw columns plus enabled delta/stats blocks for all t rows of a series.
NamedColumns patient_feature_block(const PatientSeries& series,
                                   const FeatureSchema& schema,
                                   const WindowSpec& spec);

/// One row per (patient, hour) that carries a shifted target; columns are
/// raw + engineered + extras (extras last, exact row alignment enforced).
/// Patients must have shifted labels already.
FeatureFrame assemble_design_matrix(const Cohort& cohort, const WindowSpec& spec,
                                    const ExtraColumns& extras = {});

/// Same column layout but over every row of the cohort, without targets.
FeatureFrame assemble_feature_rows(const Cohort& cohort, const WindowSpec& spec);

/// Row gather; keeps column layout and copies targets when present.
FeatureFrame frame_rows(const FeatureFrame& frame, const std::vector<long>& idx);

/// Appends extra columns after an exact (patient, hour) alignment check.
FeatureFrame append_extra_columns(FeatureFrame frame, const ExtraColumns& extras);

/// Debug export (`--dump-features`): patient_id,hour,target,<columns...>.
void write_feature_csv(const FeatureFrame& frame, const std::string& path);

}  // namespace sepcast
