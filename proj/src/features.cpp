#include "sepcast/features.hpp"

#include <cmath>
#include <fstream>

namespace sepcast {

int FeatureFrame::col(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

NamedColumns delta_features(const PatientSeries& series,
                            const FeatureSchema& schema,
                            const WindowSpec& spec) {
  spec.validate();
  const auto trend = schema.trendable_indices();
  NamedColumns out;
  out.values.resize(series.rows(), static_cast<int>(trend.size()));
  for (size_t j = 0; j < trend.size(); ++j) {
    out.names.push_back(schema.columns[trend[j]].name + "_delta");
    const auto col = series.values.col(trend[j]);
    out.values(0, j) = 0.0;  // no prior hour
    for (int t = 1; t < series.rows(); ++t)
      out.values(t, j) = col[t] - col[t - 1];
  }
  return out;
}

namespace {

const char* kStatSuffix[6] = {"_mean", "_min", "_max", "_std", "_skew", "_kurt"};
constexpr double kSigmaFloor = 1e-12;

}  // namespace

NamedColumns window_stats(const PatientSeries& series,
                          const FeatureSchema& schema, const WindowSpec& spec) {
  spec.validate();
  const auto trend = schema.trendable_indices();
  NamedColumns out;
  const int t_rows = series.rows();
  out.values.resize(t_rows, static_cast<int>(6 * trend.size()));
  for (size_t j = 0; j < trend.size(); ++j)
    for (int s = 0; s < 6; ++s)
      out.names.push_back(schema.columns[trend[j]].name + kStatSuffix[s]);

  for (size_t j = 0; j < trend.size(); ++j) {
    const auto col = series.values.col(trend[j]);
    for (int t = 0; t < t_rows; ++t) {
      const int s0 = std::max(0, t - spec.w);
      const int n = t - s0 + 1;
      const auto win = col.segment(s0, n);
      const double mean = win.mean();
      const double mn = win.minCoeff();
      const double mx = win.maxCoeff();
      const double var = (win.array() - mean).square().sum() / n;
      const double sd = std::sqrt(var);
      double skew = 0.0, kurt = 0.0;
      if (sd >= kSigmaFloor) {
        const auto z = ((win.array() - mean) / sd).eval();
        skew = (z * z * z).sum() / n;
        kurt = (z * z * z * z).sum() / n;
      }
      const int base = static_cast<int>(6 * j);
      out.values(t, base + 0) = mean;
      out.values(t, base + 1) = mn;
      out.values(t, base + 2) = mx;
      out.values(t, base + 3) = sd;
      out.values(t, base + 4) = skew;
      out.values(t, base + 5) = kurt;
    }
  }
  return out;
}

NamedColumns patient_feature_block(const PatientSeries& series,
                                   const FeatureSchema& schema,
                                   const WindowSpec& spec) {
  NamedColumns block;
  block.names.reserve(schema.size());
  for (const auto& c : schema.columns) block.names.push_back(c.name);

  NamedColumns delta, stats;
  int extra_cols = 0;
  if (spec.enable_delta) {
    delta = delta_features(series, schema, spec);
    extra_cols += static_cast<int>(delta.names.size());
  }
  if (spec.enable_stats) {
    stats = window_stats(series, schema, spec);
    extra_cols += static_cast<int>(stats.names.size());
  }

  block.values.resize(series.rows(), schema.size() + extra_cols);
  block.values.leftCols(schema.size()) = series.values;
  int at = schema.size();
  if (spec.enable_delta) {
    block.values.middleCols(at, delta.values.cols()) = delta.values;
    block.names.insert(block.names.end(), delta.names.begin(), delta.names.end());
    at += static_cast<int>(delta.values.cols());
  }
  if (spec.enable_stats) {
    block.values.middleCols(at, stats.values.cols()) = stats.values;
    block.names.insert(block.names.end(), stats.names.begin(), stats.names.end());
  }
  return block;
}

namespace {

FeatureFrame assemble(const Cohort& cohort, const WindowSpec& spec,
                      const ExtraColumns& extras, bool labeled) {
  spec.validate();
  FeatureFrame frame;

  long n_rows = 0;
  for (const auto& p : cohort.patients) {
    if (labeled && !p.labels.is_shifted())
      throw DataError("assemble_design_matrix: patient '" + p.patient_id +
                      "' has no shifted labels");
    n_rows += labeled ? p.labels.shifted.size() : p.rows();
  }

  bool names_set = false;
  long at = 0;
  std::vector<int> targets;
  if (labeled) targets.reserve(n_rows);
  for (const auto& p : cohort.patients) {
    NamedColumns block = patient_feature_block(p, cohort.schema, spec);
    if (!block.values.allFinite())
      throw DataError("assemble_design_matrix: non-finite feature for patient '" +
                      p.patient_id + "' (cohort not imputed?)");
    if (!names_set) {
      frame.columns = block.names;
      frame.values.resize(n_rows, block.values.cols());
      names_set = true;
    }
    const long keep = labeled ? p.labels.shifted.size() : p.rows();
    frame.values.middleRows(at, keep) = block.values.topRows(keep);
    for (long r = 0; r < keep; ++r)
      frame.rows.push_back({p.patient_id, p.hour_at(static_cast<int>(r))});
    if (labeled)
      for (long r = 0; r < keep; ++r) targets.push_back(p.labels.shifted[r]);
    at += keep;
  }
  if (!names_set) frame.values.resize(0, 0);
  if (labeled) {
    frame.target.resize(n_rows);
    for (long i = 0; i < n_rows; ++i) frame.target[i] = targets[i];
  }

  if (!extras.names.empty()) frame = append_extra_columns(std::move(frame), extras);
  return frame;
}

}  // namespace

FeatureFrame append_extra_columns(FeatureFrame frame, const ExtraColumns& extras) {
  if (extras.rows.size() != frame.rows.size())
    throw DataError("extra columns have " + std::to_string(extras.rows.size()) +
                    " rows, design matrix has " + std::to_string(frame.rows.size()));
  for (size_t i = 0; i < frame.rows.size(); ++i)
    if (!(extras.rows[i] == frame.rows[i]))
      throw DataError("extra columns misaligned at row " + std::to_string(i) +
                      " (" + extras.rows[i].patient_id + "@" +
                      std::to_string(extras.rows[i].hour) + " vs " +
                      frame.rows[i].patient_id + "@" +
                      std::to_string(frame.rows[i].hour) + ")");
  MatrixXd joined(frame.values.rows(), frame.values.cols() + extras.values.cols());
  joined << frame.values, extras.values;
  frame.values = std::move(joined);
  frame.columns.insert(frame.columns.end(), extras.names.begin(),
                       extras.names.end());
  return frame;
}

FeatureFrame assemble_design_matrix(const Cohort& cohort, const WindowSpec& spec,
                                    const ExtraColumns& extras) {
  return assemble(cohort, spec, extras, /*labeled=*/true);
}

FeatureFrame assemble_feature_rows(const Cohort& cohort, const WindowSpec& spec) {
  return assemble(cohort, spec, ExtraColumns{}, /*labeled=*/false);
}

FeatureFrame frame_rows(const FeatureFrame& frame, const std::vector<long>& idx) {
  FeatureFrame out;
  out.columns = frame.columns;
  out.values.resize(static_cast<long>(idx.size()), frame.values.cols());
  out.rows.reserve(idx.size());
  const bool labeled = frame.has_target();
  if (labeled) out.target.resize(static_cast<long>(idx.size()));
  for (size_t k = 0; k < idx.size(); ++k) {
    out.values.row(static_cast<long>(k)) = frame.values.row(idx[k]);
    out.rows.push_back(frame.rows[idx[k]]);
    if (labeled) out.target[static_cast<long>(k)] = frame.target[idx[k]];
  }
  return out;
}

void write_feature_csv(const FeatureFrame& frame, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write feature dump: " + path);
  out << "patient_id,hour,target";
  for (const auto& c : frame.columns) out << "," << c;
  out << "\n";
  for (long i = 0; i < frame.n(); ++i) {
    out << frame.rows[i].patient_id << "," << frame.rows[i].hour << ",";
    if (frame.has_target()) out << frame.target[i];
    for (long j = 0; j < frame.values.cols(); ++j)
      out << "," << format_double(frame.values(i, j));
    out << "\n";
  }
}

}  // namespace sepcast
