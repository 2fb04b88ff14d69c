#include "sepcast/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <unordered_map>

namespace sepcast {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

struct RawRow {
  long hour = 0;
  int label = 0;          // resolved later when the cell was empty
  bool label_empty = false;
  std::vector<double> vals;
  std::vector<bool> obs;
  long line_no = 0;
};

}  // namespace

long Cohort::total_rows() const {
  long n = 0;
  for (const auto& p : patients) n += p.rows();
  return n;
}

const PatientSeries* Cohort::find(const std::string& patient_id) const {
  for (const auto& p : patients)
    if (p.patient_id == patient_id) return &p;
  return nullptr;
}

Cohort ingest_csv(const std::string& path, const FeatureSchema& schema) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw DataError("cannot open cohort file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty cohort file: " + path);
  auto header = split_csv_line(line);
  const int f = schema.size();
  if (static_cast<int>(header.size()) != f + 3 || header[0] != "patient_id" ||
      header[1] != "hour" || header[2] != "label")
    throw DataError(path + ": header must be patient_id,hour,label,<schema columns>");
  for (int i = 0; i < f; ++i)
    if (header[i + 3] != schema.columns[i].name)
      throw DataError(path + ": header column '" + header[i + 3] +
                      "' does not match schema column '" +
                      schema.columns[i].name + "'");

  // Keyed by patient in order of first appearance.
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<RawRow>> rows;

  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != f + 3)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected " + std::to_string(f + 3) + " fields, got " +
                      std::to_string(fields.size()));
    const std::string& pid = fields[0];
    if (pid.empty())
      throw DataError(path + ":" + std::to_string(line_no) + ": empty patient_id");

    RawRow r;
    r.line_no = line_no;
    if (!parse_int(fields[1], r.hour) || r.hour < 0)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": bad hour '" + fields[1] + "'");
    if (fields[2].empty()) {
      r.label_empty = true;
    } else if (fields[2] == "0") {
      r.label = 0;
    } else if (fields[2] == "1") {
      r.label = 1;
    } else {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": label must be 0, 1 or empty, got '" + fields[2] + "'");
    }
    r.vals.resize(f);
    r.obs.resize(f);
    for (int i = 0; i < f; ++i) {
      const std::string& cell = fields[i + 3];
      if (cell.empty()) {
        r.vals[i] = kNaN;
        r.obs[i] = false;
      } else {
        double v;
        if (!parse_double(cell, v) || !std::isfinite(v))
          throw DataError(path + ":" + std::to_string(line_no) +
                          ": non-numeric value '" + cell + "' in column '" +
                          schema.columns[i].name + "'");
        r.vals[i] = v;
        r.obs[i] = true;
      }
    }
    auto it = rows.find(pid);
    if (it == rows.end()) {
      order.push_back(pid);
      it = rows.emplace(pid, std::vector<RawRow>{}).first;
    }
    it->second.push_back(std::move(r));
  }

  Cohort cohort;
  cohort.schema = schema;
  for (const auto& pid : order) {
    auto& rr = rows[pid];
    std::stable_sort(rr.begin(), rr.end(),
                     [](const RawRow& a, const RawRow& b) { return a.hour < b.hour; });
    for (size_t i = 1; i < rr.size(); ++i)
      if (rr[i].hour == rr[i - 1].hour)
        throw DataError(path + ":" + std::to_string(rr[i].line_no) +
                        ": duplicate (patient, hour) = (" + pid + ", " +
                        std::to_string(rr[i].hour) + ")");

    const long h0 = rr.front().hour;
    const long h1 = rr.back().hour;
    const int t = static_cast<int>(h1 - h0 + 1);

    PatientSeries p;
    p.patient_id = pid;
    p.start_hour = static_cast<int>(h0);
    p.values = MatrixXd::Constant(t, f, kNaN);
    p.observed = MaskArray::Constant(t, f, false);
    p.labels.onset = VectorXi::Zero(t);

    size_t k = 0;
    int prev_label = 0;
    for (int row = 0; row < t; ++row) {
      const long hour = h0 + row;
      if (k < rr.size() && rr[k].hour == hour) {
        for (int i = 0; i < f; ++i) {
          p.values(row, i) = rr[k].vals[i];
          p.observed(row, i) = rr[k].obs[i];
        }
        p.labels.onset[row] = rr[k].label_empty ? prev_label : rr[k].label;
        ++k;
      } else {
        // Gap hour: fully missing row; onset carried from the previous hour.
        p.labels.onset[row] = prev_label;
      }
      prev_label = p.labels.onset[row];
    }
    cohort.patients.push_back(std::move(p));
  }
  return cohort;
}

void write_csv(const Cohort& cohort, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write cohort file: " + path);
  out << "patient_id,hour,label";
  for (const auto& c : cohort.schema.columns) out << "," << c.name;
  out << "\n";
  for (const auto& p : cohort.patients) {
    for (int row = 0; row < p.rows(); ++row) {
      out << p.patient_id << "," << p.hour_at(row) << "," << p.labels.onset[row];
      for (int i = 0; i < p.cols(); ++i) {
        out << ",";
        if (p.observed(row, i)) out << format_double(p.values(row, i));
      }
      out << "\n";
    }
  }
}

std::vector<double> column_medians(const Cohort& cohort) {
  const int f = cohort.schema.size();
  std::vector<double> medians(f);
  std::vector<double> buf;
  for (int i = 0; i < f; ++i) {
    buf.clear();
    for (const auto& p : cohort.patients)
      for (int row = 0; row < p.rows(); ++row)
        if (p.observed(row, i)) buf.push_back(p.values(row, i));
    if (buf.empty())
      throw DataError("column '" + cohort.schema.columns[i].name +
                      "' has no observed values in the cohort");
    const size_t n = buf.size();
    auto mid = buf.begin() + n / 2;
    std::nth_element(buf.begin(), mid, buf.end());
    if (n % 2 == 1) {
      medians[i] = *mid;
    } else {
      double hi = *mid;
      double lo = *std::max_element(buf.begin(), mid);
      medians[i] = 0.5 * (lo + hi);
    }
  }
  return medians;
}

Cohort carry_forward_impute(const Cohort& cohort) {
  const auto medians = column_medians(cohort);
  Cohort out = cohort;
  for (auto& p : out.patients) {
    for (int i = 0; i < p.cols(); ++i) {
      double last = medians[i];
      bool seen = false;
      for (int row = 0; row < p.rows(); ++row) {
        if (p.observed(row, i)) {
          last = p.values(row, i);
          seen = true;
        } else {
          // Leading gap takes the cohort median until a value is seen.
          p.values(row, i) = seen ? last : medians[i];
        }
      }
    }
  }
  return out;
}

Cohort select_groups(const Cohort& cohort, const std::set<Group>& groups) {
  if (groups.empty()) throw ConfigError("select_groups: empty group set");
  std::vector<int> keep;
  for (int i = 0; i < cohort.schema.size(); ++i)
    if (groups.count(cohort.schema.columns[i].group)) keep.push_back(i);
  if (keep.empty()) {
    std::string gs;
    for (auto g : groups) gs += (gs.empty() ? "" : ",") + to_string(g);
    throw ConfigError("select_groups: no schema columns in groups {" + gs + "}");
  }

  Cohort out;
  for (int i : keep) out.schema.columns.push_back(cohort.schema.columns[i]);
  out.patients.reserve(cohort.patients.size());
  for (const auto& p : cohort.patients) {
    PatientSeries q;
    q.patient_id = p.patient_id;
    q.start_hour = p.start_hour;
    q.labels = p.labels;
    q.values.resize(p.rows(), static_cast<int>(keep.size()));
    q.observed.resize(p.rows(), static_cast<int>(keep.size()));
    for (size_t j = 0; j < keep.size(); ++j) {
      q.values.col(j) = p.values.col(keep[j]);
      q.observed.col(j) = p.observed.col(keep[j]);
    }
    out.patients.push_back(std::move(q));
  }
  return out;
}

}  // namespace sepcast
