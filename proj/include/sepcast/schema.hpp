#pragma once

#include <string>
#include <vector>

#include "sepcast/common.hpp"

namespace sepcast {

enum class Group { G1, G2, G3, G4 };

std::string to_string(Group g);
Group group_from_string(const std::string& s);

struct ColumnSpec {
  std::string name;
  Group group = Group::G1;
  bool trendable = false;
};

struct FeatureSchema {
  std::vector<ColumnSpec> columns;

  int size() const { return static_cast<int>(columns.size()); }
  /// Index of a column by name, -1 if absent.
  int index_of(const std::string& name) const;
  std::vector<int> trendable_indices() const;

  /// Throws ConfigError on duplicate or empty column names.
  void validate() const;
};

FeatureSchema schema_from_json_file(const std::string& path);
void schema_to_json_file(const FeatureSchema& schema, const std::string& path);

}  // namespace sepcast
