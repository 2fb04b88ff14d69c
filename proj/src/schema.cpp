#include "sepcast/schema.hpp"

#include <fstream>
#include <unordered_set>

#include <json.hpp>

namespace sepcast {

std::string to_string(Group g) {
  switch (g) {
    case Group::G1: return "G1";
    case Group::G2: return "G2";
    case Group::G3: return "G3";
    case Group::G4: return "G4";
  }
  return "G1";
}

Group group_from_string(const std::string& s) {
  if (s == "G1" || s == "g1") return Group::G1;
  if (s == "G2" || s == "g2") return Group::G2;
  if (s == "G3" || s == "g3") return Group::G3;
  if (s == "G4" || s == "g4") return Group::G4;
  throw ConfigError("unknown feature group '" + s + "' (expected G1..G4)");
}

int FeatureSchema::index_of(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (columns[i].name == name) return i;
  return -1;
}

std::vector<int> FeatureSchema::trendable_indices() const {
  std::vector<int> idx;
  for (int i = 0; i < size(); ++i)
    if (columns[i].trendable) idx.push_back(i);
  return idx;
}

void FeatureSchema::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& c : columns) {
    if (c.name.empty()) throw ConfigError("schema contains an empty column name");
    if (!seen.insert(c.name).second)
      throw ConfigError("duplicate column name in schema: '" + c.name + "'");
  }
}

FeatureSchema schema_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed schema JSON in " + path + ": " + e.what());
  }
  if (!j.is_array()) throw ConfigError("schema JSON must be a list of columns");
  FeatureSchema schema;
  for (const auto& item : j) {
    ColumnSpec c;
    c.name = item.at("name").get<std::string>();
    c.group = group_from_string(item.at("group").get<std::string>());
    c.trendable = item.at("trendable").get<bool>();
    schema.columns.push_back(std::move(c));
  }
  schema.validate();
  return schema;
}

void schema_to_json_file(const FeatureSchema& schema, const std::string& path) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& c : schema.columns) {
    nlohmann::ordered_json item;
    item["name"] = c.name;
    item["group"] = to_string(c.group);
    item["trendable"] = c.trendable;
    j.push_back(std::move(item));
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write schema file: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace sepcast
