#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace tmsnet::experiments {

using Value = std::variant<double, std::string>;
using Row = std::vector<Value>;

/// A table with a fixed header; every row has one cell per column.
struct Dataset {
  std::vector<std::string> columns;
  std::vector<Row> rows;
};

/// Shortest round-trip decimal form; NaN prints as "nan".
std::string format_number(double v);

void write_csv(std::ostream& os, const Dataset& d);
/// Array of objects keyed by column name.
void write_json(std::ostream& os, const Dataset& d);

nlohmann::json row_to_json(const Row& r);
Row row_from_json(const nlohmann::json& j);

}  // namespace tmsnet::experiments
