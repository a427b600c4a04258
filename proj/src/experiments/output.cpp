#include "tmsnet/experiments/output.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "tmsnet/core/types.hpp"

namespace tmsnet::experiments {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_cell(const Value& v) {
  if (const double* d = std::get_if<double>(&v)) return format_number(*d);
  const std::string& s = std::get<std::string>(v);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

nlohmann::json cell_json(const Value& v) {
  if (const double* d = std::get_if<double>(&v)) {
    // JSON has no NaN.
    return std::isfinite(*d) ? nlohmann::json(*d) : nlohmann::json(nullptr);
  }
  return std::get<std::string>(v);
}

}  // namespace

void write_csv(std::ostream& os, const Dataset& d) {
  for (std::size_t i = 0; i < d.columns.size(); ++i) os << (i ? "," : "") << d.columns[i];
  os << '\n';
  for (const auto& r : d.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_cell(r[i]);
    os << '\n';
  }
}

void write_json(std::ostream& os, const Dataset& d) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : d.rows) {
    nlohmann::json o = nlohmann::json::object();
    for (std::size_t i = 0; i < r.size(); ++i) o[d.columns[i]] = cell_json(r[i]);
    out.push_back(std::move(o));
  }
  os << out.dump(1) << '\n';
}

nlohmann::json row_to_json(const Row& r) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& v : r) {
    if (const double* d = std::get_if<double>(&v)) {
      // Keep non-finite numbers distinguishable from strings on the way back.
      if (std::isfinite(*d)) a.push_back(*d);
      else a.push_back({{"n", format_number(*d)}});
    } else {
      a.push_back(std::get<std::string>(v));
    }
  }
  return a;
}

Row row_from_json(const nlohmann::json& j) {
  Row r;
  for (const auto& e : j) {
    if (e.is_number()) r.emplace_back(e.get<double>());
    else if (e.is_string()) r.emplace_back(e.get<std::string>());
    else if (e.is_object()) {
      const auto s = e.at("n").get<std::string>();
      r.emplace_back(s == "nan" ? std::nan("") : s == "inf" ? INFINITY : -INFINITY);
    } else {
      throw ValidationError("row_from_json: unexpected cell");
    }
  }
  return r;
}

}  // namespace tmsnet::experiments
