#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tkre/harness.hpp"

namespace tkre {

namespace detail {

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

inline std::size_t parse_count(const std::string& text, const std::string& key) {
  const auto v = parse_double(text);
  if (!v || *v < 1 || *v != static_cast<double>(static_cast<std::size_t>(*v)))
    throw DataError("grid config: '" + key + "' entry '" + text + "' is not a positive integer");
  return static_cast<std::size_t>(*v);
}

}  // namespace detail

/// Parses the simulation-grid config format: one `key = value[, value...]`
/// per line, `#` comments. Keys: relationships, xi, phi, n_rows, n_noise.
/// Omitted keys keep their defaults (the full first-round grid).
inline GridConfig parse_grid_config_text(const std::string& text) {
  GridConfig grid;
  std::stringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw DataError("grid config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(stripped.substr(0, eq));
    const auto values = detail::split_list(stripped.substr(eq + 1));
    if (values.empty())
      throw DataError("grid config: key '" + key + "' has no values");

    if (key == "relationships") {
      grid.relationships.clear();
      for (const auto& v : values) grid.relationships.push_back(parse_relationship(v));
    } else if (key == "xi") {
      grid.xis.clear();
      for (const auto& v : values) {
        const auto num = parse_double(v);
        if (!num) throw DataError("grid config: xi entry '" + v + "' is not a number");
        grid.xis.push_back(*num);
      }
    } else if (key == "phi") {
      grid.phis.clear();
      for (const auto& v : values) {
        const auto num = parse_double(v);
        if (!num) throw DataError("grid config: phi entry '" + v + "' is not a number");
        grid.phis.push_back(*num);
      }
    } else if (key == "n_rows") {
      grid.n_rows_list.clear();
      for (const auto& v : values) grid.n_rows_list.push_back(detail::parse_count(v, key));
    } else if (key == "n_noise") {
      grid.n_noise_list.clear();
      for (const auto& v : values) grid.n_noise_list.push_back(detail::parse_count(v, key));
    } else {
      throw DataError("grid config: unknown key '" + key + "'");
    }
  }
  grid.validate();
  return grid;
}

inline GridConfig parse_grid_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open grid config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_grid_config_text(buf.str());
}

}  // namespace tkre
