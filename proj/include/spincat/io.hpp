// Serialization: state JSON, CSV tables with reproducible float formatting,
// and run manifests.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "spincat/spin_core.hpp"

namespace spincat {

/// Shortest decimal form that parses back to the same double.
std::string fmt_double(double v);

/// {"J": "<2J>/2", "amps": [[re, im], ...]}
nlohmann::json state_to_json(const SpinState& s);
SpinState state_from_json(const nlohmann::json& j);

/// CSV with optional "# key=value" comment lines, written with fmt_double so
/// identical runs produce identical bytes.
class CsvWriter {
 public:
  CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void comment(const std::string& key, const std::string& value);
  void row(const std::vector<double>& values);
  void row_mixed(const std::vector<std::string>& values);

  std::string str() const;
  void write(const std::filesystem::path& path) const;

  /// The same table as a JSON array of objects (one per row).
  nlohmann::json json() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::pair<std::string, std::string>> comments_;
  std::vector<std::vector<std::string>> rows_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace spincat
