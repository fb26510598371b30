// Output plumbing: deterministic number formatting, CSV tables and atomic
// file writes.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace loclab {

// Shortest round-trip decimal; "nan", "inf", "-inf" for non-finite values.
std::string format_number(double v);
// JSON value for a double; non-finite values become the strings above.
nlohmann::json json_number(double v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(const std::vector<double>& values);
  void add_row(const std::vector<std::string>& cells);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
// Pretty-printed with two-space indentation and a trailing newline.
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace loclab
