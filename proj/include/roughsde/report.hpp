#ifndef ROUGHSDE_REPORT_HPP
#define ROUGHSDE_REPORT_HPP

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace roughsde {

/// Structured outcome of a check.
struct Report {
  std::string name;
  bool passed = false;
  nlohmann::json details = nlohmann::json::object();
};

nlohmann::json to_json(const Report& r);

/// 17 significant digits, '.' decimal point, locale independent.
std::string format_double(double v);

/// Comma separated table with a header row.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  void add_row(const std::vector<double>& row);
  /// Rows mixing text and numbers.
  void add_row(const std::vector<std::string>& row);

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return rows_.size(); }

  void write(std::ostream& os) const;
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// Pretty-printed JSON with a trailing newline.
void save_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace roughsde

#endif  // ROUGHSDE_REPORT_HPP
