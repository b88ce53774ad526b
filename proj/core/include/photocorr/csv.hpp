#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace photocorr {

/// Shortest round-trip decimal form; "nan" for missing values.
std::string format_number(double v);

/// Header line plus comma-separated rows. Output is byte-stable for equal input.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> columns);
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns);

  template <typename... Ts>
  void row(const Ts&... fields) {
    std::string line;
    bool first = true;
    ((append(line, fields, first)), ...);
    line.push_back('\n');
    out_ << line;
  }

  void row(const std::vector<double>& fields);

 private:
  template <typename T>
  static void append(std::string& line, const T& v, bool& first) {
    if constexpr (std::is_floating_point_v<T>) {
      append_text(line, format_number(static_cast<double>(v)), first);
    } else if constexpr (std::is_integral_v<T>) {
      append_text(line, std::to_string(v), first);
    } else {
      append_text(line, std::string_view(v), first);
    }
  }
  static void append_text(std::string& line, std::string_view v, bool& first);

  std::ofstream out_;
};

/// Numeric table read from a CSV file with a one-line header.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  /// Index of a named column; throws Error(format) if absent.
  std::size_t column(std::string_view name) const;
  std::vector<double> column_values(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace photocorr
