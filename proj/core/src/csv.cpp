#include "photocorr/csv.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "photocorr/error.hpp"

namespace photocorr {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     std::initializer_list<std::string_view> columns)
    : out_(path, std::ios::trunc) {
  require(static_cast<bool>(out_), ErrorKind::io, "cannot open " + path.string());
  std::string header;
  bool first = true;
  for (auto c : columns) append_text(header, c, first);
  out_ << header << '\n';
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
    : out_(path, std::ios::trunc) {
  require(static_cast<bool>(out_), ErrorKind::io, "cannot open " + path.string());
  std::string header;
  bool first = true;
  for (const auto& c : columns) append_text(header, c, first);
  out_ << header << '\n';
}

void CsvWriter::row(const std::vector<double>& fields) {
  std::string line;
  bool first = true;
  for (double v : fields) append(line, v, first);
  line.push_back('\n');
  out_ << line;
}

void CsvWriter::append_text(std::string& line, std::string_view v, bool& first) {
  if (!first) line.push_back(',');
  first = false;
  line.append(v);
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  fail(ErrorKind::format, "CSV has no column '" + std::string(name) + "'");
}

std::vector<double> CsvTable::column_values(std::string_view name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

namespace {

double parse_field(std::string_view field, std::size_t line_no) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
  if (field == "nan" || field == "NaN" || field.empty()) return std::nan("");
  if (field == "inf") return HUGE_VAL;
  if (field == "-inf") return -HUGE_VAL;
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  require(res.ec == std::errc() && res.ptr == field.data() + field.size(), ErrorKind::format,
          "non-numeric CSV field '" + std::string(field) + "' on line " + std::to_string(line_no));
  return v;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
  CsvTable table;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::format,
          path.string() + " is empty");
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) {
      while (!col.empty() && (col.back() == '\r' || col.back() == ' ')) col.pop_back();
      table.columns.push_back(col);
    }
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::string_view rest(line);
    while (true) {
      auto comma = rest.find(',');
      row.push_back(parse_field(rest.substr(0, comma), line_no));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    require(row.size() == table.columns.size(), ErrorKind::format,
            "wrong field count on line " + std::to_string(line_no) + " of " + path.string());
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace photocorr
