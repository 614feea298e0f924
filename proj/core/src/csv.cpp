#include "flapfoil/csv.hpp"

#include <cstdlib>
#include <cstdio>
#include <sstream>

#include "flapfoil/errors.hpp"

namespace flapfoil {

std::string format_double(double x) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf, static_cast<std::size_t>(n));
}

CsvWriter::CsvWriter(const std::string& path,
                     std::initializer_list<std::string_view> header)
    : CsvWriter(path, std::vector<std::string>(header.begin(), header.end())) {}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header)
    : out_(path) {
  if (!out_) throw RecordError("cannot open " + path + " for writing");
  for (const auto& h : header) cell(std::string_view(h));
  end_row();
}

void CsvWriter::sep() {
  if (row_open_) out_ << ',';
  row_open_ = true;
}

CsvWriter& CsvWriter::cell(double x) {
  sep();
  out_ << format_double(x);
  return *this;
}

CsvWriter& CsvWriter::cell(long long x) {
  sep();
  out_ << x;
  return *this;
}

CsvWriter& CsvWriter::cell(std::string_view s) {
  sep();
  out_ << s;
  return *this;
}

CsvWriter& CsvWriter::empty() {
  sep();
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  row_open_ = false;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw RecordError("csv column '" + std::string(name) + "' missing");
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RecordError("cannot open " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw RecordError(path + " is empty");
  table.header = split(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != table.header.size()) {
      std::ostringstream os;
      os << path << ":" << lineno << ": expected " << table.header.size()
         << " fields, got " << row.size();
      throw RecordError(os.str());
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

double parse_double(const std::string& s) {
  // strtod handles inf/nan spellings produced by %.17g.
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw RecordError("not a number: '" + s + "'");
  return v;
}

std::size_t parse_index(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw RecordError("not a non-negative integer: '" + s + "'");
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  return static_cast<std::size_t>(v);
}

}  // namespace flapfoil
