#ifndef FLAPFOIL_CSV_HPP_
#define FLAPFOIL_CSV_HPP_

#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace flapfoil {

// Shortest text that parses back to the same double (17 significant digits).
std::string format_double(double x);

// Minimal CSV writer; every float goes through format_double so files can be
// compared byte for byte between runs.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::initializer_list<std::string_view> header);
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  CsvWriter& cell(double x);
  CsvWriter& cell(long long x);
  CsvWriter& cell(int x) { return cell(static_cast<long long>(x)); }
  CsvWriter& cell(std::size_t x) { return cell(static_cast<long long>(x)); }
  CsvWriter& cell(std::string_view s);
  CsvWriter& empty();
  void end_row();

 private:
  void sep();

  std::ofstream out_;
  bool row_open_ = false;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; throws RecordError when missing.
  std::size_t column(std::string_view name) const;
};

// Reads a plain comma separated file (no quoting). Throws RecordError.
CsvTable read_csv(const std::string& path);

double parse_double(const std::string& s);
std::size_t parse_index(const std::string& s);

}  // namespace flapfoil

#endif  // FLAPFOIL_CSV_HPP_
