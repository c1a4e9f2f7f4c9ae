// io.hpp — plain-text bath/config parsing and CSV output helpers.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nhscatter/bath.hpp"
#include "nhscatter/types.hpp"

namespace nhscatter {

// Bath specification file: `p = <int>`, `q = <int>` and one
// `hop.<n> = <re>,<im>` entry per hopping (imaginary part optional).
BathSpec parse_bath_file(const std::filesystem::path& file);

// `section.key = value` pairs; '#' starts a comment, blank lines ignored.
std::map<std::string, std::string> parse_config_file(const std::filesystem::path& file);

// Shared parsing pieces (also used for config values).
std::string trim(const std::string& s);
Complex parse_complex_pair(const std::string& s);

// CSV writer: UTF-8, header row, '.' decimal separator, 17 significant
// digits. Cells are preformatted; format_csv formats doubles.
std::string format_csv(double v);

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& file);
  void comment(const std::string& line);           // "# ..." metadata line
  void header(const std::vector<std::string>& cols);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::string buffer_;
  std::filesystem::path path_;
  bool closed_ = false;
};

}  // namespace nhscatter
