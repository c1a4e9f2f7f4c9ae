#include "nhscatter/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace nhscatter {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

Complex parse_complex_pair(const std::string& s) {
  const auto comma = s.find(',');
  try {
    size_t used = 0;
    const std::string re_str = trim(comma == std::string::npos ? s : s.substr(0, comma));
    const double re = std::stod(re_str, &used);
    if (used != re_str.size()) throw std::invalid_argument(re_str);
    double im = 0.0;
    if (comma != std::string::npos) {
      const std::string im_str = trim(s.substr(comma + 1));
      im = std::stod(im_str, &used);
      if (used != im_str.size()) throw std::invalid_argument(im_str);
    }
    return {re, im};
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, "cannot parse complex value '" + s + "'");
  }
}

namespace {

std::map<std::string, std::string> parse_kv_lines(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open '" + file.string() + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ConfigError, file.string() + ":" + std::to_string(lineno) +
                                              ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw Error(ErrorCode::ConfigError,
                  file.string() + ":" + std::to_string(lineno) + ": empty key or value");
    kv[key] = value;
  }
  return kv;
}

}  // namespace

std::map<std::string, std::string> parse_config_file(const std::filesystem::path& file) {
  return parse_kv_lines(file);
}

BathSpec parse_bath_file(const std::filesystem::path& file) {
  const auto kv = parse_kv_lines(file);
  auto intval = [&](const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end())
      throw Error(ErrorCode::ConfigError, "bath file misses '" + key + "'");
    try {
      size_t used = 0;
      const int v = std::stoi(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument(it->second);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "bad integer for '" + key + "'");
    }
  };
  const int p = intval("p");
  const int q = intval("q");
  if (p < 0 || q < 0 || p + q < 1)
    throw Error(ErrorCode::ConfigError, "bath file needs p, q >= 0 with p + q >= 1");

  std::vector<Complex> hops(p + q + 1, Complex(0.0, 0.0));
  for (const auto& [key, value] : kv) {
    if (key.rfind("hop.", 0) != 0) continue;
    int n = 0;
    try {
      size_t used = 0;
      n = std::stoi(key.substr(4), &used);
      if (used != key.size() - 4) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "bad hopping key '" + key + "'");
    }
    if (n < -p || n > q)
      throw Error(ErrorCode::ConfigError,
                  "hopping offset " + std::to_string(n) + " outside -p..q");
    hops[n + p] = parse_complex_pair(value);
  }
  try {
    return BathSpec(p, q, std::move(hops));
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, std::string("invalid bath file: ") + e.what());
  }
}

std::string format_csv(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& file) : path_(file) {}

void CsvWriter::comment(const std::string& line) { buffer_ += "# " + line + "\n"; }

void CsvWriter::header(const std::vector<std::string>& cols) { row(cols); }

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) buffer_ += ',';
    buffer_ += cells[i];
  }
  buffer_ += '\n';
}

void CsvWriter::close() {
  if (closed_) return;
  std::ofstream out(path_, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write '" + path_.string() + "'");
  out << buffer_;
  closed_ = true;
}

}  // namespace nhscatter
