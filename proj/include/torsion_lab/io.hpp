#pragma once

#include "core.hpp"

#include <json.hpp>

#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <variant>

namespace tlab {

// %.17g-style text, enough for an exact double round trip.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

// In-memory table written as LF-terminated CSV with lowercase headers.
class Table {
 public:
  using Cell = std::variant<double, long long, std::string>;

  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {
    for (auto& h : header_)
      for (auto& c : h) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }

  void add(std::vector<Cell> row) {
    require(row.size() == header_.size(), ErrorKind::invalid_argument, "row width does not match header");
    rows_.push_back(std::move(row));
  }

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }

  std::string csv() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
    os << '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << cell_text(r[i]);
      os << '\n';
    }
    return os.str();
  }

  nlohmann::ordered_json json() const {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows_) {
      nlohmann::ordered_json o;
      for (std::size_t i = 0; i < r.size(); ++i)
        std::visit([&](const auto& v) { o[header_[i]] = v; }, r[i]);
      arr.push_back(o);
    }
    return arr;
  }

 private:
  static std::string cell_text(const Cell& c) {
    if (auto d = std::get_if<double>(&c)) return format_double(*d);
    if (auto n = std::get_if<long long>(&c)) return std::to_string(*n);
    const std::string& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }

  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::invalid_argument, "cannot open " + path + " for writing");
  f << text;
}

// Flat "key=value" lines; '#' starts a comment. Keys keep their namespace
// prefix (experiment.param).
inline std::map<std::string, std::string> parse_flat_config(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const char* ws = " \t\r";
    s.erase(0, s.find_first_not_of(ws));
    s.erase(s.find_last_not_of(ws) + 1);
    return s;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    require(eq != std::string::npos && eq > 0, ErrorKind::invalid_argument,
            "config line " + std::to_string(lineno) + ": expected key=value");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

// Parses a number strictly: the whole string must be consumed.
inline double parse_number(const std::string& key, const std::string& s) {
  double v = 0;
  const char* b = s.data();
  const char* e = b + s.size();
  auto res = std::from_chars(b, e, v);
  require(!s.empty() && res.ec == std::errc() && res.ptr == e, ErrorKind::invalid_argument,
          "parameter " + key + ": '" + s + "' is not a number");
  return v;
}

}  // namespace tlab
