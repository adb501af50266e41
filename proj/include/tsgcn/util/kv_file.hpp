#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tsgcn/util/error.hpp"

namespace tsgcn {

/// One `key = value` line. Keys may repeat; order is kept.
struct KvEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

namespace detail {
inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}
}  // namespace detail

/// Grammar: blank lines and lines starting with '#' are ignored; every other
/// line is `key = value` with surrounding whitespace trimmed.
inline std::vector<KvEntry> parse_kv(std::string_view text, const std::string& source = "<config>") {
  std::vector<KvEntry> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ParseError(source, line_no, "expected 'key = value'");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(source, line_no, "empty key");
    out.push_back({std::string(key), std::string(value), line_no});
  }
  return out;
}

inline std::vector<KvEntry> read_kv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_kv(ss.str(), path.string());
}

template <typename T>
T parse_number(const KvEntry& e, const std::string& source) {
  T v{};
  const auto* first = e.value.data();
  const auto* last = first + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw ParseError(source, e.line, "bad value '" + e.value + "' for " + e.key);
  return v;
}

inline bool parse_bool(const KvEntry& e, const std::string& source) {
  if (e.value == "true" || e.value == "1" || e.value == "on") return true;
  if (e.value == "false" || e.value == "0" || e.value == "off") return false;
  throw ParseError(source, e.line, "expected a boolean for " + e.key + ", got '" + e.value + "'");
}

/// Whitespace- or comma-separated list of numbers.
template <typename T>
std::vector<T> parse_list(const KvEntry& e, const std::string& source) {
  std::vector<T> out;
  std::string item;
  auto flush = [&] {
    if (item.empty()) return;
    out.push_back(parse_number<T>({e.key, item, e.line}, source));
    item.clear();
  };
  for (char c : e.value) {
    if (c == ',' || c == ' ' || c == '\t') {
      flush();
    } else {
      item += c;
    }
  }
  flush();
  return out;
}

}  // namespace tsgcn
