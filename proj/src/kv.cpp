#include "tforge/kv.hpp"

#include <charconv>
#include <sstream>

#include "tforge/error.hpp"

namespace tforge {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& token, const std::string& key) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) fail(ErrorCode::kParseError, "key '" + key + "': not a number: '" + token + "'");
  return v;
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::kParseError, "line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(ErrorCode::kParseError, "line " + std::to_string(lineno) + ": empty key");
    if (!kv.values_.emplace(key, value).second)
      fail(ErrorCode::kParseError, "line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return kv;
}

const std::string& KeyValues::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorCode::kParseError, "missing key '" + key + "'");
  return it->second;
}

std::string KeyValues::get_or(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValues::number(const std::string& key) const { return to_double(get(key), key); }

double KeyValues::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::vector<double> KeyValues::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& w : words(key)) out.push_back(to_double(w, key));
  return out;
}

std::vector<std::string> KeyValues::words(const std::string& key) const {
  std::istringstream in(get(key));
  std::vector<std::string> out;
  std::string w;
  while (in >> w) {
    // Commas are accepted as separators in list-valued keys.
    std::string part;
    std::istringstream parts(w);
    while (std::getline(parts, part, ','))
      if (!part.empty()) out.push_back(part);
  }
  return out;
}

}  // namespace tforge
