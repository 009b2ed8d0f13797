#include "cli/config.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rare_reach::cli {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> splitList(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

}  // namespace

ConfigDocument ConfigDocument::parse(const std::string& text) {
  ConfigDocument doc;
  std::string section = "experiment";
  std::istringstream in(text);
  std::string raw;
  int lineNo = 0;
  while (std::getline(in, raw)) {
    ++lineNo;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("", "line " + std::to_string(lineNo) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("", "line " + std::to_string(lineNo) + ": empty section name");
      if (!doc.find(section)) doc.sections_.push_back({section, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("", "line " + std::to_string(lineNo) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("", "line " + std::to_string(lineNo) + ": missing key");
    if (doc.has(section, key))
      throw ConfigError(section + "." + key, "duplicate key");
    doc.set(section, key, std::move(value));
  }
  return doc;
}

ConfigDocument ConfigDocument::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

ConfigDocument::Section* ConfigDocument::find(const std::string& name) {
  for (auto& s : sections_)
    if (s.name == name) return &s;
  return nullptr;
}

const ConfigDocument::Section* ConfigDocument::find(const std::string& name) const {
  for (const auto& s : sections_)
    if (s.name == name) return &s;
  return nullptr;
}

bool ConfigDocument::has(const std::string& section, const std::string& key) const {
  const Section* s = find(section);
  if (!s) return false;
  return std::any_of(s->entries.begin(), s->entries.end(),
                     [&](const Entry& e) { return e.key == key; });
}

const std::string& ConfigDocument::get(const std::string& section,
                                       const std::string& key) const {
  if (const Section* s = find(section))
    for (const auto& e : s->entries)
      if (e.key == key) return e.value;
  throw ConfigError(section + "." + key, "required key is missing");
}

std::string ConfigDocument::getOr(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

void ConfigDocument::set(const std::string& section, const std::string& key,
                         std::string value) {
  Section* s = find(section);
  if (!s) {
    sections_.push_back({section, {}});
    s = &sections_.back();
  }
  for (auto& e : s->entries)
    if (e.key == key) {
      e.value = std::move(value);
      return;
    }
  s->entries.push_back({key, std::move(value)});
}

void ConfigDocument::erase(const std::string& section, const std::string& key) {
  if (Section* s = find(section))
    std::erase_if(s->entries, [&](const Entry& e) { return e.key == key; });
}

std::vector<std::string> ConfigDocument::sections() const {
  std::vector<std::string> names;
  for (const auto& s : sections_) names.push_back(s.name);
  return names;
}

std::vector<std::string> ConfigDocument::keys(const std::string& section) const {
  std::vector<std::string> out;
  if (const Section* s = find(section))
    for (const auto& e : s->entries) out.push_back(e.key);
  return out;
}

void ConfigDocument::write(std::ostream& out) const {
  bool first = true;
  for (const auto& s : sections_) {
    if (s.entries.empty()) continue;
    if (!first) out << '\n';
    first = false;
    out << '[' << s.name << "]\n";
    for (const auto& e : s.entries) out << e.key << " = " << e.value << '\n';
  }
}

std::string ConfigDocument::str() const {
  std::ostringstream out;
  write(out);
  return out.str();
}

double parseDouble(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || end != t.data() + t.size() || t.empty() || !std::isfinite(v))
    throw ConfigError(key, "expected a finite number, got '" + text + "'");
  return v;
}

std::int64_t parseInt(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::int64_t v = 0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec == std::errc{} && end == t.data() + t.size() && !t.empty()) return v;
  // Accept integral scientific notation such as 1e7.
  const double d = parseDouble(key, text);
  if (d != std::floor(d) || std::abs(d) > 9e18)
    throw ConfigError(key, "expected an integer, got '" + text + "'");
  return static_cast<std::int64_t>(d);
}

std::uint64_t parseUint(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec == std::errc{} && end == t.data() + t.size() && !t.empty()) return v;
  const std::int64_t i = parseInt(key, text);
  if (i < 0) throw ConfigError(key, "expected a non-negative integer, got '" + text + "'");
  return static_cast<std::uint64_t>(i);
}

bool parseBool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "on" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "off" || t == "no" || t == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + text + "'");
}

std::vector<double> parseDoubleList(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : splitList(text)) {
    const auto dots = item.find("..");
    if (dots != std::string::npos) {
      const auto lo = parseInt(key, item.substr(0, dots));
      const auto hi = parseInt(key, item.substr(dots + 2));
      if (hi < lo) throw ConfigError(key, "empty range '" + item + "'");
      for (auto v = lo; v <= hi; ++v) out.push_back(static_cast<double>(v));
    } else {
      out.push_back(parseDouble(key, item));
    }
  }
  if (out.empty()) throw ConfigError(key, "expected a non-empty list");
  return out;
}

std::vector<int> parseIntList(const std::string& key, const std::string& text) {
  std::vector<int> out;
  for (const auto& item : splitList(text)) {
    const auto dots = item.find("..");
    if (dots != std::string::npos) {
      const auto lo = parseInt(key, item.substr(0, dots));
      const auto hi = parseInt(key, item.substr(dots + 2));
      if (hi < lo) throw ConfigError(key, "empty range '" + item + "'");
      for (auto v = lo; v <= hi; ++v) out.push_back(static_cast<int>(v));
    } else {
      out.push_back(static_cast<int>(parseInt(key, item)));
    }
  }
  if (out.empty()) throw ConfigError(key, "expected a non-empty list");
  return out;
}

}  // namespace rare_reach::cli
