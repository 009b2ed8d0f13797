#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "rare_reach/error.hpp"

namespace rare_reach::cli {

/// Invalid experiment configuration. key() names the offending entry as
/// "section.key" (empty for file-level problems).
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& message)
      : Error(key.empty() ? message : "config key '" + key + "': " + message),
        key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/**
 * Flat sectioned key-value text:
 *
 *   # comment
 *   [section]
 *   key = value
 *
 * Keys before the first header belong to section "experiment". Duplicate keys
 * are rejected. Sections and keys keep their insertion order for writing.
 */
class ConfigDocument {
 public:
  static ConfigDocument parse(const std::string& text);
  static ConfigDocument load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  /// Throws ConfigError if absent.
  const std::string& get(const std::string& section, const std::string& key) const;
  std::string getOr(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
  void set(const std::string& section, const std::string& key, std::string value);
  void erase(const std::string& section, const std::string& key);

  std::vector<std::string> sections() const;
  std::vector<std::string> keys(const std::string& section) const;

  void write(std::ostream& out) const;
  std::string str() const;

 private:
  struct Entry {
    std::string key;
    std::string value;
  };
  struct Section {
    std::string name;
    std::vector<Entry> entries;
  };
  Section* find(const std::string& name);
  const Section* find(const std::string& name) const;

  std::vector<Section> sections_;
};

// Typed readers; `key` is "section.key" for error messages.
double parseDouble(const std::string& key, const std::string& text);
std::int64_t parseInt(const std::string& key, const std::string& text);
std::uint64_t parseUint(const std::string& key, const std::string& text);
bool parseBool(const std::string& key, const std::string& text);
/// Comma-separated numbers; integer items may use ranges "a..b".
std::vector<double> parseDoubleList(const std::string& key, const std::string& text);
std::vector<int> parseIntList(const std::string& key, const std::string& text);

}  // namespace rare_reach::cli
