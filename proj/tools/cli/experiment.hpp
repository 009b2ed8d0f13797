#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cli/config.hpp"
#include "rare_reach/table.hpp"

namespace rare_reach::cli {

inline constexpr const char* kSeedEnv = "RARE_REACH_SEED";
inline constexpr std::uint64_t kDefaultSeed = 1;

/// cumulant-report, parallel-sweep, restart-run, restart-gain, fv-converge,
/// mm1-appendix1, mm1k-appendix3.
const std::vector<std::string>& experimentKinds();

struct KeyDoc {
  std::string section;
  std::string key;
  std::string defaultValue;
  std::string help;
};

/// Every accepted key for a kind, model keys listed per admissible family.
std::vector<KeyDoc> documentedKeys(const std::string& kind);

/// Command-line values that take precedence over the file.
struct Overrides {
  std::optional<std::string> kind;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> format;
};

/**
 * Checks every section and key, fills defaults and validates the values
 * against the target module before anything is simulated.
 *
 * The result lists every key of the kind in a fixed order, so running it again
 * reproduces the same outputs. Seed precedence: override, file, the
 * RARE_REACH_SEED environment variable, kDefaultSeed.
 */
ConfigDocument resolve(const ConfigDocument& doc, const Overrides& overrides = {});

/// Runs a resolved document. `workers` changes wall-clock only.
ResultTable execute(const ConfigDocument& resolved, unsigned workers = 0);

struct RunResult {
  ResultTable table;
  ConfigDocument resolved;
  std::string dataPath;
  std::string manifestPath;
  double seconds = 0.0;
};

/**
 * resolve + execute, then writes <outDir>/<kind>.<format> and
 * <outDir>/manifest.ini. The manifest is the resolved document with the
 * toolkit version and wall-clock time in leading comments; passing it back as
 * --config reproduces the data file byte for byte.
 */
RunResult run(const ConfigDocument& doc, const Overrides& overrides, unsigned workers,
              const std::string& outDir);

struct Recipe {
  std::string name;
  std::string description;
  /// Declared wall-clock budget on a 4-core laptop.
  double budgetSeconds = 0.0;
  std::string config;
};

const std::vector<Recipe>& recipes();
std::vector<std::string> listRecipes();
/// Throws ConfigError for an unknown name.
const Recipe& findRecipe(const std::string& name);

}  // namespace rare_reach::cli
