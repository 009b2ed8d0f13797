#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cli/config.hpp"
#include "cli/experiment.hpp"
#include "rare_reach/error.hpp"
#include "rare_reach/version.hpp"

namespace cli = rare_reach::cli;

int main(int argc, char** argv) {
  CLI::App app{"rare_reach: first-passage experiments under finite time budgets"};
  app.set_version_flag("--version", std::string(rare_reach::version()));
  app.require_subcommand(1);
  app.fallthrough();

  std::string configPath;
  std::optional<std::uint64_t> seed;
  unsigned workers = 0;
  std::string outDir = ".";
  std::optional<std::string> format;
  app.add_option("--config", configPath, "experiment file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed (overrides the file and RARE_REACH_SEED)");
  app.add_option("--workers", workers, "worker threads, 0 = all cores; results do not depend on it");
  app.add_option("--out", outDir, "output directory")->capture_default_str();
  app.add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}, CLI::ignore_case));

  std::string kindFromCommand;
  for (const auto& kind : cli::experimentKinds())
    app.add_subcommand(kind, "run a " + kind + " experiment")
        ->callback([&kindFromCommand, kind] { kindFromCommand = kind; });
  auto* runCmd = app.add_subcommand("run", "run the kind declared in --config");

  app.add_subcommand("recipes", "list built-in recipes");
  std::string recipeName;
  bool printOnly = false;
  auto* recipeCmd = app.add_subcommand("recipe", "run a built-in recipe");
  recipeCmd->add_option("name", recipeName, "recipe name")->required();
  recipeCmd->add_flag("--print", printOnly, "print the recipe file instead of running it");

  std::string keysKind;
  auto* keysCmd = app.add_subcommand("keys", "list the accepted keys of a kind");
  keysCmd->add_option("kind", keysKind)->required()->check(
      CLI::IsMember(cli::experimentKinds()));

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("recipes")) {
      for (const auto& r : cli::recipes())
        std::cout << r.name << "  (" << r.budgetSeconds << " s)  " << r.description << '\n';
      return 0;
    }
    if (keysCmd->parsed()) {
      for (const auto& k : cli::documentedKeys(keysKind))
        std::cout << '[' << k.section << "] " << k.key << " = " << k.defaultValue
                  << (k.help.empty() ? "" : "    # " + k.help) << '\n';
      return 0;
    }

    cli::ConfigDocument doc;
    cli::Overrides overrides;
    overrides.seed = seed;
    overrides.format = format;
    if (recipeCmd->parsed()) {
      const auto& recipe = cli::findRecipe(recipeName);
      if (printOnly) {
        std::cout << recipe.config;
        return 0;
      }
      doc = cli::ConfigDocument::parse(recipe.config);
    } else {
      if (!configPath.empty()) doc = cli::ConfigDocument::load(configPath);
      if (runCmd->parsed()) {
        if (configPath.empty()) throw cli::ConfigError("", "run needs --config");
      } else {
        overrides.kind = kindFromCommand;
      }
    }

    const auto result = cli::run(doc, overrides, workers, outDir);
    std::cerr << "wrote " << result.dataPath << " (" << result.table.size() << " rows, "
              << result.seconds << " s) and " << result.manifestPath << '\n';
    return 0;
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
