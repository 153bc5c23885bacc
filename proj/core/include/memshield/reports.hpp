#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memshield/harness.hpp"
#include "memshield/propagation.hpp"

namespace memshield {

/// Every knob a CLI run can set. Scenario fields feed the harness, the rest
/// pick sweep axes, SIR settings and figure selection.
struct AppConfig {
  ScenarioConfig scenario;
  SirConfig sir;
  std::string sir_defense = "memsad";  // none | memsad | composite
  AblationAxis axis = AblationAxis::Kappa;
  std::vector<double> grid;  // empty: the axis default grid
  std::string figure = "roc";
};

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

/// All valid keys with their defaults, sorted by name.
std::vector<ConfigKey> config_keys();

/// Sets one key. Unknown keys throw ConfigError naming every valid key;
/// malformed values throw ConfigError naming the key.
void set_config_value(AppConfig& c, std::string_view key, std::string_view value);

/// Current value of every key, in the same format set_config_value accepts.
std::map<std::string, std::string> config_values(const AppConfig& c);

/// Reads `key = value` lines ('#' starts a comment), then applies the
/// `key=value` overrides in order, then validates.
AppConfig parse_config_text(std::string_view text, const std::vector<std::string>& overrides = {});
AppConfig parse_config(const std::optional<std::filesystem::path>& path,
                       const std::vector<std::string>& overrides = {});

/// Sorted `key=value` lines; the hash is FNV-1a over this text, 16 hex digits.
std::string canonical_config(const AppConfig& c);
std::string config_hash(const AppConfig& c);

std::vector<double> default_grid(AblationAxis axis);

enum class Figure { CouplingTrajectory, Roc, Sir, RegretCurve, CorpusScaling };
std::string_view to_string(Figure f);
Figure parse_figure(std::string_view s);

/// CSV series for one figure. The coupling trajectory replays the trigger
/// search of the first seed and scores the poison passage at every step
/// against the current triggered history.
std::string figure_csv(Figure f, const AppConfig& c);

struct OutputFile {
  std::string name;
  std::string content;
};

struct CommandResult {
  std::vector<OutputFile> outputs;
  bool checks_passed = true;  // false maps to exit code 3
  std::vector<std::string> failures;
};

const std::vector<std::string>& command_names();

/// Runs one subcommand in memory. Throws ConfigError for an unknown command.
CommandResult run_command(std::string_view command, const AppConfig& c);

struct Manifest {
  std::string command;
  std::string version;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> modules;  // module name -> version
  std::map<std::string, std::string> outputs;  // file name -> content hash
};

Manifest make_manifest(std::string_view command, const AppConfig& c, const CommandResult& r);
std::string manifest_json(const Manifest& m);
/// Throws ParseError on malformed JSON or missing fields.
Manifest parse_manifest(std::string_view json);
/// Rebuilds the configuration and checks it against the recorded hash.
AppConfig config_from_manifest(const Manifest& m);

/// Writes every output plus manifest.json into `dir` (created if needed).
void write_outputs(const std::filesystem::path& dir, const CommandResult& r, const Manifest& m);

std::string content_hash(std::string_view content);

}  // namespace memshield
