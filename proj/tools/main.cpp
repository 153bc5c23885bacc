#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "memshield/error.hpp"
#include "memshield/reports.hpp"

namespace fs = std::filesystem;
using namespace memshield;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitCheck = 3;

std::string key_table() {
  std::ostringstream os;
  os << "Configuration keys (set with --set key=value or in a key = value file):\n";
  for (const auto& k : config_keys()) {
    os << "  " << k.name << " = " << (k.default_value.empty() ? "\"\"" : k.default_value) << "\n      " << k.help
       << "\n";
  }
  return os.str();
}

int finish(const std::string& command, const AppConfig& cfg, const CommandResult& r, const fs::path& out) {
  const Manifest m = make_manifest(command, cfg, r);
  write_outputs(out, r, m);
  std::cout << command << ": config " << m.config_hash << ", " << r.outputs.size() << " file(s) in " << out.string()
            << "\n";
  for (const auto& f : r.failures) std::cout << "check failed: " << f << "\n";
  return r.checks_passed ? 0 : kExitCheck;
}

int replay(const fs::path& manifest_path, const fs::path& out) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open manifest " + manifest_path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const Manifest recorded = parse_manifest(ss.str());
  const AppConfig cfg = config_from_manifest(recorded);
  const CommandResult r = run_command(recorded.command, cfg);
  const Manifest now = make_manifest(recorded.command, cfg, r);
  write_outputs(out, r, now);
  int mismatches = 0;
  for (const auto& [name, hash] : recorded.outputs) {
    const auto it = now.outputs.find(name);
    if (it == now.outputs.end() || it->second != hash) {
      std::cout << "mismatch: " << name << "\n";
      ++mismatches;
    }
  }
  if (now.outputs.size() != recorded.outputs.size()) ++mismatches;
  std::cout << "replay of " << recorded.command << ": " << (mismatches ? "outputs differ" : "identical") << "\n";
  return mismatches ? kExitCheck : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memory-poisoning attack and defense evaluation harness"};
  app.require_subcommand(1);
  app.footer(key_table());

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  const std::map<std::string, std::string> blurbs = {
      {"attack", "generate poison for each seed and measure ASR-R/A/T"},
      {"defend", "run the defense roster against one attack family"},
      {"matrix", "every family against every defense, with intervals and tests"},
      {"adaptive", "synonym-substitution adversary against MemSAD"},
      {"sweep", "ablation over one axis (see the axis key)"},
      {"propagate", "agent-level spread of poison through a shared store"},
      {"theory-check", "closed-form bounds next to their empirical counterparts"},
      {"report", "CSV series for one figure (see the figure key)"},
  };
  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name, blurbs.at(name));
    sub->add_option("-c,--config", config_path, "key = value configuration file");
    sub->add_option("-s,--set", overrides, "override one key (repeatable)");
    sub->add_option("-o,--out", out_dir, "output directory (default out/<command>)");
  }
  auto* rep = app.add_subcommand("replay", "re-run a manifest and compare output hashes");
  std::string manifest_path;
  rep->add_option("manifest", manifest_path, "manifest.json of an earlier run")->required();
  rep->add_option("-o,--out", out_dir, "output directory (default out/replay)");
  app.add_subcommand("keys", "list configuration keys and defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    auto* chosen = app.get_subcommands().front();
    const std::string command = chosen->get_name();
    if (command == "keys") {
      std::cout << key_table();
      return 0;
    }
    const fs::path out = out_dir.empty() ? fs::path("out") / command : fs::path(out_dir);
    if (command == "replay") return replay(manifest_path, out);
    const AppConfig cfg =
        parse_config(config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path), overrides);
    return finish(command, cfg, run_command(command, cfg), out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const bool config = e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::ParseError;
    return config ? kExitConfig : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
