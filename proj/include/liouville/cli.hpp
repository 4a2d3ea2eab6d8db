#pragma once

// Config ingestion, analysis orchestration and report assembly for the
// command-line tool. The grammar is documented in docs/config-format.md.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "liouville/actionangle.hpp"
#include "liouville/normalform.hpp"

namespace liouville::cli {

struct ConfigEntry {
  std::string key;
  std::string value;   // canonical: whitespace dropped except between word characters
  std::string raw;     // as written, trimmed; expressions are parsed from this
  std::size_t line = 0;
};

struct ConfigSection {
  std::string name;
  std::vector<ConfigEntry> entries;
  std::size_t line = 0;

  const ConfigEntry* find(std::string_view key) const;
};

struct ConfigFile {
  std::vector<ConfigSection> sections;   // canonical section order

  const ConfigSection* find(std::string_view name) const;
};

/// Throws Error(Config) with the line number on malformed input.
ConfigFile parse_config(std::string_view text);
/// Canonical reprint; parse_config(reprint(c)) reprints identically.
std::string reprint(const ConfigFile& c);
/// FNV-1a 64 of the canonical reprint, as 16 hex digits.
std::string config_hash(const ConfigFile& c);

struct NormalFormSettings {
  PdMode mode = PdMode::Hamiltonian;
  std::vector<std::string> coords;
  std::vector<std::string> input;   // one expression (Hamiltonian) or one per coordinate
  int maxdeg = 6;
};

struct TensorRequest {
  std::string id;
  TensorField tensor;
};

struct AnalysisConfig {
  ConfigFile file;
  std::string hash;
  SystemSpec spec;
  std::vector<Expr> alpha;                     // primitive of omega, or empty
  std::vector<std::pair<std::string, std::vector<double>>> seeds;
  std::vector<TensorRequest> tensors;
  std::optional<NormalMode> normal_mode;
  double action_tol = 1e-4;   // verify_action residual
  double path_tol = 1e-6;     // leafwise path discrepancy
  double normal_tol = 1e-5;   // distance to the action-angle block form
  std::vector<ProductRule> products;
  std::optional<NormalFormSettings> normalform;
  std::size_t grid = 16;
  std::size_t sample_grid = 8;
  std::size_t threads = 1;
  std::filesystem::path out = ".";
};

struct Overrides {
  std::optional<std::filesystem::path> out;
  std::optional<int> maxdeg;
  std::optional<std::size_t> grid;
  std::optional<std::size_t> threads;
  std::vector<std::pair<std::string, std::string>> tol;   // --tol KEY=VAL
};

/// Builds the system and every request; throws Error(Config) (or a parse
/// error) naming the section, key and line.
AnalysisConfig load_config(std::string_view text, const Overrides& ov = {});
AnalysisConfig load_config_file(const std::filesystem::path& path, const Overrides& ov = {});

/// Sets a tolerance by name; throws Error(Config) for an unknown key.
void set_tolerance(AnalysisConfig& cfg, std::string_view key, std::string_view value);

enum class Command { Analyze, Actions, Conserve, Normalize, Classify };
std::optional<Command> parse_command(std::string_view name);

struct RunResult {
  nlohmann::ordered_json report;
  std::map<std::string, std::string> files;   // extra outputs: name -> content
  bool pass = true;
};

/// Runs the analyses of a command. Library failures inside an analysis are
/// recorded in its block and make the run fail; the report is always complete.
RunResult run(Command cmd, const AnalysisConfig& cfg);

/// Temp file in the target directory, then rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);
/// Report text with a trailing newline; the timing block is the only part
/// that varies between runs.
std::string report_text(const nlohmann::ordered_json& report);

/// CSV for "torus", "actions" or "deviation" from a written report; throws
/// Error(MissingBlock) when the report lacks the block.
std::string plotdata(const nlohmann::ordered_json& report, std::string_view what);

/// 0 all pass, 2 property failure, 1 config or IO error.
int exit_code_for(ErrorKind kind);

}  // namespace liouville::cli
