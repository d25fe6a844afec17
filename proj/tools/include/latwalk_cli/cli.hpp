#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "latwalk/experiments.hpp"
#include "latwalk/walk_model.hpp"

namespace latwalk::cli {

/// Resolves a model reference: a preset name ("srw", "range2", "skewed",
/// "skewed_normalized", "diagonal", "heavy"), an inline JSON object, or a path
/// to a model file (relative paths against `base_dir`).
WalkModel resolve_model(const nlohmann::json& ref, const std::filesystem::path& base_dir = {});

/// One experiment entry of a manifest.
struct ManifestEntry {
  std::string id;    ///< unique name, used for the output file names
  std::string kind;  ///< identities, log_asymptotics, gottahit, halfline, line, strip, factorization,
                     ///< entry_point, shifted, overshoot, beurling
  std::vector<WalkModel> models;
  nlohmann::json params;
};

struct Manifest {
  std::optional<std::uint64_t> seed;
  std::vector<ManifestEntry> experiments;

  const ManifestEntry& find(const std::string& id) const;
};

/// Parses and validates a manifest:
///   {"seed": 1, "experiments": [{"id": "halfline", "kind": "halfline",
///     "model": "srw", "params": {"n_grid": [16, 32], "samples": 100000}}]}
/// "models" (a list) may replace "model"; "kind" defaults to "id".
/// Throws Error{ParseError} for malformed input and Error{InvalidArgument}
/// for grids violating an experiment precondition (e.g. beurling k > n/2).
Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir = {});
Manifest load_manifest(const std::filesystem::path& path);

/// Runs one manifest entry.
ExperimentReport run_entry(const ManifestEntry& entry, const RunOptions& options);

struct RunConfig {
  std::filesystem::path manifest;
  std::string experiment;
  std::filesystem::path out_dir;
  std::optional<std::string> model;  ///< replaces the entry's models
  std::optional<std::uint64_t> seed;
  unsigned workers = 0;
  std::uint64_t chunk = 4096;
  std::optional<std::uint64_t> samples_override;
};

struct VerifyConfig {
  std::optional<std::string> model;
  double identity_tolerance = 1e-9;
  double kernel_tolerance = 1e-6;
  bool kernel_checks = true;
};

/// Exact-identity suite; exit 0 iff every check passes.
int cmd_verify(const VerifyConfig& config, std::ostream& out, std::ostream& err);
/// Writes <out>/<id>.csv and <out>/<id>.json; exit 0 iff every check passes.
int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);
/// Prints a power-law fit of one label of a results CSV.
int cmd_fit(const std::string& csv, double target, const std::string& label, std::ostream& out, std::ostream& err);

/// Command-line entry point (subcommands verify, run, fit).
int main(int argc, char** argv);

}  // namespace latwalk::cli
