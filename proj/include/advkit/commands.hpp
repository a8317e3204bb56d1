#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "advkit/run_config.hpp"

namespace advkit {

/// Where each command reads and writes below output_dir.
struct OutputLayout {
  std::filesystem::path root;

  std::filesystem::path dataset_header() const { return root / "data" / "dataset.json"; }
  std::filesystem::path models_dir() const { return root / "models"; }
  std::filesystem::path model_file(const std::string& name) const { return models_dir() / (name + ".json"); }
  std::filesystem::path manifest() const { return models_dir() / "manifest.json"; }
  std::filesystem::path archive_header() const { return root / "attack" / "archive.json"; }
  std::filesystem::path attack_summary() const { return root / "attack" / "summary.json"; }
  std::filesystem::path eval_stem() const { return root / "reports" / "eval"; }
  std::filesystem::path sweep_stem() const { return root / "reports" / "sweep"; }
};

struct CommandOptions {
  bool force = false;  // overwrite existing outputs
};

/// Writes the synthetic (or imported IDX) dataset; prints its dataset_id.
void cmd_gen_data(const RunConfig& config, const CommandOptions& options, std::ostream& out);

/// Trains the configured zoo entries and writes model files plus
/// models/manifest.json with hashes and test accuracies.
void cmd_train(const RunConfig& config, const CommandOptions& options, std::ostream& out);

/// Runs the attack section over its image subset; writes the adversarial
/// archive (dataset blob format, split "adversarial") and a summary holding
/// per-image traces, per-member rates and the invariant audit.
void cmd_attack(const RunConfig& config, const CommandOptions& options, std::ostream& out);

void cmd_eval(const RunConfig& config, const CommandOptions& options, std::ostream& out);
void cmd_sweep(const RunConfig& config, const CommandOptions& options, std::ostream& out);

/// Loads the trained models listed in the manifest, checking each file
/// against its recorded hash and the dataset_id. DataError on mismatch.
Zoo load_trained_zoo(const OutputLayout& layout, const std::string& dataset_id);

}  // namespace advkit
