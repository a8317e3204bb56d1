#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "advkit/dataset.hpp"
#include "advkit/eval.hpp"
#include "advkit/json_text.hpp"
#include "advkit/zoo.hpp"

namespace advkit {

struct DatasetConfig {
  enum class Source { synthetic, idx };
  Source source = Source::synthetic;
  SyntheticParams synthetic;  // seed comes from global_seed
  std::filesystem::path train_images, train_labels, test_images, test_labels;  // idx only
};

/// The attack command's section: one source (a model or an ensemble).
struct AttackRunSpec {
  AttackSpec attack;
  std::vector<std::string> members;
  ImageSelection images;
  GoalMode goal = GoalMode::targeted;
  TargetRule target;
};

struct EvalSection {
  bool use_archive = false;
  EvalSpec spec;  // with use_archive only `victims` is read
};

struct RunConfig {
  std::uint64_t global_seed = 0;
  std::filesystem::path output_dir = "advkit_out";
  DatasetConfig dataset;
  ZooTrainOptions zoo;
  std::optional<AttackRunSpec> attack;
  std::optional<EvalSection> eval;
  std::optional<SweepSpec> sweep;
};

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
};

/// The published schema (schema/run_config.schema.json), compiled in.
const Json& run_config_schema();

/// Validates `doc` against the schema, then fills defaults. Relative paths
/// in the document resolve against `base_dir`; override paths are taken as
/// given. Throws ConfigError.
RunConfig parse_run_config(const Json& doc, const std::filesystem::path& base_dir, const ConfigOverrides& overrides = {});

RunConfig load_run_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

}  // namespace advkit
