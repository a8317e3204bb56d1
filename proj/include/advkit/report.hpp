#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "advkit/eval.hpp"
#include "advkit/json_text.hpp"

namespace advkit {

inline constexpr int kReportFormatVersion = 1;

inline constexpr std::string_view kTransferCsvHeader =
    "source,victim,goal,epsilon,alpha,iterations,n_images,n_success,rate";
inline constexpr std::string_view kSweepCsvHeader = "model,iterations,n_images,n_success,rate";

// JSON forms of the evaluation inputs; the *_from_json readers throw
// ConfigError on missing or ill-typed fields and fill documented defaults.
Json attack_spec_to_json(const AttackSpec& attack);
AttackSpec attack_spec_from_json(const Json& j);
Json selection_to_json(const ImageSelection& images, GoalMode goal, const TargetRule& target);
void selection_from_json(const Json& j, ImageSelection& images, GoalMode& goal, TargetRule& target);
Json eval_spec_to_json(const EvalSpec& spec);
EvalSpec eval_spec_from_json(const Json& j);
Json sweep_spec_to_json(const SweepSpec& spec);
SweepSpec sweep_spec_from_json(const Json& j);

std::string_view goal_mode_name(GoalMode goal);

/// model name -> model_hash
using ZooHashes = std::map<std::string, std::string>;
ZooHashes zoo_hashes(const Zoo& zoo);

std::string transfer_csv(const TransferMatrix& matrix, const EvalSpec& spec);
std::string sweep_csv(const SweepResult& result);

/// {spec, zoo_hashes, results[], created_with}. Transfer results carry the
/// per-image outcomes and the selected image indices and targets.
std::string transfer_json(const TransferMatrix& matrix, const EvalSpec& spec, const ZooHashes& hashes);
std::string sweep_json(const SweepResult& result, const ZooHashes& hashes);

struct CsvRow {
  std::map<std::string, std::string> fields;
  const std::string& at(const std::string& column) const;
};

/// Parses CSV text whose first line must equal `header`. DataError otherwise.
std::vector<CsvRow> parse_csv(const std::string& text, std::string_view header);

/// Writes `<stem>.csv` and `<stem>.json` atomically. IoError if unwritable.
void emit_report(const TransferMatrix& matrix, const EvalSpec& spec, const ZooHashes& hashes,
                 const std::filesystem::path& stem);
void emit_report(const SweepResult& result, const ZooHashes& hashes, const std::filesystem::path& stem);

}  // namespace advkit
