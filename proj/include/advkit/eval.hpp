#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "advkit/attack.hpp"
#include "advkit/dataset.hpp"
#include "advkit/zoo.hpp"

namespace advkit {

enum class AttackKind { fgsm, igsm, ensemble, cw };

std::string_view attack_kind_name(AttackKind kind);
AttackKind parse_attack_kind(std::string_view name);

/// Which attack to run and how. fgsm uses config.epsilon only; igsm and
/// ensemble use the whole config; gating applies to ensemble; cw uses `cw`.
struct AttackSpec {
  AttackKind kind = AttackKind::igsm;
  AttackConfig config;
  GatingPolicy gating = GatingPolicy::loss_threshold(0.01);
  CWConfig cw;
};

enum class GoalMode { targeted, untargeted };

struct TargetRule {
  enum class Kind { random_nontrue, fixed, least_likely };
  Kind kind = Kind::random_nontrue;
  std::size_t fixed_class = 0;
};

struct ImageSelection {
  std::size_t count = 100;
  std::uint64_t seed = 0;
  Split split = Split::test;
};

struct EvalSpec {
  AttackSpec attack;
  std::vector<std::vector<std::string>> sources;  // one row per source; >1 member needs kind == ensemble
  std::vector<std::string> victims;
  ImageSelection images;
  GoalMode goal = GoalMode::targeted;
  TargetRule target;

  /// Names must exist in `zoo`; throws ConfigError otherwise.
  void validate(const Zoo& zoo) const;
};

/// One image admitted by the filter, with the goal every source pursues on it.
struct SelectedImage {
  std::size_t index = 0;  // position in the dataset split
  std::size_t true_class = 0;
  AttackGoal goal = AttackGoal::untargeted(0);
};

/// Walks the split in a seeded order and keeps images that every model in
/// `filter_models` classifies correctly (and, for targeted goals, whose target
/// differs from the true class) until `selection.count` are found. Targets
/// depend only on the image and the seed, so every source row sees the
/// same goal per image. least_likely uses the mean softmax over
/// `filter_models`. Throws ConfigError if nothing survives.
std::vector<SelectedImage> select_images(const Ensemble& filter_models, const Dataset& data,
                                         const ImageSelection& selection, GoalMode goal, const TargetRule& target);

struct AttackOutcome {
  Tensor x_adv;
  std::vector<StepRecord> steps;  // empty for fgsm and cw
  bool cw_succeeded = false;
};

/// Runs `attack` against `source` (one member unless kind == ensemble).
AttackOutcome run_attack(const Ensemble& source, const Tensor& x, const AttackGoal& goal, const AttackSpec& attack);

/// Re-checks the output invariants before an image is scored: for gradient
/// sign attacks ||x_adv - x||_inf <= epsilon + 1e-12 and pixels in the domain;
/// for cw pixels in the domain and margin <= 0 on every member when it
/// reports success. Violations throw InvariantViolation.
void check_adversarial(const Tensor& x_adv, const Tensor& x, const AttackSpec& attack, const Ensemble& source,
                       const AttackGoal& goal, bool cw_succeeded);

struct TransferCell {
  std::string source;
  std::string victim;
  bool white_box = false;     // victim is a member of the source
  std::vector<bool> outcomes; // per selected image, in selection order
  std::size_t n_images() const { return outcomes.size(); }
  std::size_t n_success() const;
  double rate() const;
};

struct TransferMatrix {
  std::vector<std::string> sources;  // row labels, members joined by '+'
  std::vector<std::string> victims;
  std::vector<SelectedImage> images;
  std::vector<TransferCell> cells;   // row-major

  const TransferCell& at(std::string_view source, std::string_view victim) const;
};

std::string source_label(const std::vector<std::string>& members);

/// Attacks the selected images once per source row and scores each
/// adversarial image against every victim.
TransferMatrix run_eval(const Zoo& zoo, const Dataset& data, const EvalSpec& spec);

/// Scores precomputed adversarial images (for example a stored archive).
/// Domain and l-infinity invariants are re-checked against the clean images.
TransferCell score_adversarial(const std::string& source, const std::vector<std::string>& source_members,
                               const TrainedModel& victim, const Dataset& data,
                               const std::vector<SelectedImage>& images, const std::vector<Tensor>& adversarial,
                               const AttackSpec& attack);

struct SweepSpec {
  AttackSpec attack;  // kind igsm or ensemble; iterations is replaced by max(grid)
  std::vector<std::string> members;
  std::vector<std::size_t> grid;  // strictly increasing
  ImageSelection images;
  GoalMode goal = GoalMode::targeted;
  TargetRule target;

  void validate(const Zoo& zoo) const;
};

struct SweepCurve {
  std::string model;
  std::vector<std::size_t> n_success;  // per grid point
  double monotone_fraction = 0.0;       // images whose outcome never flips back to failure along the grid
};

struct SweepResult {
  SweepSpec spec;
  std::size_t n_images = 0;
  std::vector<SweepCurve> curves;

  const SweepCurve& curve(std::string_view model) const;
  /// Smallest grid budget whose success rate is >= threshold.
  std::optional<std::size_t> first_budget_reaching(std::string_view model, double threshold) const;
};

/// One run of max(grid) iterations per image; each member's prediction at
/// iterate n is read from the trace.
SweepResult iteration_sweep(const Zoo& zoo, const Dataset& data, const SweepSpec& spec);

}  // namespace advkit
