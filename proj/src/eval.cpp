#include "advkit/eval.hpp"

#include <algorithm>
#include <numeric>

#include "advkit/error.hpp"
#include "advkit/layers.hpp"
#include "advkit/rng.hpp"

namespace advkit {

namespace {

constexpr double kBallSlack = 1e-12;

// Seed streams under ImageSelection::seed.
constexpr std::uint64_t kOrderStream = 0;
constexpr std::uint64_t kTargetStream = 1;

void require_known(const Zoo& zoo, const std::string& name, const char* role) {
  if (!zoo.contains(name)) throw ConfigError(std::string(role) + " '" + name + "' is not in the zoo");
}

void validate_attack(const AttackSpec& attack, std::size_t members) {
  attack.config.validate();
  if (attack.kind == AttackKind::cw) attack.cw.validate();
  if (attack.kind == AttackKind::ensemble) {
    attack.gating.validate(members);
  } else if (members != 1) {
    throw ConfigError(std::string(attack_kind_name(attack.kind)) + " attacks take exactly one source model, got " +
                      std::to_string(members));
  }
}

void validate_selection(const ImageSelection& images, GoalMode goal, const TargetRule& target) {
  if (images.count == 0) throw ConfigError("image count must be positive");
  if (goal == GoalMode::untargeted && target.kind == TargetRule::Kind::fixed) {
    throw ConfigError("a fixed target class needs a targeted goal");
  }
}

std::size_t pick_target(const Ensemble& models, const Tensor& x, std::size_t y, std::size_t num_classes,
                        const TargetRule& rule, std::uint64_t seed, std::size_t index) {
  switch (rule.kind) {
    case TargetRule::Kind::fixed:
      return rule.fixed_class;
    case TargetRule::Kind::random_nontrue: {
      Rng rng(derive_seed(derive_seed(seed, kTargetStream), index));
      return (y + 1 + rng.index(num_classes - 1)) % num_classes;
    }
    case TargetRule::Kind::least_likely: {
      Tensor mean({num_classes});
      for (const TrainedModel* m : models) add_scaled(mean, softmax(forward_logits(*m, x)), 1.0);
      std::size_t best = 0;
      for (std::size_t c = 1; c < num_classes; ++c) {
        if (mean[c] < mean[best]) best = c;
      }
      return best;
    }
  }
  throw ContractError("unknown target rule");
}

Ensemble union_of(const Zoo& zoo, const std::vector<std::vector<std::string>>& rows,
                  const std::vector<std::string>& extra) {
  std::vector<std::string> names;
  auto add = [&](const std::string& n) {
    if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
  };
  for (const auto& row : rows)
    for (const auto& n : row) add(n);
  for (const auto& n : extra) add(n);
  return zoo.members(names);
}

}  // namespace

std::string_view attack_kind_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::fgsm: return "fgsm";
    case AttackKind::igsm: return "igsm";
    case AttackKind::ensemble: return "ensemble";
    case AttackKind::cw: return "cw";
  }
  throw ContractError("unknown attack kind");
}

AttackKind parse_attack_kind(std::string_view name) {
  for (AttackKind k : {AttackKind::fgsm, AttackKind::igsm, AttackKind::ensemble, AttackKind::cw}) {
    if (attack_kind_name(k) == name) return k;
  }
  throw ConfigError("unknown attack kind '" + std::string(name) + "'");
}

void EvalSpec::validate(const Zoo& zoo) const {
  if (sources.empty()) throw ConfigError("evaluation needs at least one source");
  if (victims.empty()) throw ConfigError("evaluation needs at least one victim");
  for (const auto& row : sources) {
    if (row.empty()) throw ConfigError("a source row names no models");
    for (const auto& n : row) require_known(zoo, n, "source model");
    validate_attack(attack, row.size());
  }
  for (const auto& v : victims) require_known(zoo, v, "victim model");
  validate_selection(images, goal, target);
}

void SweepSpec::validate(const Zoo& zoo) const {
  if (members.empty()) throw ConfigError("sweep needs at least one member");
  for (const auto& n : members) require_known(zoo, n, "sweep member");
  if (attack.kind != AttackKind::igsm && attack.kind != AttackKind::ensemble) {
    throw ConfigError("sweeps need an iterative attack (igsm or ensemble)");
  }
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i] <= grid[i - 1]) throw ConfigError("sweep grid must be strictly increasing");
  }
  AttackSpec run = attack;
  run.config.iterations = std::max<std::size_t>(1, grid.back());
  validate_attack(run, members.size());
  validate_selection(images, goal, target);
}

std::vector<SelectedImage> select_images(const Ensemble& filter_models, const Dataset& data,
                                         const ImageSelection& selection, GoalMode goal, const TargetRule& target) {
  if (data.size() == 0) throw ConfigError("no images to select from");
  if (target.kind == TargetRule::Kind::fixed && target.fixed_class >= data.num_classes) {
    throw ConfigError("fixed target class " + std::to_string(target.fixed_class) + " is out of range");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(selection.seed, kOrderStream));
  rng.shuffle(order);

  std::vector<SelectedImage> out;
  for (std::size_t idx : order) {
    if (out.size() == selection.count) break;
    const Tensor x = data.image(idx);
    const std::size_t y = data.labels[idx];
    bool correct = true;
    for (const TrainedModel* m : filter_models) {
      if (predict(*m, x) != y) {
        correct = false;
        break;
      }
    }
    if (!correct) continue;
    if (goal == GoalMode::untargeted) {
      out.push_back({idx, y, AttackGoal::untargeted(y)});
      continue;
    }
    const std::size_t t = pick_target(filter_models, x, y, data.num_classes, target, selection.seed, idx);
    if (t == y) continue;
    out.push_back({idx, y, AttackGoal::targeted(t)});
  }
  if (out.empty()) throw ConfigError("no image survives the selection filter");
  return out;
}

AttackOutcome run_attack(const Ensemble& source, const Tensor& x, const AttackGoal& goal, const AttackSpec& attack) {
  if (source.empty()) throw ContractError("attack source has no models");
  if (attack.kind != AttackKind::ensemble && source.size() != 1) {
    throw ConfigError(std::string(attack_kind_name(attack.kind)) + " attacks take exactly one source model");
  }
  AttackOutcome out;
  switch (attack.kind) {
    case AttackKind::fgsm:
      out.x_adv = fgsm(*source[0], x, goal, attack.config.epsilon, attack.config.domain);
      break;
    case AttackKind::igsm: {
      AttackTrace tr = igsm(*source[0], x, goal, attack.config);
      out.x_adv = std::move(tr.x_adv);
      out.steps = std::move(tr.steps);
      break;
    }
    case AttackKind::ensemble: {
      AttackTrace tr = iterative_ensemble_attack(source, x, goal, attack.config, attack.gating);
      out.x_adv = std::move(tr.x_adv);
      out.steps = std::move(tr.steps);
      break;
    }
    case AttackKind::cw: {
      CWResult r = cw_l2(*source[0], x, goal, attack.cw);
      out.x_adv = std::move(r.x_adv);
      out.cw_succeeded = r.succeeded;
      break;
    }
  }
  return out;
}

void check_adversarial(const Tensor& x_adv, const Tensor& x, const AttackSpec& attack, const Ensemble& source,
                       const AttackGoal& goal, bool cw_succeeded) {
  if (x_adv.shape() != x.shape()) {
    throw InvariantViolation("adversarial image shape " + shape_string(x_adv.shape()) + " differs from " +
                             shape_string(x.shape()));
  }
  const PixelDomain& dom = attack.config.domain;
  for (double v : x_adv.values()) {
    if (!(v >= dom.lo && v <= dom.hi)) {
      throw InvariantViolation("adversarial pixel " + std::to_string(v) + " is outside the pixel domain");
    }
  }
  if (attack.kind == AttackKind::cw) {
    if (!cw_succeeded) return;
    for (const TrainedModel* m : source) {
      if (cw_margin(forward_logits(*m, x_adv), goal, attack.cw.kappa) > 0.0) {
        throw InvariantViolation("C&W reported success but the margin on '" + m->name() + "' is positive");
      }
    }
    return;
  }
  const double d = linf_distance(x_adv, x);
  if (!(d <= attack.config.epsilon + kBallSlack)) {
    throw InvariantViolation("adversarial image is " + std::to_string(d) + " from its source in l-infinity, budget " +
                             std::to_string(attack.config.epsilon));
  }
}

std::size_t TransferCell::n_success() const {
  return static_cast<std::size_t>(std::count(outcomes.begin(), outcomes.end(), true));
}

double TransferCell::rate() const {
  if (outcomes.empty()) return 0.0;
  return static_cast<double>(n_success()) / static_cast<double>(n_images());
}

const TransferCell& TransferMatrix::at(std::string_view source, std::string_view victim) const {
  for (const auto& c : cells) {
    if (c.source == source && c.victim == victim) return c;
  }
  throw ContractError("no transfer cell for " + std::string(source) + " -> " + std::string(victim));
}

std::string source_label(const std::vector<std::string>& members) {
  std::string out;
  for (const auto& m : members) {
    if (!out.empty()) out += '+';
    out += m;
  }
  return out;
}

TransferMatrix run_eval(const Zoo& zoo, const Dataset& data, const EvalSpec& spec) {
  spec.validate(zoo);
  TransferMatrix matrix;
  matrix.victims = spec.victims;
  matrix.images =
      select_images(union_of(zoo, spec.sources, spec.victims), data, spec.images, spec.goal, spec.target);

  for (const auto& row : spec.sources) {
    const std::string label = source_label(row);
    matrix.sources.push_back(label);
    const Ensemble source = zoo.members(row);
    std::vector<Tensor> adversarial;
    adversarial.reserve(matrix.images.size());
    for (const auto& img : matrix.images) {
      const Tensor x = data.image(img.index);
      AttackOutcome out = run_attack(source, x, img.goal, spec.attack);
      check_adversarial(out.x_adv, x, spec.attack, source, img.goal, out.cw_succeeded);
      adversarial.push_back(std::move(out.x_adv));
    }
    for (const auto& v : spec.victims) {
      matrix.cells.push_back(score_adversarial(label, row, zoo.at(v), data, matrix.images, adversarial, spec.attack));
    }
  }
  return matrix;
}

TransferCell score_adversarial(const std::string& source, const std::vector<std::string>& source_members,
                               const TrainedModel& victim, const Dataset& data,
                               const std::vector<SelectedImage>& images, const std::vector<Tensor>& adversarial,
                               const AttackSpec& attack) {
  if (images.size() != adversarial.size()) {
    throw ContractError("got " + std::to_string(adversarial.size()) + " adversarial images for " +
                        std::to_string(images.size()) + " selected images");
  }
  TransferCell cell;
  cell.source = source;
  cell.victim = victim.name();
  cell.white_box = std::find(source_members.begin(), source_members.end(), victim.name()) != source_members.end();
  cell.outcomes.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    // The C&W margin replay needs the source models, which archives do not
    // carry; the domain check still applies.
    check_adversarial(adversarial[i], data.image(images[i].index), attack, {}, images[i].goal, false);
    cell.outcomes.push_back(images[i].goal.achieved_by(predict(victim, adversarial[i])));
  }
  return cell;
}

const SweepCurve& SweepResult::curve(std::string_view model) const {
  for (const auto& c : curves) {
    if (c.model == model) return c;
  }
  throw ContractError("no sweep curve for '" + std::string(model) + "'");
}

std::optional<std::size_t> SweepResult::first_budget_reaching(std::string_view model, double threshold) const {
  const SweepCurve& c = curve(model);
  for (std::size_t g = 0; g < spec.grid.size(); ++g) {
    if (static_cast<double>(c.n_success[g]) >= threshold * static_cast<double>(n_images)) return spec.grid[g];
  }
  return std::nullopt;
}

SweepResult iteration_sweep(const Zoo& zoo, const Dataset& data, const SweepSpec& spec) {
  spec.validate(zoo);
  SweepResult result;
  result.spec = spec;
  result.spec.attack.config.iterations = std::max<std::size_t>(1, spec.grid.back());
  const AttackSpec& attack = result.spec.attack;

  const Ensemble members = zoo.members(spec.members);
  const auto images = select_images(members, data, spec.images, spec.goal, spec.target);
  result.n_images = images.size();

  const std::size_t M = members.size(), G = spec.grid.size();
  for (const auto& name : spec.members) result.curves.push_back({name, std::vector<std::size_t>(G, 0), 0.0});
  std::vector<std::size_t> monotone(M, 0);

  for (const auto& img : images) {
    const Tensor x = data.image(img.index);
    const AttackTrace tr = attack.kind == AttackKind::igsm
                               ? igsm(*members[0], x, img.goal, attack.config)
                               : iterative_ensemble_attack(members, x, img.goal, attack.config, attack.gating);
    check_adversarial(tr.x_adv, x, attack, members, img.goal, false);
    for (const auto& st : tr.steps) {
      if (!(st.linf <= attack.config.epsilon + kBallSlack)) {
        throw InvariantViolation("iterate " + std::to_string(st.step + 1) + " left the epsilon ball");
      }
    }
    for (std::size_t k = 0; k < M; ++k) {
      bool prev = false, mono = true;
      for (std::size_t g = 0; g < G; ++g) {
        const bool ok = img.goal.achieved_by(tr.predictions_at(spec.grid[g])[k]);
        if (ok) ++result.curves[k].n_success[g];
        if (prev && !ok) mono = false;
        prev = ok;
      }
      if (mono) ++monotone[k];
    }
  }
  for (std::size_t k = 0; k < M; ++k) {
    result.curves[k].monotone_fraction = static_cast<double>(monotone[k]) / static_cast<double>(images.size());
  }
  return result;
}

}  // namespace advkit
