#pragma once

#include <cstddef>
#include <vector>

#include "advkit/model.hpp"
#include "advkit/perturbation.hpp"
#include "advkit/tensor.hpp"

namespace advkit {

/// Targeted attacks push the prediction to `target`; untargeted attacks push
/// it away from `true_class`. The mode fixes the sign of every update:
/// targeted descends J(X, y_t), untargeted ascends J(X, y_true).
class AttackGoal {
 public:
  static AttackGoal targeted(std::size_t target) { return AttackGoal(true, target); }
  static AttackGoal untargeted(std::size_t true_class) { return AttackGoal(false, true_class); }

  bool is_targeted() const noexcept { return targeted_; }
  /// y_t for targeted goals, y_true for untargeted ones.
  std::size_t reference_class() const noexcept { return cls_; }
  /// -1 for targeted (descent), +1 for untargeted (ascent).
  double direction() const noexcept { return targeted_ ? -1.0 : 1.0; }

  /// Whether `predicted` satisfies the goal.
  bool achieved_by(std::size_t predicted) const noexcept {
    return targeted_ ? predicted == cls_ : predicted != cls_;
  }

  bool operator==(const AttackGoal&) const = default;

 private:
  AttackGoal(bool targeted, std::size_t cls) : targeted_(targeted), cls_(cls) {}
  bool targeted_;
  std::size_t cls_;
};

/// l-infinity budget, step size and iteration count of the gradient-sign
/// attacks. epsilon == 0 (with alpha == 0) is accepted as the degenerate
/// budget and leaves inputs unchanged.
struct AttackConfig {
  double epsilon = 0.1;
  double alpha = 0.01;
  std::size_t iterations = 20;
  PixelDomain domain{};

  void validate() const;
};

struct CWConfig {
  double kappa = 0.0;
  double c_init = 0.01;
  double c_min = 1e-4;
  double c_max = 1e2;
  std::size_t c_search_steps = 6;
  std::size_t inner_steps = 500;
  double step_size = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;

  void validate() const;
};

struct GatingPolicy {
  enum class Kind { always_on, loss_threshold, preassigned };

  Kind kind = Kind::always_on;
  double tau = 0.01;                         // loss_threshold
  std::vector<std::size_t> iters_per_model;  // preassigned: N_k per member

  static GatingPolicy always_on() { return {}; }
  static GatingPolicy loss_threshold(double tau) { return {Kind::loss_threshold, tau, {}}; }
  static GatingPolicy preassigned(std::vector<std::size_t> iters) {
    return {Kind::preassigned, 0.0, std::move(iters)};
  }

  void validate(std::size_t ensemble_size) const;
};

/// One executed step n of an iterative attack.
struct StepRecord {
  std::size_t step = 0;
  std::vector<double> losses;             // J_k(X_n, reference class), every member
  std::vector<bool> mask;                 // delta_nk used for the update
  std::vector<std::size_t> predictions;   // argmax Z_k(X_n), every member
  double linf = 0.0;                      // ||X_{n+1} - X||_inf
  double l2 = 0.0;                        // ||X_{n+1} - X||_2
};

struct AttackTrace {
  Tensor x_adv;
  std::vector<StepRecord> steps;
  std::vector<std::size_t> final_predictions;  // per member at x_adv
  std::vector<bool> success;                   // per member at x_adv

  /// Member predictions at iterate n, for 0 <= n <= steps.size().
  const std::vector<std::size_t>& predictions_at(std::size_t n) const;
};

/// X -/+ epsilon * sign(dJ/dX), projected onto the epsilon ball and pixel domain.
Tensor fgsm(const TrainedModel& model, const Tensor& x, const AttackGoal& goal, double epsilon,
            PixelDomain domain = {});

/// Iterated FGSM with step alpha, projecting after every step.
AttackTrace igsm(const TrainedModel& model, const Tensor& x, const AttackGoal& goal, const AttackConfig& config);

/// Logit margin. Untargeted (reference = true class):
///   max(Z_true - max_{i != true} Z_i, -kappa).
/// Targeted (reference = target):
///   max(max_{i != t} Z_i - Z_t, -kappa).
/// The goal is met exactly when the margin is <= 0.
double cw_margin(const Tensor& logits, const AttackGoal& goal, double kappa);

struct CWResult {
  Tensor x_adv;
  double delta_l2 = 0.0;
  bool succeeded = false;
  double c_used = 0.0;
};

/// Carlini-Wagner l2 attack: minimises ||delta||_2^2 + c * margin over
/// x + delta = (tanh(w) + 1) / 2 with Adam steps on w, binary-searching c for
/// the smallest constant that reaches margin <= 0. Returns the feasible
/// point with the smallest ||delta||_2 seen, or x itself with
/// succeeded == false.
CWResult cw_l2(const TrainedModel& model, const Tensor& x, const AttackGoal& goal, const CWConfig& config);

/// -log(mean_k p_k(c | X)). Verification oracle only.
double prob_ensemble_loss(const Ensemble& models, const Tensor& x, std::size_t cls);

struct EnsembleLoss {
  double loss = 0.0;                // (1/M) sum_k mask_k J_k
  std::vector<double> per_model;    // J_k for every member
  Tensor grad;                      // (1/M) sum_k mask_k dJ_k/dX
};

EnsembleLoss loss_ensemble_loss(const Ensemble& models, const Tensor& x, std::size_t cls,
                                const std::vector<bool>& mask);

/// Inclusion mask for step `step`. loss_threshold keeps members with loss
/// >= tau (recomputed each step, so members can re-enter); preassigned keeps
/// members with step < N_k. If no member survives, the highest-loss member
/// (lowest index on ties) stays active.
std::vector<bool> update_gating(const std::vector<double>& losses, const GatingPolicy& policy, std::size_t step);

/// Gated iterative loss-ensemble attack:
///   X_{n+1} = Clip(X_n -/+ alpha * sign((1/M) sum_k delta_nk dJ_k(X_n)/dX)).
/// Gating reads the per-member targeted loss J_k(X_n, y_t); for untargeted
/// goals it reads -log(1 - p_k(y_true | X_n)), which is likewise small once
/// member k is fooled.
AttackTrace iterative_ensemble_attack(const Ensemble& models, const Tensor& x, const AttackGoal& goal,
                                      const AttackConfig& config, const GatingPolicy& policy);

}  // namespace advkit
