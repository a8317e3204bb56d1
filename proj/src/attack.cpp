#include "advkit/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "advkit/error.hpp"
#include "advkit/layers.hpp"

namespace advkit {

namespace {

void require_in_domain(const Tensor& x, PixelDomain domain) {
  for (double v : x.values()) {
    if (!(v >= domain.lo && v <= domain.hi)) {
      throw ContractError("attack input has a pixel outside [" + std::to_string(domain.lo) + ", " +
                          std::to_string(domain.hi) + "]");
    }
  }
}

void require_class(const TrainedModel& model, const AttackGoal& goal) {
  if (goal.reference_class() >= model.spec.num_classes) {
    throw ContractError("goal class " + std::to_string(goal.reference_class()) + " out of range for model '" +
                        model.name() + "'");
  }
}

void require_members(const Ensemble& models) {
  if (models.empty()) throw ContractError("ensemble has no members");
  for (const TrainedModel* m : models) {
    if (m == nullptr) throw ContractError("ensemble member is null");
  }
}

// -log(1 - p_true): small once the model no longer favours the true class.
double complement_loss(const Tensor& logits, std::size_t true_class) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (i != true_class) m = std::max(m, logits[i]);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (i != true_class) s += std::exp(logits[i] - m);
  }
  return log_sum_exp(logits) - (m + std::log(s));
}

}  // namespace

void AttackConfig::validate() const {
  if (!(domain.lo < domain.hi)) throw ConfigError("pixel domain must satisfy lo < hi");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  if (!(alpha >= 0.0 && alpha <= epsilon)) throw ConfigError("alpha must lie in [0, epsilon]");
  if (epsilon > 0.0 && alpha == 0.0) throw ConfigError("alpha must be positive when epsilon is");
  if (iterations == 0) throw ConfigError("iteration count must be at least 1");
}

void CWConfig::validate() const {
  if (!(kappa >= 0.0)) throw ConfigError("kappa must be non-negative");
  if (!(c_min > 0.0 && c_min <= c_init && c_init <= c_max && std::isfinite(c_max))) {
    throw ConfigError("C&W constants must satisfy 0 < c_min <= c_init <= c_max");
  }
  if (c_search_steps == 0 || inner_steps == 0) throw ConfigError("C&W step counts must be at least 1");
  if (!(step_size > 0.0)) throw ConfigError("C&W step size must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
}

void GatingPolicy::validate(std::size_t ensemble_size) const {
  switch (kind) {
    case Kind::always_on:
      return;
    case Kind::loss_threshold:
      if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("gating threshold tau must be positive");
      return;
    case Kind::preassigned:
      if (iters_per_model.size() != ensemble_size) {
        throw ConfigError("preassigned gating lists " + std::to_string(iters_per_model.size()) +
                          " iteration budgets for " + std::to_string(ensemble_size) + " models");
      }
      return;
  }
}

const std::vector<std::size_t>& AttackTrace::predictions_at(std::size_t n) const {
  if (n < steps.size()) return steps[n].predictions;
  if (n == steps.size()) return final_predictions;
  throw ContractError("trace has no iterate " + std::to_string(n));
}

Tensor fgsm(const TrainedModel& model, const Tensor& x, const AttackGoal& goal, double epsilon, PixelDomain domain) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("FGSM epsilon must lie in [0, 1]");
  require_class(model, goal);
  require_in_domain(x, domain);
  const LossAndGrad lg = loss_and_input_grad(model, x, goal.reference_class());
  return signed_step(x, lg.grad, goal.direction(), epsilon, x, epsilon, domain);
}

AttackTrace igsm(const TrainedModel& model, const Tensor& x, const AttackGoal& goal, const AttackConfig& config) {
  config.validate();
  require_class(model, goal);
  require_in_domain(x, config.domain);
  AttackTrace trace;
  Tensor cur = x;
  for (std::size_t n = 0; n < config.iterations; ++n) {
    const LossAndGrad lg = loss_and_input_grad(model, cur, goal.reference_class());
    cur = signed_step(cur, lg.grad, goal.direction(), config.alpha, x, config.epsilon, config.domain);
    StepRecord rec;
    rec.step = n;
    rec.losses = {lg.loss};
    rec.mask = {true};
    rec.predictions = {argmax(lg.logits)};
    rec.linf = linf_distance(cur, x);
    rec.l2 = l2_distance(cur, x);
    trace.steps.push_back(std::move(rec));
  }
  const std::size_t final_pred = predict(model, cur);
  trace.final_predictions = {final_pred};
  trace.success = {goal.achieved_by(final_pred)};
  trace.x_adv = std::move(cur);
  return trace;
}

double cw_margin(const Tensor& logits, const AttackGoal& goal, double kappa) {
  const std::size_t ref = goal.reference_class();
  if (logits.rank() != 1 || ref >= logits.size() || logits.size() < 2) {
    throw ContractError("cw_margin: reference class out of range");
  }
  double best_other = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (i != ref) best_other = std::max(best_other, logits[i]);
  }
  const double raw = goal.is_targeted() ? best_other - logits[ref] : logits[ref] - best_other;
  return std::max(raw, -kappa);
}

namespace {

// d(margin)/dZ, zero where the -kappa clamp is active.
Tensor cw_margin_grad(const Tensor& logits, const AttackGoal& goal, double kappa) {
  const std::size_t ref = goal.reference_class();
  std::size_t other = ref == 0 ? 1 : 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (i != ref && logits[i] > logits[other]) other = i;
  }
  Tensor g(logits.shape());
  const double raw = goal.is_targeted() ? logits[other] - logits[ref] : logits[ref] - logits[other];
  if (raw > -kappa) {
    const double s = goal.is_targeted() ? -1.0 : 1.0;
    g[ref] = s;
    g[other] = -s;
  }
  return g;
}

}  // namespace

CWResult cw_l2(const TrainedModel& model, const Tensor& x, const AttackGoal& goal, const CWConfig& config) {
  config.validate();
  require_class(model, goal);
  require_in_domain(x, PixelDomain{});

  CWResult result;
  result.x_adv = x;
  if (cw_margin(forward_logits(model, x), goal, config.kappa) <= 0.0) {
    result.succeeded = true;
    return result;
  }

  const std::size_t n = x.size();
  Tensor w0(x.shape());
  for (std::size_t i = 0; i < n; ++i) w0[i] = std::atanh((2.0 * x[i] - 1.0) * (1.0 - 1e-9));

  double best_l2 = std::numeric_limits<double>::infinity();
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  double c = config.c_init;

  for (std::size_t search = 0; search < config.c_search_steps; ++search) {
    Tensor w = w0;
    std::vector<double> m1(n, 0.0), m2(n, 0.0);
    double b1t = 1.0, b2t = 1.0;
    bool found = false;
    Tensor xp(x.shape());
    Tensor th(x.shape());
    for (std::size_t t = 0; t <= config.inner_steps; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        th[i] = std::tanh(w[i]);
        xp[i] = (th[i] + 1.0) / 2.0;
      }
      const ForwardCache cache = forward_pass(model.spec, model.params, xp);
      const double f = cw_margin(cache.logits, goal, config.kappa);
      if (f <= 0.0) {
        found = true;
        const double d = l2_distance(xp, x);
        if (d < best_l2) {
          best_l2 = d;
          result.x_adv = xp;
          result.delta_l2 = d;
          result.succeeded = true;
          result.c_used = c;
        }
      }
      if (t == config.inner_steps) break;

      Tensor grad_x(x.shape());
      for (std::size_t i = 0; i < n; ++i) grad_x[i] = 2.0 * (xp[i] - x[i]);
      Tensor dz = cw_margin_grad(cache.logits, goal, config.kappa);
      if (l2_norm(dz) > 0.0) {
        add_scaled(grad_x, backward_pass(model.spec, model.params, cache, dz).input_grad, c);
      }
      b1t *= config.beta1;
      b2t *= config.beta2;
      for (std::size_t i = 0; i < n; ++i) {
        const double g = grad_x[i] * (1.0 - th[i] * th[i]) / 2.0;
        m1[i] = config.beta1 * m1[i] + (1.0 - config.beta1) * g;
        m2[i] = config.beta2 * m2[i] + (1.0 - config.beta2) * g * g;
        const double mhat = m1[i] / (1.0 - b1t);
        const double vhat = m2[i] / (1.0 - b2t);
        w[i] -= config.step_size * mhat / (std::sqrt(vhat) + 1e-8);
      }
    }

    if (found) {
      upper = std::min(upper, c);
      c = (lower + upper) / 2.0;
    } else {
      lower = std::max(lower, c);
      c = std::isinf(upper) ? c * 10.0 : (lower + upper) / 2.0;
    }
    c = std::clamp(c, config.c_min, config.c_max);
  }
  return result;
}

double prob_ensemble_loss(const Ensemble& models, const Tensor& x, std::size_t cls) {
  require_members(models);
  // log(mean_k p_k) computed in log space from log p_k = z_c - lse(z).
  Tensor log_probs({models.size()});
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (cls >= models[k]->spec.num_classes) throw ContractError("class out of range for ensemble member");
    const Tensor logits = forward_logits(*models[k], x);
    log_probs[k] = logits[cls] - log_sum_exp(logits);
  }
  return -(log_sum_exp(log_probs) - std::log(static_cast<double>(models.size())));
}

EnsembleLoss loss_ensemble_loss(const Ensemble& models, const Tensor& x, std::size_t cls,
                                const std::vector<bool>& mask) {
  require_members(models);
  if (mask.size() != models.size()) throw ContractError("gating mask size does not match the ensemble");
  if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
    throw ContractError("gating mask selects no model");
  }
  const double inv_m = 1.0 / static_cast<double>(models.size());
  EnsembleLoss out;
  out.grad = Tensor(x.shape());
  for (std::size_t k = 0; k < models.size(); ++k) {
    const LossAndGrad lg = loss_and_input_grad(*models[k], x, cls);
    out.per_model.push_back(lg.loss);
    if (mask[k]) {
      out.loss += lg.loss;
      add_scaled(out.grad, lg.grad, 1.0);
    }
  }
  out.loss *= inv_m;
  for (double& g : out.grad.values()) g *= inv_m;
  return out;
}

std::vector<bool> update_gating(const std::vector<double>& losses, const GatingPolicy& policy, std::size_t step) {
  if (losses.empty()) throw ContractError("gating needs at least one model loss");
  policy.validate(losses.size());
  std::vector<bool> mask(losses.size(), true);
  switch (policy.kind) {
    case GatingPolicy::Kind::always_on:
      break;
    case GatingPolicy::Kind::loss_threshold:
      for (std::size_t k = 0; k < losses.size(); ++k) mask[k] = losses[k] >= policy.tau;
      break;
    case GatingPolicy::Kind::preassigned:
      for (std::size_t k = 0; k < losses.size(); ++k) mask[k] = step < policy.iters_per_model[k];
      break;
  }
  if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
    std::size_t top = 0;
    for (std::size_t k = 1; k < losses.size(); ++k) {
      if (losses[k] > losses[top]) top = k;
    }
    mask[top] = true;
  }
  return mask;
}

AttackTrace iterative_ensemble_attack(const Ensemble& models, const Tensor& x, const AttackGoal& goal,
                                      const AttackConfig& config, const GatingPolicy& policy) {
  require_members(models);
  config.validate();
  policy.validate(models.size());
  for (const TrainedModel* m : models) require_class(*m, goal);
  require_in_domain(x, config.domain);

  const std::size_t count = models.size();
  const double inv_m = 1.0 / static_cast<double>(count);
  const std::size_t cls = goal.reference_class();

  AttackTrace trace;
  Tensor cur = x;
  std::vector<ForwardCache> caches(count);
  std::vector<Tensor> logit_grads(count);
  for (std::size_t n = 0; n < config.iterations; ++n) {
    StepRecord rec;
    rec.step = n;
    std::vector<double> gate_losses(count);
    for (std::size_t k = 0; k < count; ++k) {
      caches[k] = forward_pass(models[k]->spec, models[k]->params, cur);
      const SoftmaxCrossEntropy ce = softmax_cross_entropy(caches[k].logits, cls);
      rec.losses.push_back(ce.loss);
      rec.predictions.push_back(argmax(caches[k].logits));
      gate_losses[k] = goal.is_targeted() ? ce.loss : complement_loss(caches[k].logits, cls);
      logit_grads[k] = ce.logit_grad;
    }
    rec.mask = update_gating(gate_losses, policy, n);

    Tensor grad(x.shape());
    for (std::size_t k = 0; k < count; ++k) {
      if (!rec.mask[k]) continue;
      add_scaled(grad, backward_pass(models[k]->spec, models[k]->params, caches[k], logit_grads[k]).input_grad, 1.0);
    }
    for (double& g : grad.values()) g *= inv_m;

    cur = signed_step(cur, grad, goal.direction(), config.alpha, x, config.epsilon, config.domain);
    rec.linf = linf_distance(cur, x);
    rec.l2 = l2_distance(cur, x);
    trace.steps.push_back(std::move(rec));
  }
  for (const TrainedModel* m : models) {
    const std::size_t pred = predict(*m, cur);
    trace.final_predictions.push_back(pred);
    trace.success.push_back(goal.achieved_by(pred));
  }
  trace.x_adv = std::move(cur);
  return trace;
}

}  // namespace advkit
