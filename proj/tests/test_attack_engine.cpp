#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "advkit/attack.hpp"
#include "advkit/error.hpp"
#include "advkit/grad_check.hpp"
#include "advkit/training.hpp"
#include "advkit/zoo.hpp"
#include "support/test_util.hpp"

using namespace advkit;
using advkit::testing::random_model;
using advkit::testing::random_tensor;
using advkit::testing::relu_kink_margin;

namespace {

// Logits z = W x + b over a 1x1x2 image.
TrainedModel linear2(double w00, double w01, double w10, double w11, double b0, double b1) {
  TrainedModel m;
  m.spec = mlp_spec({1, 1, 2}, {}, 2);
  m.params = {Tensor({2, 2}, {w00, w01, w10, w11}), Tensor({2}, {b0, b1})};
  m.meta.name = "linear2";
  return m;
}

Dataset blobs_2d(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Tensor> images;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = i % 2;
    const double c = y == 0 ? 0.3 : 0.7;
    images.push_back(Tensor({1, 1, 2}, {std::clamp(c + 0.1 * rng.normal(), 0.0, 1.0),
                                        std::clamp(1.0 - c + 0.1 * rng.normal(), 0.0, 1.0)}));
    labels.push_back(y);
  }
  return make_dataset(images, labels, 2, Split::train);
}

const ModelSpec& small_cnn() {
  static const ModelSpec spec = cnn_spec({1, 6, 6}, {3}, 3, 4);
  return spec;
}

void expect_in_ball(const Tensor& adv, const Tensor& x, double eps) {
  EXPECT_LE(linf_distance(adv, x), eps + 1e-12);
  for (double v : adv.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

}  // namespace

// ---- sign / clip ---------------------------------------------------------

TEST(Sign, Examples) {
  EXPECT_TRUE(bit_equal(sign(Tensor({3}, {-0.3, 0.0, 5.0})), Tensor({3}, {-1, 0, 1})));
  EXPECT_EQ(sign(Tensor({1}, {-0.0}))[0], 0.0);
}

TEST(Sign, ScaleAndNegationSymmetry) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor t = random_tensor(rng, {10});
    t[0] = 0.0;
    Tensor scaled = t, negated = t;
    for (double& v : scaled.values()) v *= 3.7;
    for (double& v : negated.values()) v = -v;
    const Tensor s = sign(t);
    EXPECT_TRUE(bit_equal(sign(scaled), s));
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(sign(negated)[i], -s[i]);
  }
}

TEST(ClipToBall, Examples) {
  const Tensor x({2}, {0.5, 0.05});
  const Tensor c = clip_to_ball(Tensor({2}, {0.35, -0.2}), x, 0.1);
  EXPECT_DOUBLE_EQ(c[0], 0.4);
  EXPECT_EQ(c[1], 0.0);
  EXPECT_THROW(clip_to_ball(Tensor({3}), x, 0.1), DimensionError);
  EXPECT_THROW(clip_to_ball(x, x, -0.1), ConfigError);
}

TEST(ClipToBall, IdempotentAndBounded) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor x = random_tensor(rng, {20}, 0, 1);
    const Tensor p = random_tensor(rng, {20}, -0.5, 1.5);
    const double eps = rng.uniform(0, 0.3);
    const Tensor c = clip_to_ball(p, x, eps);
    EXPECT_TRUE(bit_equal(clip_to_ball(c, x, eps), c));
    expect_in_ball(c, x, eps);
  }
}

// ---- configs -------------------------------------------------------------

TEST(AttackConfig, Validation) {
  EXPECT_NO_THROW((AttackConfig{0.1, 0.01, 20, {}}.validate()));
  EXPECT_NO_THROW((AttackConfig{0.0, 0.0, 1, {}}.validate()));
  EXPECT_THROW((AttackConfig{0.1, 0.2, 20, {}}.validate()), ConfigError);
  EXPECT_THROW((AttackConfig{0.1, 0.0, 20, {}}.validate()), ConfigError);
  EXPECT_THROW((AttackConfig{1.5, 0.1, 20, {}}.validate()), ConfigError);
  EXPECT_THROW((AttackConfig{0.1, 0.01, 0, {}}.validate()), ConfigError);
  CWConfig cw;
  EXPECT_NO_THROW(cw.validate());
  cw.c_init = 1e3;
  EXPECT_THROW(cw.validate(), ConfigError);
  EXPECT_THROW(GatingPolicy::preassigned({1, 2}).validate(3), ConfigError);
  EXPECT_THROW(GatingPolicy::loss_threshold(0.0).validate(2), ConfigError);
}

// ---- fgsm ----------------------------------------------------------------

TEST(Fgsm, ZeroEpsilonIsIdentity) {
  const TrainedModel m = random_model(small_cnn(), 1);
  Rng rng(2);
  const Tensor x = random_tensor(rng, {1, 6, 6}, 0, 1);
  EXPECT_TRUE(bit_equal(fgsm(m, x, AttackGoal::targeted(2), 0.0), x));
  EXPECT_THROW(fgsm(m, x, AttackGoal::targeted(2), -0.1), ConfigError);
}

TEST(Fgsm, OnePixelArithmetic) {
  // dJ(x, 0)/dx = (p0 - 1)(w0 - w1), positive because w0 < w1.
  TrainedModel m;
  m.spec = mlp_spec({1, 1, 1}, {}, 2);
  m.params = {Tensor({2, 1}, {-1.0, 1.0}), Tensor({2})};
  const Tensor x({1, 1, 1}, {0.5});
  const auto g = loss_and_input_grad(m, x, 0);
  ASSERT_GT(g.grad[0], 0.0);
  EXPECT_DOUBLE_EQ(fgsm(m, x, AttackGoal::targeted(0), 0.1)[0], 0.4);
  EXPECT_DOUBLE_EQ(fgsm(m, x, AttackGoal::untargeted(0), 0.1)[0], 0.6);
}

TEST(Fgsm, BestOfAllSignPatternsOnLogisticModel) {
  Rng rng(11);
  const double eps = 0.1;
  for (int trial = 0; trial < 100; ++trial) {
    const TrainedModel m = linear2(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3),
                                   rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Tensor x = random_tensor(rng, {1, 1, 2}, 0.1, 0.9);
    const std::size_t t = rng.index(2);
    const Tensor adv = fgsm(m, x, AttackGoal::targeted(t), eps);
    double best = std::numeric_limits<double>::infinity();
    for (int s0 = -1; s0 <= 1; ++s0)
      for (int s1 = -1; s1 <= 1; ++s1) {
        const Tensor cand({1, 1, 2}, {x[0] + eps * s0, x[1] + eps * s1});
        best = std::min(best, loss_and_input_grad(m, cand, t).loss);
      }
    EXPECT_LE(loss_and_input_grad(m, adv, t).loss, best * (1 + 1e-12)) << "trial " << trial;
  }
}

// ---- igsm ----------------------------------------------------------------

TEST(Igsm, SingleFullStepEqualsFgsm) {
  Rng rng(4);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const TrainedModel m = random_model(small_cnn(), seed);
    const Tensor x = random_tensor(rng, {1, 6, 6}, 0, 1);
    const AttackGoal goal = seed % 2 ? AttackGoal::targeted(rng.index(4)) : AttackGoal::untargeted(rng.index(4));
    const AttackTrace tr = igsm(m, x, goal, {0.1, 0.1, 1, {}});
    EXPECT_TRUE(bit_equal(tr.x_adv, fgsm(m, x, goal, 0.1)));
    EXPECT_EQ(tr.steps.size(), 1u);
  }
}

TEST(Igsm, IteratesStayInBallAndTraceIsConsistent) {
  Rng rng(6);
  const TrainedModel m = random_model(small_cnn(), 3);
  const Tensor x = random_tensor(rng, {1, 6, 6}, 0, 1);
  const AttackTrace tr = igsm(m, x, AttackGoal::targeted(1), {0.05, 0.01, 12, {}});
  ASSERT_EQ(tr.steps.size(), 12u);
  double prev = 0.0;
  for (std::size_t n = 0; n < tr.steps.size(); ++n) {
    EXPECT_EQ(tr.steps[n].step, n);
    EXPECT_LE(tr.steps[n].linf, 0.05 + 1e-12);
    EXPECT_LE(tr.steps[n].linf, prev + 0.01 + 1e-12);
    prev = tr.steps[n].linf;
  }
  expect_in_ball(tr.x_adv, x, 0.05);
  EXPECT_EQ(tr.final_predictions[0], predict(m, tr.x_adv));
  EXPECT_EQ(tr.predictions_at(0)[0], predict(m, x));
  EXPECT_EQ(tr.predictions_at(12), tr.final_predictions);
  EXPECT_THROW(tr.predictions_at(13), ContractError);
}

TEST(Igsm, TargetedLossIsMonotoneOnTrainedLogisticModel) {
  const Dataset data = blobs_2d(200, 3);
  const TrainedModel m = train("logistic", mlp_spec({1, 1, 2}, {}, 2), data, {0.5, 20, 16, 1});
  ASSERT_GE(accuracy(m, data), 0.9);
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor x = random_tensor(rng, {1, 1, 2}, 0, 1);
    const std::size_t t = 1 - predict(m, x);
    const AttackTrace tr = igsm(m, x, AttackGoal::targeted(t), {0.2, 0.01, 40, {}});
    for (std::size_t n = 1; n < tr.steps.size(); ++n) EXPECT_LE(tr.steps[n].losses[0], tr.steps[n - 1].losses[0]);
  }
}

TEST(Igsm, Deterministic) {
  Rng rng(1);
  const TrainedModel m = random_model(small_cnn(), 9);
  const Tensor x = random_tensor(rng, {1, 6, 6}, 0, 1);
  const AttackTrace a = igsm(m, x, AttackGoal::targeted(3), {});
  const AttackTrace b = igsm(m, x, AttackGoal::targeted(3), {});
  EXPECT_TRUE(bit_equal(a.x_adv, b.x_adv));
}

TEST(Igsm, RejectsOutOfDomainInputAndBadClass) {
  const TrainedModel m = random_model(small_cnn(), 9);
  Tensor x({1, 6, 6});
  EXPECT_THROW(igsm(m, x, AttackGoal::targeted(4), {}), ContractError);
  x[0] = 1.5;
  EXPECT_THROW(igsm(m, x, AttackGoal::targeted(1), {}), ContractError);
}

// ---- C&W -----------------------------------------------------------------

TEST(CwMargin, Examples) {
  EXPECT_EQ(cw_margin(Tensor({2}, {3, 1}), AttackGoal::untargeted(0), 0.0), 2.0);
  EXPECT_EQ(cw_margin(Tensor({2}, {1, 3}), AttackGoal::untargeted(0), 0.0), 0.0);
  EXPECT_EQ(cw_margin(Tensor({2}, {1, 3}), AttackGoal::untargeted(0), 5.0), -2.0);
  EXPECT_EQ(cw_margin(Tensor({3}, {1, 3, 2}), AttackGoal::targeted(0), 0.0), 2.0);
  EXPECT_EQ(cw_margin(Tensor({3}, {4, 3, 2}), AttackGoal::targeted(0), 10.0), -1.0);
}

TEST(CwL2, AlreadyMisclassifiedNeedsNoPerturbation) {
  const TrainedModel m = linear2(1, 0, 0, 1, 0, 0);
  const Tensor x({1, 1, 2}, {0.2, 0.8});  // predicts class 1
  const CWResult r = cw_l2(m, x, AttackGoal::untargeted(0), {});
  EXPECT_TRUE(r.succeeded);
  EXPECT_EQ(r.delta_l2, 0.0);
  EXPECT_TRUE(bit_equal(r.x_adv, x));
}

TEST(CwL2, MatchesDistanceToHyperplane) {
  const TrainedModel m = train("linear", mlp_spec({1, 1, 2}, {}, 2), blobs_2d(200, 4), {0.5, 20, 16, 2});
  const auto w = m.params[0].values();
  const auto b = m.params[1].values();
  const double wd0 = w[0] - w[2], wd1 = w[1] - w[3], bd = b[0] - b[1];
  const double wn = std::hypot(wd0, wd1);
  Rng rng(12);
  std::size_t checked = 0;
  while (checked < 50) {
    const Tensor x = random_tensor(rng, {1, 1, 2}, 0.05, 0.95);
    const double g = wd0 * x[0] + wd1 * x[1] + bd;
    const double dist = std::abs(g) / wn;
    // Keep points whose foot of perpendicular is well inside the box, so
    // the box constraint does not bind.
    const double s = g > 0 ? -1.0 : 1.0;
    const double f0 = x[0] + s * dist * wd0 / wn, f1 = x[1] + s * dist * wd1 / wn;
    if (dist < 0.1 || f0 < 0.05 || f0 > 0.95 || f1 < 0.05 || f1 > 0.95) continue;
    const std::size_t y = predict(m, x);
    const CWResult r = cw_l2(m, x, AttackGoal::untargeted(y), {});
    ASSERT_TRUE(r.succeeded);
    EXPECT_NEAR(r.delta_l2, dist, 0.05 * dist);
    EXPECT_LE(cw_margin(forward_logits(m, r.x_adv), AttackGoal::untargeted(y), 0.0), 0.0);
    for (double v : r.x_adv.values()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    ++checked;
  }
}

TEST(CwL2, UnreachableTargetReportsFailure) {
  // Class 1 can never win: its logit is 10 below class 0 everywhere in the box.
  const TrainedModel m = linear2(0, 0, 0, 0, 10, 0);
  const Tensor x({1, 1, 2}, {0.5, 0.5});
  CWConfig cfg;
  cfg.inner_steps = 50;
  const CWResult r = cw_l2(m, x, AttackGoal::targeted(1), cfg);
  EXPECT_FALSE(r.succeeded);
  EXPECT_EQ(r.delta_l2, 0.0);
  EXPECT_TRUE(bit_equal(r.x_adv, x));
}

// ---- ensemble losses -----------------------------------------------------

TEST(ProbEnsembleLoss, SingleModelAndIdenticalMembers) {
  Rng rng(2);
  const TrainedModel m = random_model(small_cnn(), 4);
  const Tensor x = random_tensor(rng, {1, 6, 6}, 0, 1);
  const double j = loss_and_input_grad(m, x, 2).loss;
  EXPECT_NEAR(prob_ensemble_loss({&m}, x, 2), j, 1e-12);
  EXPECT_NEAR(prob_ensemble_loss({&m, &m}, x, 2), j, 1e-12);
}

TEST(ProbEnsembleLoss, JensenBound) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t M = 2 + rng.index(4);
    std::vector<TrainedModel> members;
    for (std::size_t k = 0; k < M; ++k) members.push_back(random_model(small_cnn(), rng.next()));
    Ensemble e;
    for (const auto& m : members) e.push_back(&m);
    const Tensor x = random_tensor(rng, {1, 6, 6}, 0, 1);
    const std::size_t c = rng.index(4);
    const double jp = prob_ensemble_loss(e, x, c);
    const double jl = loss_ensemble_loss(e, x, c, std::vector<bool>(M, true)).loss;
    EXPECT_LE(jp, jl + 1e-12);
  }
}

TEST(LossEnsembleLoss, MaskSelectsOneModel) {
  Rng rng(3);
  const TrainedModel a = random_model(small_cnn(), 1), b = random_model(small_cnn(), 2);
  const Tensor x = random_tensor(rng, {1, 6, 6}, 0, 1);
  const EnsembleLoss r = loss_ensemble_loss({&a, &b}, x, 1, {false, true});
  const auto single = loss_and_input_grad(b, x, 1);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(r.grad[i], 0.5 * single.grad[i]);
  EXPECT_DOUBLE_EQ(r.loss, 0.5 * single.loss);
  EXPECT_EQ(r.per_model.size(), 2u);
  EXPECT_EQ(r.per_model[0], loss_and_input_grad(a, x, 1).loss);
}

TEST(LossEnsembleLoss, GradientMatchesFiniteDifferences) {
  Rng rng(4);
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; checked < 20; ++seed) {
    const TrainedModel a = random_model(small_cnn(), seed), b = random_model(mlp_spec({1, 6, 6}, {8}, 4), seed + 50);
    const Tensor x = random_tensor(rng, {1, 6, 6}, 0, 1);
    if (relu_kink_margin(a, x) < 1e-4 || relu_kink_margin(b, x) < 1e-4) continue;
    const std::vector<bool> mask = {true, seed % 3 != 0};
    const EnsembleLoss r = loss_ensemble_loss({&a, &b}, x, 3, mask);
    const double err = grad_check([&](const Tensor& t) { return loss_ensemble_loss({&a, &b}, t, 3, mask).loss; }, x, r.grad);
    EXPECT_LT(err, 1e-6);
    ++checked;
  }
}

TEST(LossEnsembleLoss, MaskErrors) {
  const TrainedModel a = random_model(small_cnn(), 1);
  const Tensor x({1, 6, 6});
  EXPECT_THROW(loss_ensemble_loss({&a}, x, 0, {false}), ContractError);
  EXPECT_THROW(loss_ensemble_loss({&a}, x, 0, {true, true}), ContractError);
}

// ---- gating --------------------------------------------------------------

TEST(Gating, Examples) {
  EXPECT_EQ(update_gating({0.5, 0.001}, GatingPolicy::loss_threshold(0.01), 0), (std::vector<bool>{true, false}));
  EXPECT_EQ(update_gating({0.001, 0.005, 0.005}, GatingPolicy::loss_threshold(0.01), 3),
            (std::vector<bool>{false, true, false}));
  EXPECT_EQ(update_gating({0.0, 0.0}, GatingPolicy::always_on(), 7), (std::vector<bool>{true, true}));
  const GatingPolicy pre = GatingPolicy::preassigned({2, 5});
  EXPECT_EQ(update_gating({1, 1}, pre, 1), (std::vector<bool>{true, true}));
  EXPECT_EQ(update_gating({1, 1}, pre, 3), (std::vector<bool>{false, true}));
  EXPECT_EQ(update_gating({1, 3}, pre, 9), (std::vector<bool>{false, true}));
}

// ---- iterative ensemble attack --------------------------------------------

TEST(EnsembleAttack, SingleMemberReducesToIgsm) {
  Rng rng(7);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TrainedModel m = random_model(small_cnn(), seed);
    const Tensor x = random_tensor(rng, {1, 6, 6}, 0, 1);
    const AttackGoal goal = seed % 2 ? AttackGoal::targeted(rng.index(4)) : AttackGoal::untargeted(rng.index(4));
    const AttackConfig cfg{0.1, 0.01, 15, {}};
    const AttackTrace a = igsm(m, x, goal, cfg);
    const AttackTrace b = iterative_ensemble_attack({&m}, x, goal, cfg, GatingPolicy::always_on());
    EXPECT_TRUE(bit_equal(a.x_adv, b.x_adv));
    ASSERT_EQ(a.steps.size(), b.steps.size());
    for (std::size_t n = 0; n < a.steps.size(); ++n) {
      EXPECT_EQ(a.steps[n].predictions, b.steps[n].predictions);
      EXPECT_EQ(a.steps[n].linf, b.steps[n].linf);
    }
  }
}

TEST(EnsembleAttack, ReplicatedMembersLeaveIteratesUnchanged) {
  // Summing M copies of one gradient scales it by a positive constant, so
  // every sign step and iterate must match the single-model run.
  Rng rng(8);
  const TrainedModel m = random_model(small_cnn(), 5);
  const Tensor x = random_tensor(rng, {1, 6, 6}, 0, 1);
  const AttackConfig cfg{0.1, 0.01, 20, {}};
  const AttackTrace one = iterative_ensemble_attack({&m}, x, AttackGoal::targeted(2), cfg, GatingPolicy::always_on());
  const AttackTrace three =
      iterative_ensemble_attack({&m, &m, &m}, x, AttackGoal::targeted(2), cfg, GatingPolicy::always_on());
  EXPECT_TRUE(bit_equal(one.x_adv, three.x_adv));
}

TEST(EnsembleAttack, InvariantsAndNonEmptyMasks) {
  Rng rng(9);
  std::vector<TrainedModel> members;
  for (std::uint64_t s = 0; s < 4; ++s) members.push_back(random_model(s % 2 ? small_cnn() : mlp_spec({1, 6, 6}, {8}, 4), s));
  Ensemble e;
  for (const auto& m : members) e.push_back(&m);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor x = random_tensor(rng, {1, 6, 6}, 0, 1);
    const GatingPolicy pol = trial % 2 ? GatingPolicy::loss_threshold(0.5) : GatingPolicy::preassigned({1, 3, 5, 7});
    const AttackTrace tr = iterative_ensemble_attack(e, x, AttackGoal::targeted(rng.index(4)), {0.1, 0.02, 10, {}}, pol);
    expect_in_ball(tr.x_adv, x, 0.1);
    for (const auto& st : tr.steps) {
      EXPECT_EQ(st.mask.size(), 4u);
      EXPECT_TRUE(std::any_of(st.mask.begin(), st.mask.end(), [](bool b) { return b; }));
      EXPECT_EQ(st.losses.size(), 4u);
    }
  }
}

TEST(EnsembleAttack, TargetedSuccessImpliesUntargetedSuccess) {
  Rng rng(10);
  const TrainedModel m = random_model(small_cnn(), 8);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = random_tensor(rng, {1, 6, 6}, 0, 1);
    const std::size_t y = predict(m, x);
    const std::size_t t = (y + 1 + rng.index(3)) % 4;
    const AttackTrace tr = iterative_ensemble_attack({&m}, x, AttackGoal::targeted(t), {0.3, 0.03, 20, {}},
                                                     GatingPolicy::always_on());
    if (tr.success[0]) {
      EXPECT_TRUE(AttackGoal::untargeted(y).achieved_by(tr.final_predictions[0]));
    }
  }
}
