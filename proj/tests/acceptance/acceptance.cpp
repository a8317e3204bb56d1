// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Tolerances are fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "advkit/attack.hpp"
#include "advkit/cli.hpp"
#include "advkit/dataset.hpp"
#include "advkit/eval.hpp"
#include "advkit/grad_check.hpp"
#include "advkit/io.hpp"
#include "advkit/json_text.hpp"
#include "advkit/layers.hpp"
#include "advkit/model.hpp"
#include "advkit/training.hpp"
#include "advkit/zoo.hpp"
#include "support/test_util.hpp"

using namespace advkit;
using advkit::testing::random_model;
using advkit::testing::random_tensor;
using advkit::testing::relu_kink_margin;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kGlobalSeed = 2018;
constexpr double kGradTol = 1e-6;
constexpr std::size_t kGradSeeds = 50;
constexpr double kJensenSlack = 1e-12;
constexpr std::size_t kJensenTriples = 1000;
constexpr std::size_t kReductionImages = 100;
constexpr double kBallSlack = 1e-12;
constexpr std::size_t kIgsmImages = 200;
constexpr double kCwRelTol = 0.05;
constexpr std::size_t kCwPoints = 50;
constexpr double kSweepThreshold = 0.9;
constexpr std::size_t kSweepImages = 100;
constexpr std::size_t kTransferImages = 100;
constexpr double kZooMinAccuracy = 0.85;

struct Verdict {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void report(const std::string& label, const Verdict& v) {
  std::printf("[%s] %s: %s\n", v.pass ? "PASS" : "FAIL", label.c_str(), v.detail.c_str());
  std::fflush(stdout);
  if (!v.pass) ++g_failures;
}

Verdict guarded(const std::function<Verdict()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

std::string fmt(const char* pattern, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, value);
  return buf;
}

// Running count of ball/domain checks over every attack output produced here.
struct Audit {
  std::size_t outputs = 0;
  std::size_t domain_violations = 0;
  std::size_t linf_violations = 0;

  void check(const Tensor& x_adv, const Tensor& x, double epsilon) {
    ++outputs;
    bool in_domain = true;
    for (double v : x_adv.values()) in_domain = in_domain && v >= 0.0 && v <= 1.0;
    if (!in_domain) ++domain_violations;
    if (!(linf_distance(x_adv, x) <= epsilon + kBallSlack)) ++linf_violations;
  }
};

Audit g_audit;

struct World {
  DatasetBundle data;
  Zoo zoo;
  const Dataset& test() const { return data.split(Split::test); }
};

// ---- criterion 1 ---------------------------------------------------------

double layer_errors(Rng& rng) {
  double worst = 0.0;
  // Dense: scalar f = sum(u * out), so df/din = W^T u.
  {
    const Tensor in = random_tensor(rng, {7});
    const Tensor w = random_tensor(rng, {5, 7});
    const Tensor b = random_tensor(rng, {5});
    const Tensor u = random_tensor(rng, {5});
    auto dot = [&](const Tensor& t) {
      double s = 0.0;
      for (std::size_t i = 0; i < t.size(); ++i) s += t[i] * u[i];
      return s;
    };
    const LayerGrads g = dense_backward(in, w, u, ParamGrads::compute);
    worst = std::max(worst, grad_check([&](const Tensor& t) { return dot(dense_forward(t, w, b)); }, in, g.input_grad));
    worst = std::max(worst, grad_check([&](const Tensor& t) { return dot(dense_forward(in, t, b)); }, w, g.param_grads[0]));
    worst = std::max(worst, grad_check([&](const Tensor& t) { return dot(dense_forward(in, w, t)); }, b, g.param_grads[1]));
  }
  // Conv2d.
  {
    const Tensor in = random_tensor(rng, {2, 6, 6});
    const Tensor k = random_tensor(rng, {3, 2, 3, 3});
    const Tensor b = random_tensor(rng, {3});
    const Tensor u = random_tensor(rng, {3, 4, 4});
    auto dot = [&](const Tensor& t) {
      double s = 0.0;
      for (std::size_t i = 0; i < t.size(); ++i) s += t[i] * u[i];
      return s;
    };
    const LayerGrads g = conv2d_backward(in, k, u, ParamGrads::compute);
    worst = std::max(worst, grad_check([&](const Tensor& t) { return dot(conv2d_forward(t, k, b)); }, in, g.input_grad));
    worst = std::max(worst, grad_check([&](const Tensor& t) { return dot(conv2d_forward(in, t, b)); }, k, g.param_grads[0]));
    worst = std::max(worst, grad_check([&](const Tensor& t) { return dot(conv2d_forward(in, k, t)); }, b, g.param_grads[1]));
  }
  // ReLU, away from the kink.
  {
    Tensor in = random_tensor(rng, {11});
    for (double& v : in.values()) v = v < 0 ? v - 0.01 : v + 0.01;
    const Tensor u = random_tensor(rng, {11});
    auto f = [&](const Tensor& t) {
      const Tensor out = relu_forward(t);
      double s = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * u[i];
      return s;
    };
    worst = std::max(worst, grad_check(f, in, relu_backward(in, u)));
  }
  // Softmax cross-entropy.
  {
    const Tensor z = random_tensor(rng, {6}, -4.0, 4.0);
    const std::size_t c = rng.index(6);
    const SoftmaxCrossEntropy s = softmax_cross_entropy(z, c);
    worst = std::max(worst, grad_check([&](const Tensor& t) { return softmax_cross_entropy(t, c).loss; }, z, s.logit_grad));
  }
  return worst;
}

Verdict gradient_fidelity() {
  Rng rng(derive_seed(kGlobalSeed, 1));
  double worst_layer = 0.0;
  for (std::size_t s = 0; s < kGradSeeds; ++s) worst_layer = std::max(worst_layer, layer_errors(rng));

  double worst_model = 0.0;
  std::size_t archs = 0, rejected = 0;
  for (const ZooEntry& entry : default_zoo({1, 16, 16}, 10)) {
    ++archs;
    std::size_t accepted = 0;
    for (std::uint64_t seed = 0; accepted < kGradSeeds; ++seed) {
      const TrainedModel m = random_model(entry.spec, derive_seed(seed, archs));
      const Tensor x = random_tensor(rng, {1, 16, 16}, 0.0, 1.0);
      // Probes of size h must not cross a ReLU boundary.
      if (relu_kink_margin(m, x) < 1e-4) {
        ++rejected;
        continue;
      }
      const std::size_t cls = rng.index(10);
      const LossAndGrad lg = loss_and_input_grad(m, x, cls);
      worst_model = std::max(
          worst_model, grad_check([&](const Tensor& t) { return loss_and_input_grad(m, t, cls).loss; }, x, lg.grad));
      ++accepted;
    }
  }
  const double worst = std::max(worst_layer, worst_model);
  std::ostringstream os;
  os << "max rel err layers " << fmt("%.2e", worst_layer) << ", models " << fmt("%.2e", worst_model) << " (tol "
     << fmt("%.0e", kGradTol) << ") over " << kGradSeeds << " seeds x {dense, conv2d, relu, softmax_ce} and "
     << kGradSeeds << " seeds x " << archs << " zoo architectures; " << rejected << " near-kink draws skipped";
  return {worst < kGradTol, os.str()};
}

// ---- criterion 2 ---------------------------------------------------------

Verdict jensen() {
  Rng rng(derive_seed(kGlobalSeed, 2));
  const ModelSpec spec = cnn_spec({1, 6, 6}, {3}, 3, 5);
  double worst_gap = -1e300, worst_identical = 0.0;
  std::size_t violations = 0;
  for (std::size_t t = 0; t < kJensenTriples; ++t) {
    const std::size_t M = 2 + rng.index(5);
    std::vector<TrainedModel> members;
    for (std::size_t k = 0; k < M; ++k) {
      TrainedModel m = random_model(spec, rng.next());
      // Scale the logit layer so some members are confident.
      const double scale = rng.uniform(0.5, 6.0);
      for (double& v : m.params[m.params.size() - 2].values()) v *= scale;
      members.push_back(std::move(m));
    }
    Ensemble e;
    for (const auto& m : members) e.push_back(&m);
    const Tensor x = random_tensor(rng, {1, 6, 6}, 0.0, 1.0);
    const std::size_t cls = rng.index(5);
    const double jp = prob_ensemble_loss(e, x, cls);
    const double jl = loss_ensemble_loss(e, x, cls, std::vector<bool>(M, true)).loss;
    worst_gap = std::max(worst_gap, jp - jl);
    if (!(jp <= jl + kJensenSlack)) ++violations;

    const Ensemble same(M, &members[0]);
    const double sp = prob_ensemble_loss(same, x, cls);
    const double sl = loss_ensemble_loss(same, x, cls, std::vector<bool>(M, true)).loss;
    worst_identical = std::max(worst_identical, std::abs(sp - sl));
  }
  std::ostringstream os;
  os << violations << "/" << kJensenTriples << " triples with J_prob > J_loss + 1e-12 (max J_prob - J_loss "
     << fmt("%.2e", worst_gap) << "); identical members max |J_prob - J_loss| " << fmt("%.2e", worst_identical)
     << " (tol 1e-12)";
  return {violations == 0 && worst_identical <= kJensenSlack, os.str()};
}

// ---- criterion 3 ---------------------------------------------------------

Verdict reductions(const World& w) {
  const TrainedModel& m = w.zoo.at("cnn_s");
  const Dataset& test = w.test();
  Rng rng(derive_seed(kGlobalSeed, 3));
  std::size_t fgsm_mismatch = 0, ens_mismatch = 0, n = 0;
  for (std::size_t i = 0; i < kReductionImages; ++i) {
    const Tensor x = test.image(i);
    const std::size_t y = test.labels[i];
    const AttackGoal goal = i % 2 == 0 ? AttackGoal::targeted((y + 1 + rng.index(test.num_classes - 1)) % test.num_classes)
                                       : AttackGoal::untargeted(y);
    const Tensor f = fgsm(m, x, goal, 0.1);
    const AttackTrace one = igsm(m, x, goal, {0.1, 0.1, 1});
    g_audit.check(f, x, 0.1);
    g_audit.check(one.x_adv, x, 0.1);
    if (!bit_equal(f, one.x_adv)) ++fgsm_mismatch;

    const AttackConfig cfg{0.1, 0.01, 20};
    const AttackTrace a = igsm(m, x, goal, cfg);
    const AttackTrace b = iterative_ensemble_attack({&m}, x, goal, cfg, GatingPolicy::always_on());
    g_audit.check(a.x_adv, x, 0.1);
    g_audit.check(b.x_adv, x, 0.1);
    bool same = bit_equal(a.x_adv, b.x_adv) && a.steps.size() == b.steps.size();
    for (std::size_t s = 0; same && s < a.steps.size(); ++s) {
      same = a.steps[s].losses == b.steps[s].losses && a.steps[s].predictions == b.steps[s].predictions;
    }
    if (!same) ++ens_mismatch;
    ++n;
  }
  std::ostringstream os;
  os << "igsm(N=1, alpha=eps) vs fgsm: " << fgsm_mismatch << "/" << n
     << " mismatches; ensemble(M=1, always_on) vs igsm(N=20): " << ens_mismatch << "/" << n
     << " mismatches (cnn_s, bitwise, targeted and untargeted)";
  return {fgsm_mismatch == 0 && ens_mismatch == 0 && n >= kReductionImages, os.str()};
}

// ---- criterion 4 ---------------------------------------------------------

Verdict invariants(const World& w) {
  const Dataset& test = w.test();
  const Ensemble six = w.zoo.members({"mlp_s", "mlp_l", "cnn_s", "cnn_l", "adv_mlp", "adv_cnn"});
  const TrainedModel& cnn = w.zoo.at("cnn_s");
  for (std::size_t i = 0; i < 50; ++i) {
    const Tensor x = test.image(i);
    const std::size_t y = test.labels[i];
    const AttackGoal t = AttackGoal::targeted((y + 3) % test.num_classes);
    g_audit.check(iterative_ensemble_attack(six, x, t, {0.1, 0.01, 20}, GatingPolicy::loss_threshold(0.01)).x_adv, x, 0.1);
    g_audit.check(iterative_ensemble_attack(six, x, AttackGoal::untargeted(y), {0.05, 0.02, 10}, GatingPolicy::always_on()).x_adv,
                  x, 0.05);
    g_audit.check(igsm(cnn, x, t, {0.3, 0.07, 15}).x_adv, x, 0.3);
    g_audit.check(fgsm(cnn, x, AttackGoal::untargeted(y), 0.25), x, 0.25);
  }

  std::size_t cw_runs = 0, cw_success = 0, cw_domain = 0, cw_margin_bad = 0;
  CWConfig cfg;
  cfg.inner_steps = 200;
  for (std::size_t i = 0; i < 20; ++i) {
    const Tensor x = test.image(i);
    const AttackGoal t = AttackGoal::targeted((test.labels[i] + 1) % test.num_classes);
    const CWResult r = cw_l2(cnn, x, t, cfg);
    ++cw_runs;
    for (double v : r.x_adv.values()) {
      if (v < 0.0 || v > 1.0) {
        ++cw_domain;
        break;
      }
    }
    if (r.succeeded) {
      ++cw_success;
      if (cw_margin(forward_logits(cnn, r.x_adv), t, 0.0) > 0.0) ++cw_margin_bad;
    }
  }
  std::ostringstream os;
  os << "gradient-sign outputs audited " << g_audit.outputs << ": " << g_audit.linf_violations << " ball and "
     << g_audit.domain_violations << " domain violations; cw_l2 runs " << cw_runs << " (" << cw_success
     << " successes): " << cw_domain << " domain violations, " << cw_margin_bad << " successes with margin > 0";
  return {g_audit.linf_violations == 0 && g_audit.domain_violations == 0 && cw_domain == 0 && cw_margin_bad == 0 &&
              cw_success > 0,
          os.str()};
}

// ---- criterion 5 ---------------------------------------------------------

Verdict igsm_beats_fgsm(const World& w) {
  EvalSpec spec;
  spec.sources = {{"cnn_s"}};
  spec.victims = {"cnn_s"};
  spec.images = {kIgsmImages, kGlobalSeed, Split::test};
  spec.attack.kind = AttackKind::fgsm;
  spec.attack.config = {0.1, 0.1, 1};
  const TransferMatrix f = run_eval(w.zoo, w.test(), spec);
  spec.attack.kind = AttackKind::igsm;
  spec.attack.config = {0.1, 0.01, 20};
  const TransferMatrix g = run_eval(w.zoo, w.test(), spec);
  const auto& fc = f.at("cnn_s", "cnn_s");
  const auto& gc = g.at("cnn_s", "cnn_s");
  std::ostringstream os;
  os << "cnn_s white-box targeted on " << gc.n_images() << " filtered images: igsm " << gc.n_success() << " vs fgsm "
     << fc.n_success();
  if (fc.n_success() == fc.n_images()) os << " (single-step FGSM already reaches every target)";
  return {gc.n_images() >= kIgsmImages && fc.n_images() == gc.n_images() && gc.n_success() > fc.n_success(), os.str()};
}

// ---- criterion 6 ---------------------------------------------------------

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

Verdict cw_oracle() {
  const TrainedModel m = train("linear", mlp_spec({1, 1, 2}, {}, 2), blobs_2d(400, kGlobalSeed), {0.5, 20, 16, 6});
  const auto wv = m.params[0].values();
  const auto bv = m.params[1].values();
  // Class 0 wins where g(x) = (w0 - w1) x + (b0 - b1) > 0.
  const double wd0 = wv[0] - wv[2], wd1 = wv[1] - wv[3], bd = bv[0] - bv[1];
  const double wn = std::hypot(wd0, wd1);
  Rng rng(derive_seed(kGlobalSeed, 6));
  std::size_t checked = 0, within = 0, failures = 0;
  double worst = 0.0;
  while (checked < kCwPoints) {
    const Tensor x = random_tensor(rng, {1, 1, 2}, 0.05, 0.95);
    const double g = wd0 * x[0] + wd1 * x[1] + bd;
    const double dist = std::abs(g) / wn;
    const double s = g > 0 ? -1.0 : 1.0;
    const double f0 = x[0] + s * dist * wd0 / wn, f1 = x[1] + s * dist * wd1 / wn;
    if (dist < 0.1 || f0 < 0.05 || f0 > 0.95 || f1 < 0.05 || f1 > 0.95) continue;
    const AttackGoal goal = AttackGoal::targeted(g > 0 ? 1 : 0);
    const CWResult r = cw_l2(m, x, goal, {});
    ++checked;
    if (!r.succeeded) {
      ++failures;
      continue;
    }
    const double rel = std::abs(r.delta_l2 - dist) / dist;
    worst = std::max(worst, rel);
    if (rel <= kCwRelTol) ++within;
  }
  std::ostringstream os;
  os << within << "/" << checked << " points with |delta_l2 - d| / d <= 5% (max " << fmt("%.4f", worst) << ", "
     << failures << " failed runs), kappa=0, trained 2-D linear binary classifier";
  return {within == checked && failures == 0, os.str()};
}

// ---- criterion 7 ---------------------------------------------------------

Verdict figure_sweep(const World& w) {
  SweepSpec spec;
  spec.attack.kind = AttackKind::ensemble;
  spec.attack.config = {0.1, 0.01, 80};
  spec.attack.gating = GatingPolicy::loss_threshold(0.01);
  spec.members = {"mlp_s", "mlp_l", "cnn_s", "cnn_l", "adv_mlp", "adv_cnn"};
  spec.grid = {1, 2, 5, 10, 20, 40, 80};
  spec.images = {kSweepImages, kGlobalSeed, Split::test};
  const SweepResult r = iteration_sweep(w.zoo, w.test(), spec);
  const auto std_budget = r.first_budget_reaching("cnn_s", kSweepThreshold);
  const auto adv_budget = r.first_budget_reaching("adv_cnn", kSweepThreshold);
  auto curve_text = [&](const std::string& name) {
    std::ostringstream os;
    os << name << " [";
    const auto& c = r.curve(name);
    for (std::size_t g = 0; g < c.n_success.size(); ++g) os << (g ? " " : "") << c.n_success[g];
    os << "]";
    return os.str();
  };
  auto budget_text = [](const std::optional<std::size_t>& b) { return b ? std::to_string(*b) : std::string("none"); };
  std::ostringstream os;
  os << "first N reaching 90% on " << r.n_images << " images: cnn_s " << budget_text(std_budget) << ", adv_cnn "
     << budget_text(adv_budget) << "; successes per grid {1,2,5,10,20,40,80}: " << curve_text("cnn_s") << " "
     << curve_text("adv_cnn");
  const bool pass = r.n_images >= kSweepImages && std_budget && adv_budget && *adv_budget > *std_budget;
  return {pass, os.str()};
}

// ---- criterion 8 ---------------------------------------------------------

Verdict ensemble_transfer(const World& w) {
  const std::vector<std::string> pool{"mlp_s", "mlp_l", "cnn_s", "cnn_l", "adv_mlp", "adv_cnn"};
  EvalSpec spec;
  spec.attack.kind = AttackKind::ensemble;
  spec.attack.config = {0.1, 0.01, 20};
  spec.attack.gating = GatingPolicy::loss_threshold(0.01);
  spec.victims = {"mlp_h"};
  spec.images = {kTransferImages, kGlobalSeed, Split::test};
  for (const auto& name : pool) spec.sources.push_back({name});
  for (const auto& left_out : pool) {
    std::vector<std::string> members;
    for (const auto& name : pool) {
      if (name != left_out) members.push_back(name);
    }
    spec.sources.push_back(members);
  }
  const TransferMatrix t = run_eval(w.zoo, w.test(), spec);

  bool pass = t.images.size() >= kTransferImages;
  std::ostringstream os;
  os << "held-out mlp_h, " << t.images.size() << " images, ensemble vs members (successes; paired ens-only/single-only):";
  for (const auto& left_out : pool) {
    std::vector<std::string> members;
    for (const auto& name : pool) {
      if (name != left_out) members.push_back(name);
    }
    const TransferCell& ens = t.at(source_label(members), "mlp_h");
    os << " [-" << left_out << ": " << ens.n_success();
    for (const auto& name : members) {
      const TransferCell& single = t.at(name, "mlp_h");
      std::size_t ens_only = 0, single_only = 0;
      for (std::size_t i = 0; i < ens.outcomes.size(); ++i) {
        ens_only += ens.outcomes[i] && !single.outcomes[i];
        single_only += !ens.outcomes[i] && single.outcomes[i];
      }
      if (ens.n_success() < single.n_success()) pass = false;
      os << (name == members.front() ? " vs " : ", ") << name << " " << single.n_success() << " (" << ens_only << "/"
         << single_only << ")";
    }
    os << "]";
  }
  return {pass, os.str()};
}

// ---- criterion 9 ---------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return files;
}

Verdict determinism() {
  const fs::path dir = fs::temp_directory_path() / "advkit_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const Json config = Json::parse(R"({
    "global_seed": 2018,
    "output_dir": "out",
    "dataset": {"train_count": 400, "test_count": 100},
    "zoo": {"epochs": 3},
    "attack": {"method": {"kind": "ensemble", "epsilon": 0.1, "alpha": 0.01, "iterations": 10},
               "members": ["mlp_s", "cnn_s", "adv_cnn"], "images": {"count": 20}},
    "eval": {"use_archive": true, "victims": ["mlp_h", "cnn_l"]},
    "sweep": {"method": {"kind": "ensemble", "epsilon": 0.1, "alpha": 0.01},
              "members": ["cnn_s", "adv_cnn"], "grid": [1, 2, 5, 10], "images": {"count": 20}}
  })");
  write_file_atomic(dir / "cfg.json", to_json_text(config, 2));
  const std::string cfg = (dir / "cfg.json").string();
  const std::vector<std::string> commands{"gen-data", "train", "attack", "eval", "sweep"};

  auto run = [&](const std::string& command) {
    std::vector<const char*> argv{"advkit", command.c_str(), "--config", cfg.c_str(), "--force"};
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (code != 0) throw std::runtime_error(command + " exited " + std::to_string(code) + ": " + err.str());
  };

  for (const auto& c : commands) run(c);
  const auto first = snapshot(dir / "out");
  std::size_t differing = 0;
  for (const auto& c : commands) {
    run(c);
    const auto again = snapshot(dir / "out");
    for (const auto& [path, bytes] : first) {
      const auto it = again.find(path);
      if (it == again.end() || it->second != bytes) ++differing;
    }
  }
  fs::remove_all(dir);
  std::ostringstream os;
  os << "each of {gen-data, train, attack, eval, sweep} repeated with identical config; " << first.size()
     << " output files compared after every repeat, " << differing << " byte differences";
  return {differing == 0 && first.size() >= 10, os.str()};
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();

  report("1 gradient fidelity", guarded(gradient_fidelity));
  report("2 Jensen bound", guarded(jensen));

  World w;
  SyntheticParams params;
  params.seed = kGlobalSeed;
  w.data = make_synthetic(params);
  ZooTrainOptions options;
  options.seed = kGlobalSeed;
  w.zoo = train_zoo(w.data.split(Split::train), options);
  {
    Verdict gate{true, "test accuracy"};
    for (const auto& m : w.zoo.models()) {
      const double acc = accuracy(m, w.test());
      gate.detail += " " + m.name() + fmt("=%.3f", acc);
      gate.pass = gate.pass && acc >= kZooMinAccuracy;
    }
    gate.detail += fmt(" (min %.2f)", kZooMinAccuracy);
    report("zoo competence gate", gate);
  }

  report("3 reduction laws", guarded([&] { return reductions(w); }));
  report("4 linf/domain invariants", guarded([&] { return invariants(w); }));
  report("5 IGSM beats FGSM", guarded([&] { return igsm_beats_fgsm(w); }));
  report("6 C&W hyperplane oracle", guarded(cw_oracle));
  report("7 adversarially trained model needs more iterations", guarded([&] { return figure_sweep(w); }));
  report("8 leave-one-out ensemble transfer", guarded([&] { return ensemble_transfer(w); }));
  report("9 determinism", guarded(determinism));

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d failing, %.0f s\n", g_failures, secs);
  return g_failures == 0 ? 0 : 1;
}
