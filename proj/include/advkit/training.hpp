#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "advkit/dataset.hpp"
#include "advkit/model.hpp"

namespace advkit {

struct TrainHyper {
  double learning_rate = 0.02;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  // Adversarial training only: epoch e < W uses epsilon * (e + 1) / (W + 1).
  std::size_t epsilon_warmup_epochs = 5;
};

/// Minibatch SGD (no momentum) on mean cross-entropy. Each epoch visits the
/// data in a permutation drawn from derive_seed(seed, epoch); parameters
/// start from init_params(spec, seed).
TrainedModel train(const std::string& name, const ModelSpec& spec, const Dataset& data,
                   const TrainHyper& hyper);

/// Like train(), but the second half of every minibatch is replaced by
/// untargeted FGSM examples at `epsilon_train`, crafted against the current
/// parameters, with the budget ramped over hyper.epsilon_warmup_epochs.
/// Throws ConfigError unless epsilon_train > 0.
TrainedModel adversarial_train(const std::string& name, const ModelSpec& spec, const Dataset& data,
                               const TrainHyper& hyper, double epsilon_train);

/// Fraction of `data` classified correctly.
double accuracy(const TrainedModel& model, const Dataset& data);

namespace detail {

/// Shared SGD loop. epsilon_train == 0 leaves every example clean, which
/// reproduces train() exactly.
TrainedModel sgd_train(const std::string& name, const ModelSpec& spec, const Dataset& data,
                       const TrainHyper& hyper, double epsilon_train);

}  // namespace detail

}  // namespace advkit
