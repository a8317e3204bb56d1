#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "advkit/dataset.hpp"
#include "advkit/model.hpp"
#include "advkit/training.hpp"

namespace advkit {

/// Flatten, then Dense+ReLU per hidden width, then a Dense logit layer.
ModelSpec mlp_spec(const Shape& input_shape, const std::vector<std::size_t>& hidden, std::size_t num_classes);

/// Conv2d+ReLU per filter count (all with `kernel` x `kernel`), then
/// Flatten and a Dense logit layer.
ModelSpec cnn_spec(const Shape& input_shape, const std::vector<std::size_t>& filters, std::size_t kernel,
                   std::size_t num_classes);

struct ZooEntry {
  std::string name;
  ModelSpec spec;
  bool adversarial = false;
  std::uint64_t seed_stream = 0;  // models sharing a stream share initial weights
  bool holdout = false;           // never part of an attack ensemble
};

/// The seven-model zoo: mlp_s, mlp_l, cnn_s, cnn_l, adv_mlp, adv_cnn and the
/// black-box holdout mlp_h.
std::vector<ZooEntry> default_zoo(const Shape& input_shape, std::size_t num_classes);

std::vector<std::string> default_zoo_names();

struct ZooTrainOptions {
  TrainHyper hyper;             // seed is ignored; per-model seeds derive from `seed`
  double epsilon_train = 0.04;  // used by the adversarial entries
  std::uint64_t seed = 0;
  std::vector<std::string> names;  // empty = all of default_zoo
};

std::uint64_t zoo_model_seed(std::uint64_t global_seed, const ZooEntry& entry);

/// Named collection of trained models.
class Zoo {
 public:
  Zoo() = default;
  explicit Zoo(std::vector<TrainedModel> models);

  const TrainedModel& at(std::string_view name) const;  // ConfigError if unknown
  bool contains(std::string_view name) const;
  std::vector<std::string> names() const;
  const std::vector<TrainedModel>& models() const { return models_; }

  Ensemble members(const std::vector<std::string>& names) const;

 private:
  std::vector<TrainedModel> models_;
};

TrainedModel train_zoo_entry(const ZooEntry& entry, const Dataset& train, const ZooTrainOptions& options);

Zoo train_zoo(const Dataset& train, const ZooTrainOptions& options);

}  // namespace advkit
