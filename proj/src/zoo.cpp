#include "advkit/zoo.hpp"

#include <algorithm>

#include "advkit/error.hpp"
#include "advkit/rng.hpp"

namespace advkit {

ModelSpec mlp_spec(const Shape& input_shape, const std::vector<std::size_t>& hidden, std::size_t num_classes) {
  ModelSpec spec;
  spec.input_shape = input_shape;
  spec.num_classes = num_classes;
  spec.layers.push_back(FlattenLayer{});
  std::size_t width = shape_size(input_shape);
  for (std::size_t h : hidden) {
    spec.layers.push_back(DenseLayer{width, h});
    spec.layers.push_back(ReluLayer{});
    width = h;
  }
  spec.layers.push_back(DenseLayer{width, num_classes});
  spec.validate();
  return spec;
}

ModelSpec cnn_spec(const Shape& input_shape, const std::vector<std::size_t>& filters, std::size_t kernel,
                   std::size_t num_classes) {
  if (input_shape.size() != 3) throw DimensionError("cnn input must be [C, H, W], got " + shape_string(input_shape));
  ModelSpec spec;
  spec.input_shape = input_shape;
  spec.num_classes = num_classes;
  Shape cur = input_shape;
  for (std::size_t f : filters) {
    spec.layers.push_back(Conv2dLayer{cur[0], f, kernel});
    spec.layers.push_back(ReluLayer{});
    if (kernel > cur[1] || kernel > cur[2]) throw DimensionError("cnn input too small for its conv stack");
    cur = {f, cur[1] - kernel + 1, cur[2] - kernel + 1};
  }
  spec.layers.push_back(FlattenLayer{});
  spec.layers.push_back(DenseLayer{shape_size(cur), num_classes});
  spec.validate();
  return spec;
}

std::vector<ZooEntry> default_zoo(const Shape& input_shape, std::size_t num_classes) {
  const ModelSpec mlp_s = mlp_spec(input_shape, {64}, num_classes);
  const ModelSpec cnn_s = cnn_spec(input_shape, {8}, 3, num_classes);
  return {
      {"mlp_s", mlp_s, false, 1, false},
      {"mlp_l", mlp_spec(input_shape, {128, 128}, num_classes), false, 2, false},
      {"cnn_s", cnn_s, false, 3, false},
      {"cnn_l", cnn_spec(input_shape, {8, 16}, 3, num_classes), false, 4, false},
      {"adv_mlp", mlp_s, true, 1, false},
      {"adv_cnn", cnn_s, true, 3, false},
      {"mlp_h", mlp_spec(input_shape, {96}, num_classes), false, 7, true},
  };
}

std::vector<std::string> default_zoo_names() {
  return {"mlp_s", "mlp_l", "cnn_s", "cnn_l", "adv_mlp", "adv_cnn", "mlp_h"};
}

std::uint64_t zoo_model_seed(std::uint64_t global_seed, const ZooEntry& entry) {
  return derive_seed(global_seed, 1000 + entry.seed_stream);
}

Zoo::Zoo(std::vector<TrainedModel> models) : models_(std::move(models)) {
  for (std::size_t i = 0; i < models_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (models_[i].name() == models_[j].name()) throw ConfigError("duplicate model name '" + models_[i].name() + "'");
    }
  }
}

const TrainedModel& Zoo::at(std::string_view name) const {
  for (const auto& m : models_) {
    if (m.name() == name) return m;
  }
  throw ConfigError("unknown model '" + std::string(name) + "'");
}

bool Zoo::contains(std::string_view name) const {
  return std::any_of(models_.begin(), models_.end(), [&](const TrainedModel& m) { return m.name() == name; });
}

std::vector<std::string> Zoo::names() const {
  std::vector<std::string> out;
  for (const auto& m : models_) out.push_back(m.name());
  return out;
}

Ensemble Zoo::members(const std::vector<std::string>& names) const {
  Ensemble out;
  for (const auto& n : names) out.push_back(&at(n));
  return out;
}

TrainedModel train_zoo_entry(const ZooEntry& entry, const Dataset& train_data, const ZooTrainOptions& options) {
  TrainHyper hyper = options.hyper;
  hyper.seed = zoo_model_seed(options.seed, entry);
  if (entry.adversarial) return adversarial_train(entry.name, entry.spec, train_data, hyper, options.epsilon_train);
  return train(entry.name, entry.spec, train_data, hyper);
}

Zoo train_zoo(const Dataset& train_data, const ZooTrainOptions& options) {
  const auto entries = default_zoo(train_data.image_shape(), train_data.num_classes);
  std::vector<std::string> wanted = options.names.empty() ? default_zoo_names() : options.names;
  std::vector<TrainedModel> models;
  for (const auto& name : wanted) {
    auto it = std::find_if(entries.begin(), entries.end(), [&](const ZooEntry& e) { return e.name == name; });
    if (it == entries.end()) throw ConfigError("unknown zoo model '" + name + "'");
    models.push_back(train_zoo_entry(*it, train_data, options));
  }
  return Zoo(std::move(models));
}

}  // namespace advkit
