#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "advkit/layers.hpp"
#include "advkit/tensor.hpp"

namespace advkit {

struct DenseLayer {
  std::size_t n_in = 0;
  std::size_t n_out = 0;
  bool operator==(const DenseLayer&) const = default;
};

struct Conv2dLayer {
  std::size_t channels = 0;
  std::size_t filters = 0;
  std::size_t kernel = 0;
  bool operator==(const Conv2dLayer&) const = default;
};

struct ReluLayer {
  bool operator==(const ReluLayer&) const = default;
};

struct FlattenLayer {
  bool operator==(const FlattenLayer&) const = default;
};

using LayerDesc = std::variant<DenseLayer, Conv2dLayer, ReluLayer, FlattenLayer>;

/// Architecture of a feed-forward classifier.
struct ModelSpec {
  std::vector<LayerDesc> layers;
  Shape input_shape;
  std::size_t num_classes = 0;

  /// Throws DimensionError unless consecutive layers conform and the final
  /// output is a vector of `num_classes` logits.
  void validate() const;

  /// Output shape of every layer, in order (size == layers.size()).
  std::vector<Shape> output_shapes() const;

  /// Shapes of all parameters, two per Dense/Conv2d layer (weights, bias).
  std::vector<Shape> param_shapes() const;

  bool operator==(const ModelSpec&) const = default;
};

enum class TrainingKind { standard, adversarial };

struct TrainingMeta {
  std::string name;
  TrainingKind training_kind = TrainingKind::standard;
  double epsilon_train = 0.0;  // > 0 iff adversarial
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  double final_train_loss = 0.0;
  std::string dataset_id;
  bool operator==(const TrainingMeta&) const = default;
};

struct TrainedModel {
  ModelSpec spec;
  std::vector<Tensor> params;
  TrainingMeta meta;

  /// Spec validity, parameter shapes, finite values and meta consistency.
  void validate() const;
  const std::string& name() const { return meta.name; }
};

/// Non-owning view of several models, e.g. an attack ensemble.
using Ensemble = std::vector<const TrainedModel*>;

/// Glorot-uniform weights (fan_in/fan_out taken per layer; for conv kernels
/// fan_in = C*k*k and fan_out = F*k*k), zero biases.
std::vector<Tensor> init_params(const ModelSpec& spec, std::uint64_t seed);

/// Activations recorded by a forward pass: `inputs[i]` is the input to
/// layer i and `logits` the output of the last layer.
struct ForwardCache {
  std::vector<Tensor> inputs;
  Tensor logits;
};

ForwardCache forward_pass(const ModelSpec& spec, std::span<const Tensor> params, const Tensor& x);

struct Backprop {
  Tensor input_grad;
  std::vector<Tensor> param_grads;  // empty when ParamGrads::skip
};

/// Backpropagates `logit_grad` through the cached forward pass.
Backprop backward_pass(const ModelSpec& spec, std::span<const Tensor> params,
                       const ForwardCache& cache, const Tensor& logit_grad,
                       ParamGrads mode = ParamGrads::skip);

Tensor forward_logits(const TrainedModel& model, const Tensor& x);

struct LossAndGrad {
  double loss = 0.0;
  Tensor grad;    // dJ/dX, same shape as X
  Tensor logits;  // Z(X)
};

/// Cross-entropy J of softmax(Z(X)) against class `cls` and its exact input
/// gradient.
LossAndGrad loss_and_input_grad(const TrainedModel& model, const Tensor& x, std::size_t cls);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(const Tensor& logits);

std::size_t predict(const TrainedModel& model, const Tensor& x);

}  // namespace advkit
