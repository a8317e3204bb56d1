#include "advkit/model.hpp"

#include <cmath>
#include <string>

#include "advkit/error.hpp"
#include "advkit/rng.hpp"

namespace advkit {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

Shape layer_output(const LayerDesc& layer, const Shape& in, std::size_t index) {
  const std::string where = "layer " + std::to_string(index) + ": ";
  return std::visit(
      overloaded{
          [&](const DenseLayer& d) -> Shape {
            if (d.n_in == 0 || d.n_out == 0) throw DimensionError(where + "dense sizes must be positive");
            if (in != Shape{d.n_in}) {
              throw DimensionError(where + "dense expects [" + std::to_string(d.n_in) + "], got " +
                                   shape_string(in));
            }
            return {d.n_out};
          },
          [&](const Conv2dLayer& c) -> Shape {
            if (c.channels == 0 || c.filters == 0 || c.kernel == 0) {
              throw DimensionError(where + "conv2d sizes must be positive");
            }
            if (in.size() != 3 || in[0] != c.channels) {
              throw DimensionError(where + "conv2d expects " + std::to_string(c.channels) +
                                   " channels, got " + shape_string(in));
            }
            if (c.kernel > in[1] || c.kernel > in[2]) {
              throw DimensionError(where + "kernel " + std::to_string(c.kernel) +
                                   " larger than input " + shape_string(in));
            }
            return {c.filters, in[1] - c.kernel + 1, in[2] - c.kernel + 1};
          },
          [&](const ReluLayer&) -> Shape { return in; },
          [&](const FlattenLayer&) -> Shape { return {shape_size(in)}; },
      },
      layer);
}

}  // namespace

void ModelSpec::validate() const {
  (void)output_shapes();
}

std::vector<Shape> ModelSpec::output_shapes() const {
  if (input_shape.empty()) throw DimensionError("model input shape is empty");
  for (std::size_t d : input_shape) {
    if (d == 0) throw DimensionError("model input shape " + shape_string(input_shape) + " has a zero dimension");
  }
  if (num_classes < 2) throw DimensionError("model needs at least 2 classes");
  if (layers.empty()) throw DimensionError("model has no layers");
  std::vector<Shape> shapes;
  Shape cur = input_shape;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    cur = layer_output(layers[i], cur, i);
    shapes.push_back(cur);
  }
  if (cur != Shape{num_classes}) {
    throw DimensionError("model output " + shape_string(cur) + " does not match " +
                         std::to_string(num_classes) + " classes");
  }
  return shapes;
}

std::vector<Shape> ModelSpec::param_shapes() const {
  std::vector<Shape> shapes;
  for (const auto& layer : layers) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      shapes.push_back({d->n_out, d->n_in});
      shapes.push_back({d->n_out});
    } else if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
      shapes.push_back({c->filters, c->channels, c->kernel, c->kernel});
      shapes.push_back({c->filters});
    }
  }
  return shapes;
}

void TrainedModel::validate() const {
  spec.validate();
  const auto shapes = spec.param_shapes();
  if (shapes.size() != params.size()) {
    throw DimensionError("model '" + meta.name + "' has " + std::to_string(params.size()) +
                         " parameter tensors, spec needs " + std::to_string(shapes.size()));
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (params[i].shape() != shapes[i]) {
      throw DimensionError("model '" + meta.name + "' parameter " + std::to_string(i) + " has shape " +
                           shape_string(params[i].shape()) + ", spec needs " + shape_string(shapes[i]));
    }
    if (!params[i].all_finite()) {
      throw ContractError("model '" + meta.name + "' parameter " + std::to_string(i) + " is not finite");
    }
  }
  const bool adversarial = meta.training_kind == TrainingKind::adversarial;
  if (adversarial && !(meta.epsilon_train > 0.0)) {
    throw ContractError("adversarially trained model '" + meta.name + "' needs epsilon_train > 0");
  }
  if (!adversarial && meta.epsilon_train != 0.0) {
    throw ContractError("standard model '" + meta.name + "' must have epsilon_train = 0");
  }
}

std::vector<Tensor> init_params(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::vector<Tensor> params;
  for (const auto& layer : spec.layers) {
    std::size_t fan_in = 0, fan_out = 0;
    Shape wshape, bshape;
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      fan_in = d->n_in;
      fan_out = d->n_out;
      wshape = {d->n_out, d->n_in};
      bshape = {d->n_out};
    } else if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
      fan_in = c->channels * c->kernel * c->kernel;
      fan_out = c->filters * c->kernel * c->kernel;
      wshape = {c->filters, c->channels, c->kernel, c->kernel};
      bshape = {c->filters};
    } else {
      continue;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w(wshape);
    for (double& v : w.values()) v = rng.uniform(-limit, limit);
    params.push_back(std::move(w));
    params.emplace_back(bshape);
  }
  return params;
}

ForwardCache forward_pass(const ModelSpec& spec, std::span<const Tensor> params, const Tensor& x) {
  if (x.shape() != spec.input_shape) {
    throw DimensionError("model input " + shape_string(x.shape()) + " does not match expected " +
                         shape_string(spec.input_shape));
  }
  ForwardCache cache;
  cache.inputs.reserve(spec.layers.size());
  Tensor cur = x;
  std::size_t p = 0;
  for (const auto& layer : spec.layers) {
    Tensor next = std::visit(
        overloaded{
            [&](const DenseLayer&) {
              Tensor out = dense_forward(cur, params[p], params[p + 1]);
              p += 2;
              return out;
            },
            [&](const Conv2dLayer&) {
              Tensor out = conv2d_forward(cur, params[p], params[p + 1]);
              p += 2;
              return out;
            },
            [&](const ReluLayer&) { return relu_forward(cur); },
            [&](const FlattenLayer&) { return cur.reshaped({cur.size()}); },
        },
        layer);
    cache.inputs.push_back(std::move(cur));
    cur = std::move(next);
  }
  if (!cur.all_finite()) throw InvariantViolation("forward pass produced non-finite logits");
  cache.logits = std::move(cur);
  return cache;
}

Backprop backward_pass(const ModelSpec& spec, std::span<const Tensor> params,
                       const ForwardCache& cache, const Tensor& logit_grad, ParamGrads mode) {
  require_same_shape(cache.logits, logit_grad, "backward_pass");
  Backprop out;
  if (mode == ParamGrads::compute) out.param_grads.resize(params.size());
  std::size_t p = params.size();
  Tensor upstream = logit_grad;
  for (std::size_t i = spec.layers.size(); i-- > 0;) {
    const Tensor& input = cache.inputs[i];
    const auto& layer = spec.layers[i];
    if (std::holds_alternative<DenseLayer>(layer) || std::holds_alternative<Conv2dLayer>(layer)) {
      p -= 2;
      LayerGrads g = std::holds_alternative<DenseLayer>(layer)
                         ? dense_backward(input, params[p], upstream, mode)
                         : conv2d_backward(input, params[p], upstream, mode);
      if (mode == ParamGrads::compute) {
        out.param_grads[p] = std::move(g.param_grads[0]);
        out.param_grads[p + 1] = std::move(g.param_grads[1]);
      }
      upstream = std::move(g.input_grad);
    } else if (std::holds_alternative<ReluLayer>(layer)) {
      upstream = relu_backward(input, upstream);
    } else {
      upstream = upstream.reshaped(input.shape());
    }
  }
  out.input_grad = std::move(upstream);
  return out;
}

Tensor forward_logits(const TrainedModel& model, const Tensor& x) {
  return forward_pass(model.spec, model.params, x).logits;
}

LossAndGrad loss_and_input_grad(const TrainedModel& model, const Tensor& x, std::size_t cls) {
  if (cls >= model.spec.num_classes) {
    throw ContractError("class " + std::to_string(cls) + " out of range for model '" + model.name() +
                        "' with " + std::to_string(model.spec.num_classes) + " classes");
  }
  ForwardCache cache = forward_pass(model.spec, model.params, x);
  const SoftmaxCrossEntropy ce = softmax_cross_entropy(cache.logits, cls);
  LossAndGrad r;
  r.loss = ce.loss;
  r.grad = backward_pass(model.spec, model.params, cache, ce.logit_grad).input_grad;
  r.logits = std::move(cache.logits);
  return r;
}

std::size_t argmax(const Tensor& logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return best;
}

std::size_t predict(const TrainedModel& model, const Tensor& x) {
  return argmax(forward_logits(model, x));
}

}  // namespace advkit
