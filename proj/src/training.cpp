#include "advkit/training.hpp"

#include <numeric>
#include <vector>

#include "advkit/error.hpp"
#include "advkit/perturbation.hpp"
#include "advkit/rng.hpp"

namespace advkit {

namespace detail {

TrainedModel sgd_train(const std::string& name, const ModelSpec& spec, const Dataset& data,
                       const TrainHyper& hyper, double epsilon_train) {
  if (data.size() == 0) throw DataError("cannot train '" + name + "' on an empty dataset");
  if (!(hyper.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (hyper.batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(epsilon_train >= 0.0)) throw ConfigError("epsilon_train must be non-negative");
  spec.validate();
  if (data.image_shape() != spec.input_shape || data.num_classes != spec.num_classes) {
    throw DimensionError("dataset " + shape_string(data.image_shape()) + " x " + std::to_string(data.num_classes) +
                         " classes does not fit model '" + name + "' " + shape_string(spec.input_shape) + " x " +
                         std::to_string(spec.num_classes));
  }

  TrainedModel model;
  model.spec = spec;
  model.params = init_params(spec, hyper.seed);
  model.meta.name = name;
  model.meta.training_kind = epsilon_train > 0.0 ? TrainingKind::adversarial : TrainingKind::standard;
  model.meta.epsilon_train = epsilon_train;
  model.meta.seed = hyper.seed;
  model.meta.epochs = hyper.epochs;
  model.meta.dataset_id = data.dataset_id;

  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  double epoch_loss = 0.0;

  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(hyper.seed, epoch));
    rng.shuffle(order);
    epoch_loss = 0.0;
    const std::size_t warmup = hyper.epsilon_warmup_epochs;
    const double eps = epoch < warmup ? epsilon_train * static_cast<double>(epoch + 1) / static_cast<double>(warmup + 1)
                                      : epsilon_train;

    for (std::size_t start = 0; start < n; start += hyper.batch_size) {
      const std::size_t end = std::min(n, start + hyper.batch_size);
      const std::size_t batch = end - start;
      const std::size_t clean_count = batch - batch / 2;
      std::vector<Tensor> grad_sum;
      for (const auto& p : model.params) grad_sum.emplace_back(p.shape());

      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t idx = order[start + b];
        Tensor x = data.image(idx);
        const std::size_t y = data.labels[idx];
        if (eps > 0.0 && b >= clean_count) {
          const LossAndGrad lg = loss_and_input_grad(model, x, y);
          x = signed_step(x, lg.grad, +1.0, eps, x, eps);
        }
        const ForwardCache cache = forward_pass(model.spec, model.params, x);
        const SoftmaxCrossEntropy ce = softmax_cross_entropy(cache.logits, y);
        epoch_loss += ce.loss;
        const Backprop bp = backward_pass(model.spec, model.params, cache, ce.logit_grad, ParamGrads::compute);
        for (std::size_t p = 0; p < grad_sum.size(); ++p) add_scaled(grad_sum[p], bp.param_grads[p], 1.0);
      }
      const double step = hyper.learning_rate / static_cast<double>(batch);
      for (std::size_t p = 0; p < model.params.size(); ++p) add_scaled(model.params[p], grad_sum[p], -step);
    }
    epoch_loss /= static_cast<double>(n);
  }

  if (hyper.epochs == 0) {
    // No training pass was made; report the clean loss at initialization.
    for (std::size_t i = 0; i < n; ++i) {
      epoch_loss += softmax_cross_entropy(forward_logits(model, data.image(i)), data.labels[i]).loss;
    }
    epoch_loss /= static_cast<double>(n);
  }
  model.meta.final_train_loss = epoch_loss;
  model.validate();
  return model;
}

}  // namespace detail

TrainedModel train(const std::string& name, const ModelSpec& spec, const Dataset& data,
                   const TrainHyper& hyper) {
  return detail::sgd_train(name, spec, data, hyper, 0.0);
}

TrainedModel adversarial_train(const std::string& name, const ModelSpec& spec, const Dataset& data,
                               const TrainHyper& hyper, double epsilon_train) {
  if (!(epsilon_train > 0.0)) {
    throw ConfigError("adversarial training of '" + name + "' needs epsilon_train > 0");
  }
  return detail::sgd_train(name, spec, data, hyper, epsilon_train);
}

double accuracy(const TrainedModel& model, const Dataset& data) {
  if (data.size() == 0) throw DataError("accuracy of an empty dataset is undefined");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predict(model, data.image(i)) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace advkit
