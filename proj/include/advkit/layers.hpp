#pragma once

#include <cstddef>
#include <vector>

#include "advkit/tensor.hpp"

namespace advkit {

/// Gradients produced by a layer's backward pass. `param_grads` follows the
/// layer's parameter order (weights, bias) and is empty when parameter
/// gradients were not requested.
struct LayerGrads {
  Tensor input_grad;
  std::vector<Tensor> param_grads;
};

enum class ParamGrads { compute, skip };

// All forward ops accumulate in ascending row-major index order, starting
// from 0.0, and add the bias last. Results are therefore bit-reproducible.

/// out[j] = sum_i W[j,i] * in[i] + b[j]. Shapes: in [n_in], W [n_out x n_in], b [n_out].
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);
LayerGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream,
                          ParamGrads mode = ParamGrads::compute);

/// Valid (unpadded) stride-1 cross-correlation. in [C x H x W], kernels
/// [F x C x k x k], bias [F]; output [F x (H-k+1) x (W-k+1)].
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias);
LayerGrads conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& upstream,
                           ParamGrads mode = ParamGrads::compute);

/// max(0, x). The backward pass uses subgradient 0 at x == 0.
Tensor relu_forward(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& upstream);

/// Max-subtracted softmax.
Tensor softmax(const Tensor& logits);

struct SoftmaxCrossEntropy {
  double loss = 0.0;
  Tensor logit_grad;  // probs - target
  Tensor probs;
};

/// Cross-entropy of softmax(logits) against a one-hot target. The loss is
/// evaluated as logsumexp(z) - z_c so saturated logits neither overflow nor
/// lose the small-loss tail.
SoftmaxCrossEntropy softmax_cross_entropy(const Tensor& logits, const Tensor& target_one_hot);
SoftmaxCrossEntropy softmax_cross_entropy(const Tensor& logits, std::size_t target_class);

Tensor one_hot(std::size_t num_classes, std::size_t index);

/// Max-shifted log(sum_i exp(z_i)).
double log_sum_exp(const Tensor& logits);

}  // namespace advkit
