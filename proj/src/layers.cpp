#include "advkit/layers.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "advkit/error.hpp"

namespace advkit {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + shape_string(t.shape()));
  }
}

void check_dense_shapes(const Tensor& input, const Tensor& weights, const char* what) {
  require_rank(input, 1, what);
  require_rank(weights, 2, what);
  if (weights.shape()[1] != input.shape()[0]) {
    throw DimensionError(std::string(what) + ": weights " + shape_string(weights.shape()) +
                         " do not accept input " + shape_string(input.shape()));
  }
}

struct ConvDims {
  std::size_t channels, height, width, filters, k, out_h, out_w;
};

ConvDims check_conv_shapes(const Tensor& input, const Tensor& kernels, const char* what) {
  require_rank(input, 3, what);
  require_rank(kernels, 4, what);
  const auto& in = input.shape();
  const auto& ks = kernels.shape();
  if (ks[1] != in[0] || ks[2] != ks[3]) {
    throw DimensionError(std::string(what) + ": kernels " + shape_string(ks) +
                         " do not match input " + shape_string(in));
  }
  if (ks[2] > in[1] || ks[3] > in[2]) {
    throw DimensionError(std::string(what) + ": kernel " + shape_string(ks) +
                         " larger than input " + shape_string(in));
  }
  return {in[0], in[1], in[2], ks[0], ks[2], in[1] - ks[2] + 1, in[2] - ks[2] + 1};
}

}  // namespace

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  check_dense_shapes(input, weights, "dense_forward");
  const std::size_t n_out = weights.shape()[0];
  const std::size_t n_in = weights.shape()[1];
  if (bias.shape() != Shape{n_out}) {
    throw DimensionError("dense_forward: bias " + shape_string(bias.shape()) + " vs weights " +
                         shape_string(weights.shape()));
  }
  Tensor out({n_out});
  const auto w = weights.values();
  const auto x = input.values();
  for (std::size_t j = 0; j < n_out; ++j) {
    const double* row = w.data() + j * n_in;
    double acc = 0.0;
    for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * x[i];
    out[j] = acc + bias[j];
  }
  return out;
}

LayerGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream,
                          ParamGrads mode) {
  check_dense_shapes(input, weights, "dense_backward");
  const std::size_t n_out = weights.shape()[0];
  const std::size_t n_in = weights.shape()[1];
  if (upstream.shape() != Shape{n_out}) {
    throw DimensionError("dense_backward: upstream " + shape_string(upstream.shape()) +
                         " vs output [" + std::to_string(n_out) + "]");
  }
  LayerGrads g;
  g.input_grad = Tensor({n_in});
  const auto w = weights.values();
  auto gin = g.input_grad.values();
  for (std::size_t j = 0; j < n_out; ++j) {
    const double u = upstream[j];
    if (u == 0.0) continue;
    const double* row = w.data() + j * n_in;
    for (std::size_t i = 0; i < n_in; ++i) gin[i] += row[i] * u;
  }
  if (mode == ParamGrads::compute) {
    Tensor gw({n_out, n_in});
    auto gwv = gw.values();
    for (std::size_t j = 0; j < n_out; ++j) {
      for (std::size_t i = 0; i < n_in; ++i) gwv[j * n_in + i] = upstream[j] * input[i];
    }
    g.param_grads.push_back(std::move(gw));
    g.param_grads.push_back(upstream);
  }
  return g;
}

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  const ConvDims d = check_conv_shapes(input, kernels, "conv2d_forward");
  if (bias.shape() != Shape{d.filters}) {
    throw DimensionError("conv2d_forward: bias " + shape_string(bias.shape()) + " vs kernels " +
                         shape_string(kernels.shape()));
  }
  Tensor out({d.filters, d.out_h, d.out_w});
  const auto in = input.values();
  const auto ker = kernels.values();
  auto o = out.values();
  for (std::size_t f = 0; f < d.filters; ++f) {
    for (std::size_t y = 0; y < d.out_h; ++y) {
      for (std::size_t x = 0; x < d.out_w; ++x) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d.channels; ++c) {
          for (std::size_t ky = 0; ky < d.k; ++ky) {
            const double* in_row = in.data() + (c * d.height + y + ky) * d.width + x;
            const double* k_row = ker.data() + ((f * d.channels + c) * d.k + ky) * d.k;
            for (std::size_t kx = 0; kx < d.k; ++kx) acc += k_row[kx] * in_row[kx];
          }
        }
        o[(f * d.out_h + y) * d.out_w + x] = acc + bias[f];
      }
    }
  }
  return out;
}

LayerGrads conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& upstream,
                           ParamGrads mode) {
  const ConvDims d = check_conv_shapes(input, kernels, "conv2d_backward");
  if (upstream.shape() != Shape{d.filters, d.out_h, d.out_w}) {
    throw DimensionError("conv2d_backward: upstream " + shape_string(upstream.shape()) +
                         " vs output " + shape_string({d.filters, d.out_h, d.out_w}));
  }
  const auto in = input.values();
  const auto ker = kernels.values();
  const auto up = upstream.values();

  LayerGrads g;
  g.input_grad = Tensor(input.shape());
  auto gin = g.input_grad.values();
  for (std::size_t f = 0; f < d.filters; ++f) {
    for (std::size_t y = 0; y < d.out_h; ++y) {
      for (std::size_t x = 0; x < d.out_w; ++x) {
        const double u = up[(f * d.out_h + y) * d.out_w + x];
        if (u == 0.0) continue;
        for (std::size_t c = 0; c < d.channels; ++c) {
          for (std::size_t ky = 0; ky < d.k; ++ky) {
            double* gin_row = gin.data() + (c * d.height + y + ky) * d.width + x;
            const double* k_row = ker.data() + ((f * d.channels + c) * d.k + ky) * d.k;
            for (std::size_t kx = 0; kx < d.k; ++kx) gin_row[kx] += k_row[kx] * u;
          }
        }
      }
    }
  }

  if (mode == ParamGrads::compute) {
    Tensor gk(kernels.shape());
    Tensor gb({d.filters});
    auto gkv = gk.values();
    for (std::size_t f = 0; f < d.filters; ++f) {
      double bias_acc = 0.0;
      for (std::size_t y = 0; y < d.out_h; ++y) {
        for (std::size_t x = 0; x < d.out_w; ++x) {
          const double u = up[(f * d.out_h + y) * d.out_w + x];
          bias_acc += u;
          if (u == 0.0) continue;
          for (std::size_t c = 0; c < d.channels; ++c) {
            for (std::size_t ky = 0; ky < d.k; ++ky) {
              const double* in_row = in.data() + (c * d.height + y + ky) * d.width + x;
              double* gk_row = gkv.data() + ((f * d.channels + c) * d.k + ky) * d.k;
              for (std::size_t kx = 0; kx < d.k; ++kx) gk_row[kx] += u * in_row[kx];
            }
          }
        }
      }
      gb[f] = bias_acc;
    }
    g.param_grads.push_back(std::move(gk));
    g.param_grads.push_back(std::move(gb));
  }
  return g;
}

Tensor relu_forward(const Tensor& input) {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > 0.0 ? input[i] : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& upstream) {
  require_same_shape(input, upstream, "relu_backward");
  Tensor g(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) g[i] = input[i] > 0.0 ? upstream[i] : 0.0;
  return g;
}

double log_sum_exp(const Tensor& logits) {
  double m = -std::numeric_limits<double>::infinity();
  for (double z : logits.values()) m = std::max(m, z);
  double s = 0.0;
  for (double z : logits.values()) s += std::exp(z - m);
  return m + std::log(s);
}

Tensor softmax(const Tensor& logits) {
  require_rank(logits, 1, "softmax");
  double m = -std::numeric_limits<double>::infinity();
  for (double z : logits.values()) m = std::max(m, z);
  Tensor p(logits.shape());
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    s += p[i];
  }
  for (double& v : p.values()) v /= s;
  return p;
}

Tensor one_hot(std::size_t num_classes, std::size_t index) {
  if (index >= num_classes) {
    throw ContractError("class index " + std::to_string(index) + " out of range for " +
                        std::to_string(num_classes) + " classes");
  }
  Tensor t({num_classes});
  t[index] = 1.0;
  return t;
}

SoftmaxCrossEntropy softmax_cross_entropy(const Tensor& logits, const Tensor& target_one_hot) {
  require_rank(logits, 1, "softmax_cross_entropy");
  require_same_shape(logits, target_one_hot, "softmax_cross_entropy");
  if (logits.size() < 2) throw ContractError("softmax_cross_entropy needs at least 2 classes");
  std::size_t hot = logits.size();
  for (std::size_t i = 0; i < target_one_hot.size(); ++i) {
    const double t = target_one_hot[i];
    if (t == 1.0 && hot == logits.size()) {
      hot = i;
    } else if (t != 0.0) {
      throw ContractError("softmax_cross_entropy: target is not one-hot");
    }
  }
  if (hot == logits.size()) throw ContractError("softmax_cross_entropy: target is not one-hot");

  SoftmaxCrossEntropy r;
  r.probs = softmax(logits);
  r.loss = log_sum_exp(logits) - logits[hot];
  r.logit_grad = r.probs;
  r.logit_grad[hot] -= 1.0;
  return r;
}

SoftmaxCrossEntropy softmax_cross_entropy(const Tensor& logits, std::size_t target_class) {
  return softmax_cross_entropy(logits, one_hot(logits.size(), target_class));
}

}  // namespace advkit
