#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "adt/sample.hpp"
#include "adt/types.hpp"

namespace adt {

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;
};

/// Single 'same'-padded stride-1 conv block applied to image inputs, followed
/// by ReLU and flattening. Weight rows are filters, columns the unrolled
/// (channel, ky, kx) patch.
struct ConvLayer {
  Matrix weight;
  Vector bias;
  int in_channels = 0;
  int height = 0;
  int width = 0;
  int kernel = 3;
  int filters() const { return static_cast<int>(weight.rows()); }
};

/// Small softmax classifier: optional conv front-end, then ReLU MLP.
/// The same structure doubles as the container for gradients, momentum
/// buffers and the EMA shadow copy.
struct ModelParams {
  std::optional<ConvLayer> conv;
  std::vector<DenseLayer> dense;

  int num_classes() const { return static_cast<int>(dense.back().weight.rows()); }
  Eigen::Index parameter_count() const;
};

/// He-uniform initialized MLP [input -> hidden... -> num_classes].
ModelParams make_mlp(int input_dim, const std::vector<int>& hidden,
                     int num_classes, std::uint64_t seed);

/// Conv front-end (filters x kernel x kernel, same padding) plus MLP head.
ModelParams make_conv_mlp(int height, int width, int channels, int filters,
                          int kernel, const std::vector<int>& hidden,
                          int num_classes, std::uint64_t seed);

ModelParams zeros_like(const ModelParams& p);
bool all_finite(const ModelParams& p);
/// acc += scale * g, layer by layer.
void axpy(ModelParams& acc, const ModelParams& g, Real scale);

/// Round-trips every trainable coordinate through one flat vector. Order is
/// stable (conv weight, conv bias, then each dense weight and bias) so tests
/// can perturb single coordinates.
Vector flatten(const ModelParams& p);
void assign_from_flat(ModelParams& p, const Eigen::Ref<const Vector>& flat);

struct ForwardTrace {
  Vector conv_pre;     // conv pre-activation, empty without conv
  Vector dense_input;  // input seen by the first dense layer
  std::vector<Vector> pre;  // dense pre-activations
  ProbVector probs;
};

/// Softmax forward pass. Image samples go through the conv front-end when one
/// is configured, otherwise they are flattened.
ProbVector forward(const ModelParams& p, const Sample& input);
ForwardTrace forward_trace(const ModelParams& p, const Sample& input);

/// Backpropagates d(loss)/d(probs) through softmax, the dense stack and the
/// conv front-end. The returned structure mirrors the parameters.
ModelParams backward(const ModelParams& p, const Sample& input,
                     const ForwardTrace& trace,
                     const Eigen::Ref<const Vector>& dloss_dprobs);

struct OptimState {
  Real base_lr = 0.03;
  Real weight_decay = 0.0005;
  Real momentum = 0.9;
  long step_count = 0;
  long total_steps = 1;
  Real ema_decay = 0.999;
  ModelParams velocity;
  ModelParams ema_params;
};

OptimState make_optim(const ModelParams& params, Real base_lr,
                      Real weight_decay, Real momentum, Real ema_decay,
                      long total_steps);

/// base_lr * cos(7 pi step / (16 total)). Steps past total hold the final value.
Real cosine_lr(const OptimState& opt);

/// Momentum SGD with decoupled weight decay at the current cosine rate, then
/// the EMA shadow update. Non-finite gradients throw and leave params intact.
void sgd_step(ModelParams& params, const ModelParams& grads, OptimState& opt);

/// Forward pass through the EMA shadow weights.
ProbVector predict_ema(const OptimState& opt, const Sample& input);

}  // namespace adt
