#include "adt/model.hpp"

#include <cmath>
#include <random>

#include "adt/errors.hpp"
#include "adt/prob.hpp"

namespace adt {
namespace {

Matrix he_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const Real limit = std::sqrt(6.0 / static_cast<Real>(cols));
  std::uniform_real_distribution<Real> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  }
  return m;
}

Vector relu(const Vector& v) { return v.cwiseMax(0.0); }

ProbVector softmax(const Vector& logits) {
  const Real zmax = logits.maxCoeff();
  Vector e = (logits.array() - zmax).exp();
  return e / e.sum();
}

// d(loss)/d(logits) from d(loss)/d(probs) through the softmax Jacobian.
Vector softmax_backward(const ProbVector& probs, const Vector& dprobs) {
  const Real inner = probs.dot(dprobs);
  return probs.array() * (dprobs.array() - inner);
}

Vector conv_forward(const ConvLayer& conv, const Sample& img) {
  const int k = conv.kernel;
  const int half = k / 2;
  const int f_count = conv.filters();
  Vector out(static_cast<Eigen::Index>(f_count) * img.height * img.width);
  for (int f = 0; f < f_count; ++f) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        Real acc = conv.bias[f];
        for (int c = 0; c < conv.in_channels; ++c) {
          for (int ky = 0; ky < k; ++ky) {
            const int sy = y + ky - half;
            if (sy < 0 || sy >= img.height) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int sx = x + kx - half;
              if (sx < 0 || sx >= img.width) continue;
              acc += conv.weight(f, (c * k + ky) * k + kx) * img.at(c, sy, sx);
            }
          }
        }
        out[(static_cast<Eigen::Index>(f) * img.height + y) * img.width + x] = acc;
      }
    }
  }
  return out;
}

void conv_backward(const ConvLayer& conv, const Sample& img,
                   const Vector& conv_pre, const Vector& d_post,
                   ConvLayer& grad) {
  const int k = conv.kernel;
  const int half = k / 2;
  const int f_count = conv.filters();
  for (int f = 0; f < f_count; ++f) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const Eigen::Index idx =
            (static_cast<Eigen::Index>(f) * img.height + y) * img.width + x;
        if (conv_pre[idx] <= 0.0) continue;  // ReLU mask
        const Real g = d_post[idx];
        if (g == 0.0) continue;
        grad.bias[f] += g;
        for (int c = 0; c < conv.in_channels; ++c) {
          for (int ky = 0; ky < k; ++ky) {
            const int sy = y + ky - half;
            if (sy < 0 || sy >= img.height) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int sx = x + kx - half;
              if (sx < 0 || sx >= img.width) continue;
              grad.weight(f, (c * k + ky) * k + kx) += g * img.at(c, sy, sx);
            }
          }
        }
      }
    }
  }
}

void check_input(const ModelParams& p, const Sample& input) {
  if (p.conv) {
    if (input.kind != SampleKind::Image) {
      throw DimensionError("forward: conv model requires an image input");
    }
    if (input.height != p.conv->height || input.width != p.conv->width ||
        input.channels != p.conv->in_channels) {
      throw DimensionError("forward: image shape does not match conv layer");
    }
  } else if (input.dim() != p.dense.front().weight.cols()) {
    throw DimensionError("forward: input dimension does not match first layer");
  }
}

}  // namespace

Eigen::Index ModelParams::parameter_count() const {
  Eigen::Index n = 0;
  if (conv) n += conv->weight.size() + conv->bias.size();
  for (const DenseLayer& l : dense) n += l.weight.size() + l.bias.size();
  return n;
}

ModelParams make_mlp(int input_dim, const std::vector<int>& hidden,
                     int num_classes, std::uint64_t seed) {
  if (input_dim < 1 || num_classes < 2) {
    throw InvalidParameterError("make_mlp: bad dimensions");
  }
  std::mt19937_64 rng(seed);
  ModelParams p;
  int in = input_dim;
  for (int h : hidden) {
    p.dense.push_back({he_uniform(h, in, rng), Vector::Zero(h)});
    in = h;
  }
  p.dense.push_back({he_uniform(num_classes, in, rng), Vector::Zero(num_classes)});
  return p;
}

ModelParams make_conv_mlp(int height, int width, int channels, int filters,
                          int kernel, const std::vector<int>& hidden,
                          int num_classes, std::uint64_t seed) {
  if (kernel % 2 == 0) {
    throw InvalidParameterError("make_conv_mlp: kernel must be odd");
  }
  std::mt19937_64 rng(seed);
  ModelParams p;
  ConvLayer conv;
  conv.in_channels = channels;
  conv.height = height;
  conv.width = width;
  conv.kernel = kernel;
  conv.weight = he_uniform(filters, channels * kernel * kernel, rng);
  conv.bias = Vector::Zero(filters);
  p.conv = std::move(conv);
  int in = filters * height * width;
  for (int h : hidden) {
    p.dense.push_back({he_uniform(h, in, rng), Vector::Zero(h)});
    in = h;
  }
  p.dense.push_back({he_uniform(num_classes, in, rng), Vector::Zero(num_classes)});
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  if (z.conv) {
    z.conv->weight.setZero();
    z.conv->bias.setZero();
  }
  for (DenseLayer& l : z.dense) {
    l.weight.setZero();
    l.bias.setZero();
  }
  return z;
}

bool all_finite(const ModelParams& p) {
  if (p.conv && (!p.conv->weight.allFinite() || !p.conv->bias.allFinite())) {
    return false;
  }
  for (const DenseLayer& l : p.dense) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

void axpy(ModelParams& acc, const ModelParams& g, Real scale) {
  if (acc.conv) {
    acc.conv->weight += scale * g.conv->weight;
    acc.conv->bias += scale * g.conv->bias;
  }
  for (size_t i = 0; i < acc.dense.size(); ++i) {
    acc.dense[i].weight += scale * g.dense[i].weight;
    acc.dense[i].bias += scale * g.dense[i].bias;
  }
}

Vector flatten(const ModelParams& p) {
  Vector flat(p.parameter_count());
  Eigen::Index off = 0;
  auto put = [&](const auto& block) {
    for (Eigen::Index i = 0; i < block.size(); ++i) flat[off++] = block(i);
  };
  if (p.conv) {
    put(p.conv->weight.reshaped());
    put(p.conv->bias);
  }
  for (const DenseLayer& l : p.dense) {
    put(l.weight.reshaped());
    put(l.bias);
  }
  return flat;
}

void assign_from_flat(ModelParams& p, const Eigen::Ref<const Vector>& flat) {
  if (flat.size() != p.parameter_count()) {
    throw DimensionError("assign_from_flat: size mismatch");
  }
  Eigen::Index off = 0;
  auto take = [&](auto&& block) {
    for (Eigen::Index i = 0; i < block.size(); ++i) block(i) = flat[off++];
  };
  if (p.conv) {
    take(p.conv->weight.reshaped());
    take(p.conv->bias);
  }
  for (DenseLayer& l : p.dense) {
    take(l.weight.reshaped());
    take(l.bias);
  }
}

ForwardTrace forward_trace(const ModelParams& p, const Sample& input) {
  check_input(p, input);
  ForwardTrace t;
  if (p.conv) {
    t.conv_pre = conv_forward(*p.conv, input);
    t.dense_input = relu(t.conv_pre);
  } else {
    t.dense_input = input.data;
  }
  Vector act = t.dense_input;
  t.pre.reserve(p.dense.size());
  for (size_t l = 0; l < p.dense.size(); ++l) {
    Vector z = p.dense[l].weight * act + p.dense[l].bias;
    t.pre.push_back(z);
    if (l + 1 < p.dense.size()) act = relu(z);
  }
  t.probs = softmax(t.pre.back());
  if (!t.probs.allFinite()) {
    throw NumericalError("forward: non-finite model output");
  }
  return t;
}

ProbVector forward(const ModelParams& p, const Sample& input) {
  return forward_trace(p, input).probs;
}

ModelParams backward(const ModelParams& p, const Sample& input,
                     const ForwardTrace& trace,
                     const Eigen::Ref<const Vector>& dloss_dprobs) {
  if (dloss_dprobs.size() != trace.probs.size()) {
    throw DimensionError("backward: gradient length != class count");
  }
  ModelParams grad = zeros_like(p);
  Vector delta = softmax_backward(trace.probs, dloss_dprobs);
  for (int l = static_cast<int>(p.dense.size()) - 1; l >= 0; --l) {
    const Vector& below =
        l == 0 ? trace.dense_input
                : relu(trace.pre[static_cast<size_t>(l) - 1]);
    grad.dense[l].weight = delta * below.transpose();
    grad.dense[l].bias = delta;
    if (l > 0) {
      Vector d_act = p.dense[l].weight.transpose() * delta;
      delta = (trace.pre[static_cast<size_t>(l) - 1].array() > 0.0)
                  .select(d_act, 0.0);
    } else if (p.conv) {
      Vector d_post = p.dense[0].weight.transpose() * delta;
      conv_backward(*p.conv, input, trace.conv_pre, d_post, *grad.conv);
    }
  }
  return grad;
}

OptimState make_optim(const ModelParams& params, Real base_lr,
                      Real weight_decay, Real momentum, Real ema_decay,
                      long total_steps) {
  if (total_steps < 1) {
    throw InvalidParameterError("make_optim: total_steps must be positive");
  }
  OptimState opt;
  opt.base_lr = base_lr;
  opt.weight_decay = weight_decay;
  opt.momentum = momentum;
  opt.ema_decay = ema_decay;
  opt.total_steps = total_steps;
  opt.velocity = zeros_like(params);
  opt.ema_params = params;
  return opt;
}

Real cosine_lr(const OptimState& opt) {
  const Real frac = static_cast<Real>(std::min(opt.step_count, opt.total_steps)) /
                    static_cast<Real>(opt.total_steps);
  constexpr Real kPi = 3.14159265358979323846;
  return opt.base_lr * std::cos(7.0 * kPi * frac / 16.0);
}

void sgd_step(ModelParams& params, const ModelParams& grads, OptimState& opt) {
  if (!all_finite(grads)) {
    throw NumericalError("sgd_step: non-finite gradient");
  }
  const Real lr = cosine_lr(opt);
  const Real shrink = 1.0 - lr * opt.weight_decay;
  auto update = [&](auto& value, auto& vel, const auto& g) {
    vel = opt.momentum * vel + g;
    value = shrink * value - lr * vel;
  };
  if (params.conv) {
    update(params.conv->weight, opt.velocity.conv->weight, grads.conv->weight);
    update(params.conv->bias, opt.velocity.conv->bias, grads.conv->bias);
  }
  for (size_t i = 0; i < params.dense.size(); ++i) {
    update(params.dense[i].weight, opt.velocity.dense[i].weight,
           grads.dense[i].weight);
    update(params.dense[i].bias, opt.velocity.dense[i].bias,
           grads.dense[i].bias);
  }
  opt.step_count += 1;
  const Real d = opt.ema_decay;
  if (opt.ema_params.conv) {
    opt.ema_params.conv->weight =
        d * opt.ema_params.conv->weight + (1.0 - d) * params.conv->weight;
    opt.ema_params.conv->bias =
        d * opt.ema_params.conv->bias + (1.0 - d) * params.conv->bias;
  }
  for (size_t i = 0; i < params.dense.size(); ++i) {
    opt.ema_params.dense[i].weight = d * opt.ema_params.dense[i].weight +
                                     (1.0 - d) * params.dense[i].weight;
    opt.ema_params.dense[i].bias =
        d * opt.ema_params.dense[i].bias + (1.0 - d) * params.dense[i].bias;
  }
}

ProbVector predict_ema(const OptimState& opt, const Sample& input) {
  return forward(opt.ema_params, input);
}

}  // namespace adt
