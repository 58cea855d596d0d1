#pragma once

// Convolutional autoencoder: five conv->ReLU->avgpool encoder blocks and five
// upsample->convT->activation decoder blocks, trained with mean BCE and Adam.
//
// Spatial trace for a 32x32 input: 32 -> 16 -> 8 -> 4 -> 2 -> 1 on the way
// down, mirrored on the way up. With the default channel plan the bottleneck
// is 32x1x1, i.e. a 32-dimensional latent per image.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "defvec/error.hpp"
#include "defvec/image.hpp"
#include "defvec/layers.hpp"
#include "defvec/tensor.hpp"

namespace defvec {

/// Encoder channel plan; the decoder mirrors it.
inline const std::vector<std::size_t> kDefaultChannels = {3, 8, 16, 32, 32, 32};

template <typename T>
struct Autoencoder {
  std::vector<ConvLayer<T>> encoder;
  std::vector<ConvLayer<T>> decoder;
  std::uint64_t seed = 0;

  std::size_t latent_channels() const { return encoder.empty() ? 0 : encoder.back().out_ch; }
  std::size_t input_channels() const { return encoder.empty() ? 0 : encoder.front().in_ch; }
  std::size_t depth() const { return encoder.size(); }

  friend bool operator==(const Autoencoder&, const Autoencoder&) = default;
};

/// Weights and biases drawn from uniform(-k, k), k = 1/sqrt(in_ch * 9), in
/// layer order (encoder then decoder, weights before bias).
template <typename T>
Autoencoder<T> make_autoencoder(std::uint64_t seed, const std::vector<std::size_t>& channels = kDefaultChannels) {
  if (channels.size() < 2) throw ValidationError("channel plan needs at least two entries");
  Autoencoder<T> model;
  model.seed = seed;
  const auto layers = channels.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    model.encoder.emplace_back(LayerKind::conv, Activation::relu, channels[l], channels[l + 1]);
  }
  for (std::size_t l = 0; l < layers; ++l) {
    const auto in = channels[layers - l];
    const auto out = channels[layers - l - 1];
    model.decoder.emplace_back(LayerKind::conv_transpose, l + 1 == layers ? Activation::sigmoid : Activation::relu,
                               in, out);
  }

  std::mt19937_64 rng(seed);
  const auto init = [&rng](ConvLayer<T>& layer) {
    const double k = 1.0 / std::sqrt(static_cast<double>(layer.in_ch * kKernelArea));
    std::uniform_real_distribution<double> dist(-k, k);
    for (auto& w : layer.weights) w = static_cast<T>(dist(rng));
    for (auto& b : layer.bias) b = static_cast<T>(dist(rng));
  };
  for (auto& layer : model.encoder) init(layer);
  for (auto& layer : model.decoder) init(layer);
  return model;
}

template <typename U, typename T>
ConvLayer<U> convert_layer(const ConvLayer<T>& layer) {
  ConvLayer<U> out(layer.kind, layer.activation, layer.in_ch, layer.out_ch);
  std::transform(layer.weights.begin(), layer.weights.end(), out.weights.begin(), [](T v) { return static_cast<U>(v); });
  std::transform(layer.bias.begin(), layer.bias.end(), out.bias.begin(), [](T v) { return static_cast<U>(v); });
  return out;
}

template <typename U, typename T>
Autoencoder<U> convert_model(const Autoencoder<T>& model) {
  Autoencoder<U> out;
  out.seed = model.seed;
  for (const auto& layer : model.encoder) out.encoder.push_back(convert_layer<U>(layer));
  for (const auto& layer : model.decoder) out.decoder.push_back(convert_layer<U>(layer));
  return out;
}

/// Every parameter array in canonical order: per layer (encoder first) the
/// weights, then the bias.
template <typename T>
std::vector<std::span<T>> parameter_spans(Autoencoder<T>& model) {
  std::vector<std::span<T>> spans;
  for (auto* group : {&model.encoder, &model.decoder}) {
    for (auto& layer : *group) {
      spans.emplace_back(layer.weights);
      spans.emplace_back(layer.bias);
    }
  }
  return spans;
}

template <typename T>
std::vector<std::size_t> parameter_sizes(const Autoencoder<T>& model) {
  std::vector<std::size_t> sizes;
  for (const auto* group : {&model.encoder, &model.decoder}) {
    for (const auto& layer : *group) {
      sizes.push_back(layer.weights.size());
      sizes.push_back(layer.bias.size());
    }
  }
  return sizes;
}

/// Activations kept by the forward pass for backpropagation.
template <typename T>
struct ForwardTrace {
  std::vector<Tensor4<T>> encoder_inputs;
  std::vector<Tensor4<T>> encoder_outputs;  // post-activation, pre-pool
  Tensor4<T> latent;
  std::vector<Tensor4<T>> decoder_inputs;  // upsampled
  std::vector<Tensor4<T>> decoder_outputs;
};

namespace detail {

template <typename T>
void check_encoder_input(const Autoencoder<T>& model, const Tensor4<T>& x) {
  const std::size_t factor = std::size_t{1} << model.depth();
  if (model.depth() == 0 || x.batch() == 0 || x.channels() != model.input_channels() || x.height() % factor != 0 ||
      x.width() % factor != 0 || x.height() == 0 || x.width() == 0) {
    throw Error("encoder input shape " + shape_string(x.shape()) + " is not Bx" +
                std::to_string(model.input_channels()) + "xHxW with H, W multiples of " + std::to_string(factor));
  }
}

template <typename T>
void check_decoder_input(const Autoencoder<T>& model, const Tensor4<T>& z) {
  if (model.decoder.empty() || z.batch() == 0 || z.channels() != model.decoder.front().in_ch || z.height() == 0 ||
      z.width() == 0) {
    throw Error("decoder input shape " + shape_string(z.shape()) + " does not have " +
                std::to_string(model.decoder.empty() ? 0 : model.decoder.front().in_ch) + " channels");
  }
}

}  // namespace detail

template <typename T>
Tensor4<T> encode(const Autoencoder<T>& model, const Tensor4<T>& x, ForwardTrace<T>* trace = nullptr) {
  detail::check_encoder_input(model, x);
  Tensor4<T> h = x;
  for (const auto& layer : model.encoder) {
    Tensor4<T> a = conv2d_forward(h, layer);
    Tensor4<T> pooled = avgpool2_forward(a);
    if (trace) {
      trace->encoder_inputs.push_back(std::move(h));
      trace->encoder_outputs.push_back(std::move(a));
    }
    h = std::move(pooled);
  }
  if (trace) trace->latent = h;
  return h;
}

template <typename T>
Tensor4<T> decode(const Autoencoder<T>& model, const Tensor4<T>& z, ForwardTrace<T>* trace = nullptr) {
  detail::check_decoder_input(model, z);
  Tensor4<T> h = z;
  for (const auto& layer : model.decoder) {
    Tensor4<T> up = upsample2_forward(h);
    h = conv2d_forward(up, layer);
    if (trace) {
      trace->decoder_inputs.push_back(std::move(up));
      trace->decoder_outputs.push_back(h);
    }
  }
  return h;
}

template <typename T>
struct ModelGradients {
  std::vector<std::vector<T>> params;  // parallel to parameter_spans()
  Tensor4<T> input;
  Tensor4<T> latent;
};

/// Backpropagates dL/d(reconstruction) through a recorded forward pass.
template <typename T>
ModelGradients<T> backward(const Autoencoder<T>& model, const ForwardTrace<T>& trace, const Tensor4<T>& grad_recon) {
  const auto depth = model.depth();
  std::vector<std::vector<T>> enc_params(2 * depth), dec_params(2 * depth);
  Tensor4<T> g = grad_recon;
  for (std::size_t l = model.decoder.size(); l-- > 0;) {
    auto grads = conv2d_backward(trace.decoder_inputs[l], model.decoder[l], trace.decoder_outputs[l], g);
    dec_params[2 * l] = std::move(grads.weights);
    dec_params[2 * l + 1] = std::move(grads.bias);
    g = upsample2_backward(grads.input);
  }
  ModelGradients<T> out;
  out.latent = g;
  for (std::size_t l = model.encoder.size(); l-- > 0;) {
    const auto g_act = avgpool2_backward(g, trace.encoder_outputs[l].shape());
    auto grads = conv2d_backward(trace.encoder_inputs[l], model.encoder[l], trace.encoder_outputs[l], g_act);
    enc_params[2 * l] = std::move(grads.weights);
    enc_params[2 * l + 1] = std::move(grads.bias);
    g = std::move(grads.input);
  }
  out.input = std::move(g);
  out.params = std::move(enc_params);
  for (auto& p : dec_params) out.params.push_back(std::move(p));
  return out;
}

/// One forward/backward pass of bce(decode(encode(x)), x).
template <typename T>
double reconstruction_step(const Autoencoder<T>& model, const Tensor4<T>& batch, ModelGradients<T>& grads) {
  ForwardTrace<T> trace;
  const auto recon = decode(model, encode(model, batch, &trace), &trace);
  const double loss = bce_loss(recon, batch);
  grads = backward(model, trace, bce_backward(recon, batch));
  return loss;
}

template <typename T>
struct AdamState {
  std::uint64_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double lr = 0.001;

  static AdamState zeros_like(const std::vector<std::size_t>& sizes, double lr) {
    AdamState state;
    state.lr = lr;
    for (auto n : sizes) {
      state.m.emplace_back(n, T(0));
      state.v.emplace_back(n, T(0));
    }
    return state;
  }

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Adam with bias correction. Increments the step counter even when every
/// gradient is zero.
template <typename T>
void adam_step(std::span<const std::span<T>> params, const std::vector<std::vector<T>>& grads, AdamState<T>& state) {
  if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.v.size()) {
    throw Error("adam: parameter, gradient and moment group counts differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
  const T lr = static_cast<T>(state.lr), eps = static_cast<T>(state.epsilon);
  const T c1 = static_cast<T>(correction1), c2 = static_cast<T>(correction2);
  for (std::size_t group = 0; group < params.size(); ++group) {
    auto p = params[group];
    const auto& g = grads[group];
    auto& m = state.m[group];
    auto& v = state.v[group];
    if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size()) {
      throw Error("adam: shape mismatch in parameter group " + std::to_string(group));
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * g[i];
      v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
      const T m_hat = m[i] / c1;
      const T v_hat = v[i] / c2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

struct TrainConfig {
  std::size_t epochs = 25;
  double lr0 = 0.00215;
  std::size_t lr_halving_period = 5;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
};

/// lr0 * 2^-floor(epoch / period).
inline double learning_rate_at(const TrainConfig& cfg, std::size_t epoch) {
  const auto halvings = cfg.lr_halving_period == 0 ? 0 : epoch / cfg.lr_halving_period;
  return std::ldexp(cfg.lr0, -static_cast<int>(halvings));
}

struct EpochStats {
  std::size_t epoch = 0;
  double lr = 0;
  double mean_loss = 0;
};

/// Packs images[order[begin..end)] into a batch tensor.
template <typename T>
Tensor4<T> make_batch(std::span<const Image> images, std::span<const std::size_t> order) {
  Tensor4<T> batch(order.size(), kImageChannels, kImageSide, kImageSide);
  for (std::size_t b = 0; b < order.size(); ++b) {
    const auto& pixels = images[order[b]].pixels;
    std::transform(pixels.begin(), pixels.end(), batch.plane(b, 0), [](float v) { return static_cast<T>(v); });
  }
  return batch;
}

template <typename T>
Tensor4<T> make_batch(std::span<const Image> images) {
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  return make_batch<T>(images, order);
}

/// Mini-batch Adam on mean BCE. The image order is reshuffled every epoch by
/// a generator seeded with cfg.seed; the learning rate follows
/// learning_rate_at(). `state` carries Adam moments in and out.
template <typename T>
std::vector<EpochStats> train(Autoencoder<T>& model, std::span<const Image> images, const TrainConfig& cfg,
                              AdamState<T>& state, const std::function<void(const EpochStats&)>& on_epoch = {}) {
  if (images.empty()) throw ValidationError("training set is empty");
  if (cfg.batch_size == 0) throw ValidationError("batch size must be positive");
  if (state.m.empty()) state = AdamState<T>::zeros_like(parameter_sizes(model), cfg.lr0);

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<EpochStats> history;
  ModelGradients<T> grads;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    state.lr = learning_rate_at(cfg, epoch);
    double weighted_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const auto count = std::min(cfg.batch_size, order.size() - begin);
      const auto batch = make_batch<T>(images, std::span<const std::size_t>(order).subspan(begin, count));
      weighted_loss += reconstruction_step(model, batch, grads) * static_cast<double>(count);
      const auto params = parameter_spans(model);
      adam_step<T>(params, grads.params, state);
    }
    history.push_back({epoch, state.lr, weighted_loss / static_cast<double>(order.size())});
    if (on_epoch) on_epoch(history.back());
  }
  return history;
}

}  // namespace defvec
