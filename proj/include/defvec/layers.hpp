#pragma once

// Forward and backward passes for the autoencoder's building blocks.
//
// Convolutions are fixed at 3x3 kernels, stride 1, padding 1, so every layer
// preserves H x W. Spatial resolution changes only through 2x2 average pooling
// and 2x nearest-neighbour upsampling. All reductions run in a fixed loop
// order, so results are bit-reproducible for a given numeric type.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "defvec/error.hpp"
#include "defvec/tensor.hpp"

namespace defvec {

inline constexpr std::size_t kKernel = 3;
inline constexpr std::size_t kKernelArea = kKernel * kKernel;

enum class LayerKind : std::uint8_t { conv = 0, conv_transpose = 1 };
enum class Activation : std::uint8_t { none = 0, relu = 1, sigmoid = 2 };

/// Weights are laid out (out_ch, in_ch, 3, 3) for both kinds. A transposed
/// convolution with stride 1 and padding 1 equals a convolution with the
/// kernel rotated by 180 degrees; the rotation is applied on the fly.
template <typename T>
struct ConvLayer {
  LayerKind kind = LayerKind::conv;
  Activation activation = Activation::none;
  std::size_t in_ch = 0;
  std::size_t out_ch = 0;
  std::vector<T> weights;
  std::vector<T> bias;

  ConvLayer() = default;
  ConvLayer(LayerKind k, Activation a, std::size_t in, std::size_t out)
      : kind(k), activation(a), in_ch(in), out_ch(out), weights(out * in * kKernelArea, T(0)), bias(out, T(0)) {}

  T& weight(std::size_t o, std::size_t c, std::size_t u, std::size_t v) {
    return weights[((o * in_ch + c) * kKernel + u) * kKernel + v];
  }
  T weight(std::size_t o, std::size_t c, std::size_t u, std::size_t v) const {
    return weights[((o * in_ch + c) * kKernel + u) * kKernel + v];
  }

  /// Index into `weights` of the tap applied at kernel offset (u, v).
  std::size_t tap_index(std::size_t o, std::size_t c, std::size_t u, std::size_t v) const {
    if (kind == LayerKind::conv_transpose) {
      u = kKernel - 1 - u;
      v = kKernel - 1 - v;
    }
    return ((o * in_ch + c) * kKernel + u) * kKernel + v;
  }

  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

template <typename T>
struct ConvGradients {
  Tensor4<T> input;
  std::vector<T> weights;
  std::vector<T> bias;
};

template <typename T>
T activate(Activation a, T x) {
  switch (a) {
    case Activation::relu:
      return x > T(0) ? x : T(0);
    case Activation::sigmoid:
      return T(1) / (T(1) + std::exp(-x));
    case Activation::none:
      break;
  }
  return x;
}

/// Derivative expressed through the activation's output.
template <typename T>
T activation_slope(Activation a, T y) {
  switch (a) {
    case Activation::relu:
      return y > T(0) ? T(1) : T(0);
    case Activation::sigmoid:
      return y * (T(1) - y);
    case Activation::none:
      break;
  }
  return T(1);
}

template <typename T>
Tensor4<T> activation_forward(const Tensor4<T>& x, Activation a) {
  Tensor4<T> y = x;
  for (auto& v : y.values()) v = activate(a, v);
  return y;
}

template <typename T>
Tensor4<T> activation_backward(const Tensor4<T>& y, const Tensor4<T>& grad_y, Activation a) {
  if (y.shape() != grad_y.shape()) {
    throw Error("activation gradient shape " + shape_string(grad_y.shape()) + " does not match " +
                shape_string(y.shape()));
  }
  Tensor4<T> g = grad_y;
  for (std::size_t i = 0; i < g.size(); ++i) g.values()[i] *= activation_slope(a, y.values()[i]);
  return g;
}

namespace detail {

template <typename T>
void check_conv_input(const Tensor4<T>& x, const ConvLayer<T>& layer) {
  if (x.channels() != layer.in_ch || x.size() == 0) {
    throw Error("conv input shape " + shape_string(x.shape()) + " incompatible with layer " +
                std::to_string(layer.out_ch) + "x" + std::to_string(layer.in_ch) + "x3x3");
  }
}

/// Copies sample b of x into a zero-padded (C, H+2, W+2) buffer.
template <typename T>
void pad_sample(const Tensor4<T>& x, std::size_t b, std::vector<T>& padded) {
  const auto h = x.height(), w = x.width(), pw = w + 2;
  padded.assign(x.channels() * (h + 2) * pw, T(0));
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const T* src = x.plane(b, c);
    T* dst = padded.data() + c * (h + 2) * pw;
    for (std::size_t i = 0; i < h; ++i) std::copy(src + i * w, src + (i + 1) * w, dst + (i + 1) * pw + 1);
  }
}

}  // namespace detail

/// Convolution (or transposed convolution) followed by the layer's activation.
template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& x, const ConvLayer<T>& layer) {
  detail::check_conv_input(x, layer);
  const auto n = x.batch(), h = x.height(), w = x.width(), pw = w + 2;
  Tensor4<T> y(n, layer.out_ch, h, w);
  std::vector<T> padded;
  for (std::size_t b = 0; b < n; ++b) {
    detail::pad_sample(x, b, padded);
    for (std::size_t o = 0; o < layer.out_ch; ++o) {
      T* out = y.plane(b, o);
      std::fill(out, out + h * w, layer.bias[o]);
      for (std::size_t c = 0; c < layer.in_ch; ++c) {
        const T* in = padded.data() + c * (h + 2) * pw;
        for (std::size_t u = 0; u < kKernel; ++u) {
          for (std::size_t v = 0; v < kKernel; ++v) {
            const T tap = layer.weights[layer.tap_index(o, c, u, v)];
            for (std::size_t i = 0; i < h; ++i) {
              const T* row = in + (i + u) * pw + v;
              T* dst = out + i * w;
              for (std::size_t j = 0; j < w; ++j) dst[j] += tap * row[j];
            }
          }
        }
      }
      if (layer.activation != Activation::none) {
        for (std::size_t k = 0; k < h * w; ++k) out[k] = activate(layer.activation, out[k]);
      }
    }
  }
  return y;
}

/// Gradients of conv2d_forward given its input, its output and dL/d(output).
template <typename T>
ConvGradients<T> conv2d_backward(const Tensor4<T>& x, const ConvLayer<T>& layer, const Tensor4<T>& y,
                                 const Tensor4<T>& grad_y) {
  detail::check_conv_input(x, layer);
  const auto n = x.batch(), h = x.height(), w = x.width(), pw = w + 2;
  const typename Tensor4<T>::Shape expected{n, layer.out_ch, h, w};
  if (grad_y.shape() != expected || y.shape() != expected) {
    throw Error("conv output gradient shape " + shape_string(grad_y.shape()) + " does not match " +
                shape_string(expected));
  }
  const Tensor4<T> grad_pre = activation_backward(y, grad_y, layer.activation);

  ConvGradients<T> grads{Tensor4<T>(x.shape()), std::vector<T>(layer.weights.size(), T(0)),
                         std::vector<T>(layer.bias.size(), T(0))};
  std::vector<T> padded;
  std::vector<T> grad_padded;
  for (std::size_t b = 0; b < n; ++b) {
    detail::pad_sample(x, b, padded);
    grad_padded.assign(padded.size(), T(0));
    for (std::size_t o = 0; o < layer.out_ch; ++o) {
      const T* g = grad_pre.plane(b, o);
      T bias_sum = T(0);
      for (std::size_t k = 0; k < h * w; ++k) bias_sum += g[k];
      grads.bias[o] += bias_sum;
      for (std::size_t c = 0; c < layer.in_ch; ++c) {
        const T* in = padded.data() + c * (h + 2) * pw;
        T* gin = grad_padded.data() + c * (h + 2) * pw;
        for (std::size_t u = 0; u < kKernel; ++u) {
          for (std::size_t v = 0; v < kKernel; ++v) {
            const auto idx = layer.tap_index(o, c, u, v);
            const T tap = layer.weights[idx];
            T acc = T(0);
            for (std::size_t i = 0; i < h; ++i) {
              const T* row = in + (i + u) * pw + v;
              T* grow = gin + (i + u) * pw + v;
              const T* gr = g + i * w;
              for (std::size_t j = 0; j < w; ++j) {
                acc += gr[j] * row[j];
                grow[j] += tap * gr[j];
              }
            }
            grads.weights[idx] += acc;
          }
        }
      }
    }
    for (std::size_t c = 0; c < layer.in_ch; ++c) {
      const T* src = grad_padded.data() + c * (h + 2) * pw;
      T* dst = grads.input.plane(b, c);
      for (std::size_t i = 0; i < h; ++i) std::copy(src + (i + 1) * pw + 1, src + (i + 1) * pw + 1 + w, dst + i * w);
    }
  }
  return grads;
}

/// Recomputes the forward output when the caller did not keep it.
template <typename T>
ConvGradients<T> conv2d_backward(const Tensor4<T>& x, const ConvLayer<T>& layer, const Tensor4<T>& grad_y) {
  return conv2d_backward(x, layer, conv2d_forward(x, layer), grad_y);
}

template <typename T>
Tensor4<T> avgpool2_forward(const Tensor4<T>& x) {
  if (x.height() % 2 != 0 || x.width() % 2 != 0) {
    throw Error("average pooling needs even spatial dims, got " + shape_string(x.shape()));
  }
  const auto oh = x.height() / 2, ow = x.width() / 2;
  Tensor4<T> y(x.batch(), x.channels(), oh, ow);
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
          const T sum = x(b, c, 2 * i, 2 * j) + x(b, c, 2 * i, 2 * j + 1) + x(b, c, 2 * i + 1, 2 * j) +
                        x(b, c, 2 * i + 1, 2 * j + 1);
          y(b, c, i, j) = sum * T(0.25);
        }
      }
    }
  }
  return y;
}

template <typename T>
Tensor4<T> avgpool2_backward(const Tensor4<T>& grad_y, const typename Tensor4<T>::Shape& input_shape) {
  const typename Tensor4<T>::Shape expected{input_shape[0], input_shape[1], input_shape[2] / 2, input_shape[3] / 2};
  if (input_shape[2] % 2 != 0 || input_shape[3] % 2 != 0 || grad_y.shape() != expected) {
    throw Error("average pooling gradient shape " + shape_string(grad_y.shape()) + " incompatible with input " +
                shape_string(input_shape));
  }
  Tensor4<T> g(input_shape);
  for (std::size_t b = 0; b < input_shape[0]; ++b) {
    for (std::size_t c = 0; c < input_shape[1]; ++c) {
      for (std::size_t i = 0; i < input_shape[2]; ++i) {
        for (std::size_t j = 0; j < input_shape[3]; ++j) g(b, c, i, j) = grad_y(b, c, i / 2, j / 2) * T(0.25);
      }
    }
  }
  return g;
}

template <typename T>
Tensor4<T> upsample2_forward(const Tensor4<T>& x) {
  Tensor4<T> y(x.batch(), x.channels(), x.height() * 2, x.width() * 2);
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      for (std::size_t i = 0; i < y.height(); ++i) {
        for (std::size_t j = 0; j < y.width(); ++j) y(b, c, i, j) = x(b, c, i / 2, j / 2);
      }
    }
  }
  return y;
}

template <typename T>
Tensor4<T> upsample2_backward(const Tensor4<T>& grad_y) {
  if (grad_y.height() % 2 != 0 || grad_y.width() % 2 != 0) {
    throw Error("upsampling gradient needs even spatial dims, got " + shape_string(grad_y.shape()));
  }
  Tensor4<T> g(grad_y.batch(), grad_y.channels(), grad_y.height() / 2, grad_y.width() / 2);
  for (std::size_t b = 0; b < g.batch(); ++b) {
    for (std::size_t c = 0; c < g.channels(); ++c) {
      for (std::size_t i = 0; i < g.height(); ++i) {
        for (std::size_t j = 0; j < g.width(); ++j) {
          g(b, c, i, j) = grad_y(b, c, 2 * i, 2 * j) + grad_y(b, c, 2 * i, 2 * j + 1) +
                          grad_y(b, c, 2 * i + 1, 2 * j) + grad_y(b, c, 2 * i + 1, 2 * j + 1);
        }
      }
    }
  }
  return g;
}

inline constexpr double kBceEpsilon = 1e-7;

namespace detail {

template <typename T>
void check_same_shape(const Tensor4<T>& a, const Tensor4<T>& b, const char* what) {
  if (a.shape() != b.shape() || a.size() == 0) {
    throw Error(std::string(what) + ": shape " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

}  // namespace detail

/// Mean binary cross-entropy; reconstructions are clamped to [eps, 1 - eps].
template <typename T>
double bce_loss(const Tensor4<T>& recon, const Tensor4<T>& target) {
  detail::check_same_shape(recon, target, "bce_loss");
  double total = 0.0;
  for (std::size_t i = 0; i < recon.size(); ++i) {
    const double r = std::clamp(static_cast<double>(recon.values()[i]), kBceEpsilon, 1.0 - kBceEpsilon);
    const double t = target.values()[i];
    total -= t * std::log(r) + (1.0 - t) * std::log(1.0 - r);
  }
  return total / static_cast<double>(recon.size());
}

/// dL/d(recon) for bce_loss. Zero where the clamp is active.
template <typename T>
Tensor4<T> bce_backward(const Tensor4<T>& recon, const Tensor4<T>& target) {
  detail::check_same_shape(recon, target, "bce_backward");
  Tensor4<T> g(recon.shape());
  const double scale = 1.0 / static_cast<double>(recon.size());
  for (std::size_t i = 0; i < recon.size(); ++i) {
    const double r = recon.values()[i];
    if (r < kBceEpsilon || r > 1.0 - kBceEpsilon) continue;
    const double t = target.values()[i];
    g.values()[i] = static_cast<T>((r - t) / (r * (1.0 - r)) * scale);
  }
  return g;
}

}  // namespace defvec
