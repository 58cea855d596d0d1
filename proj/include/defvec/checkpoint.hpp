#pragma once

// Binary checkpoint, little-endian:
//
//   "DFVC" u32 version=1 u64 seed u32 layer_count
//   per layer: u8 kind u8 activation u32 in_ch u32 out_ch f32 weights[] f32 bias[]
//   u8 has_adam [u64 step, f32 m[] (all groups), f32 v[] (all groups)]
//
// Layers are written encoder first. Weights are (out_ch, in_ch, 3, 3) row-major.

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "defvec/autoencoder.hpp"
#include "defvec/error.hpp"
#include "defvec/io.hpp"

namespace defvec {

inline constexpr char kCheckpointMagic[4] = {'D', 'F', 'V', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Autoencoder<float> model;
  std::optional<AdamState<float>> adam;
};

inline void write_checkpoint(std::ostream& out, const Autoencoder<float>& model, const AdamState<float>* adam) {
  out.write(kCheckpointMagic, 4);
  io::write_le<std::uint32_t>(out, kCheckpointVersion);
  io::write_le<std::uint64_t>(out, model.seed);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.encoder.size() + model.decoder.size()));
  for (const auto* group : {&model.encoder, &model.decoder}) {
    for (const auto& layer : *group) {
      io::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(layer.kind));
      io::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(layer.activation));
      io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(layer.in_ch));
      io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(layer.out_ch));
      for (float w : layer.weights) io::write_f32(out, w);
      for (float b : layer.bias) io::write_f32(out, b);
    }
  }
  io::write_le<std::uint8_t>(out, adam ? 1 : 0);
  if (adam) {
    io::write_le<std::uint64_t>(out, adam->step);
    for (const auto& group : adam->m) {
      for (float x : group) io::write_f32(out, x);
    }
    for (const auto& group : adam->v) {
      for (float x : group) io::write_f32(out, x);
    }
  }
}

inline Checkpoint read_checkpoint(std::istream& in) {
  char magic[4] = {};
  if (!in.read(magic, 4) || std::string(magic, 4) != std::string(kCheckpointMagic, 4)) {
    throw ValidationError("not a defvec checkpoint");
  }
  const auto version = io::read_le<std::uint32_t>(in, "checkpoint version");
  if (version != kCheckpointVersion) {
    throw ValidationError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ckpt;
  ckpt.model.seed = io::read_le<std::uint64_t>(in, "checkpoint seed");
  const auto layer_count = io::read_le<std::uint32_t>(in, "layer count");
  if (layer_count == 0 || layer_count % 2 != 0 || layer_count > 64) {
    throw ValidationError("bad checkpoint layer count " + std::to_string(layer_count));
  }
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    const auto what = "layer " + std::to_string(l);
    const auto kind = io::read_le<std::uint8_t>(in, what);
    const auto activation = io::read_le<std::uint8_t>(in, what);
    const auto in_ch = io::read_le<std::uint32_t>(in, what);
    const auto out_ch = io::read_le<std::uint32_t>(in, what);
    if (kind > 1 || activation > 2 || in_ch == 0 || out_ch == 0 || in_ch > 4096 || out_ch > 4096) {
      throw ValidationError("corrupt descriptor for checkpoint " + what);
    }
    ConvLayer<float> layer(static_cast<LayerKind>(kind), static_cast<Activation>(activation), in_ch, out_ch);
    for (auto& w : layer.weights) w = io::read_f32(in, what + " weights");
    for (auto& b : layer.bias) b = io::read_f32(in, what + " bias");
    const bool encoder_half = l < layer_count / 2;
    if (encoder_half != (layer.kind == LayerKind::conv)) {
      throw ValidationError("checkpoint layer order is not encoder convs followed by decoder transposed convs");
    }
    (encoder_half ? ckpt.model.encoder : ckpt.model.decoder).push_back(std::move(layer));
  }
  const auto& enc = ckpt.model.encoder;
  const auto& dec = ckpt.model.decoder;
  for (std::size_t l = 0; l + 1 < enc.size(); ++l) {
    if (enc[l].out_ch != enc[l + 1].in_ch || dec[l].out_ch != dec[l + 1].in_ch) {
      throw ValidationError("checkpoint channel plan is not a chain");
    }
  }
  if (enc.back().out_ch != dec.front().in_ch || dec.back().out_ch != enc.front().in_ch) {
    throw ValidationError("checkpoint decoder does not mirror the encoder");
  }

  const auto has_adam = io::read_le<std::uint8_t>(in, "adam flag");
  if (has_adam > 1) throw ValidationError("corrupt adam flag in checkpoint");
  if (has_adam) {
    auto adam = AdamState<float>::zeros_like(parameter_sizes(ckpt.model), 0.0);
    adam.step = io::read_le<std::uint64_t>(in, "adam step");
    for (auto& group : adam.m) {
      for (auto& x : group) x = io::read_f32(in, "adam first moments");
    }
    for (auto& group : adam.v) {
      for (auto& x : group) x = io::read_f32(in, "adam second moments");
    }
    ckpt.adam = std::move(adam);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw ValidationError("trailing bytes after checkpoint");
  return ckpt;
}

inline void save_checkpoint(const std::string& path, const Autoencoder<float>& model, const AdamState<float>* adam) {
  auto out = io::open_output(path, true);
  write_checkpoint(out, model, adam);
  if (!out) throw Error("failed writing checkpoint '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  auto in = io::open_input(path, true);
  try {
    return read_checkpoint(in);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(e.what()) + ": '" + path + "'");
  }
}

}  // namespace defvec
