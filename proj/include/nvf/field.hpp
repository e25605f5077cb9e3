#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nvf/workspace.hpp"

namespace nvf {

// Normalized (x, y, t) in [0,1]^3, align-corners convention.
struct Coord {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;
};

// Index k on an axis of n samples -> k/(n-1); a single-sample axis maps to 0.
double axis_coord(int index, int count);
void validate_coord(const Coord& c);

template <class S>
using Rgb = std::array<S, 3>;

enum class Activation : std::int32_t { relu = 0, sigmoid = 1 };

struct LatticeShape {
  int t = 2;
  int y = 2;
  int x = 2;
  bool operator==(const LatticeShape&) const = default;
};

struct FieldConfig {
  // Source video extent. Recorded in the parameter file so that rendering
  // and interpolation know the original frame grid.
  int frames = 1;
  int height = 2;
  int width = 2;

  int plane_x = 2;
  int plane_y = 2;
  int plane_t = 2;
  int channels = 12;

  std::vector<LatticeShape> lattices{{8, 16, 16}, {16, 32, 32}};
  int lattice_channels = 4;

  int decoder_layers = 3;
  int hidden_width = 64;
  Activation hidden_activation = Activation::relu;
  Activation output_activation = Activation::sigmoid;

  // Plane resolutions W/2, H/2, max(T, 16); everything else at defaults.
  static FieldConfig defaults_for(int frames, int height, int width);

  void validate() const;
  int feature_width() const { return 3 * channels + static_cast<int>(lattices.size()) * lattice_channels; }
  bool operator==(const FieldConfig&) const = default;
};

struct ArrayBlock {
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Offsets of every trainable array inside the flat parameter vector, in
// declaration order: three planes, lattice levels, then (W, b) per layer.
// Everything before `explicit_count` is a feature array; the rest is the
// decoder.
struct ParamLayout {
  ArrayBlock plane_xy;
  ArrayBlock plane_xt;
  ArrayBlock plane_yt;
  std::vector<ArrayBlock> lattices;
  std::vector<ArrayBlock> weights;
  std::vector<ArrayBlock> biases;
  std::vector<int> widths;  // widths[0] = feature width, widths.back() = 3
  std::size_t explicit_count = 0;
  std::size_t total = 0;

  explicit ParamLayout(const FieldConfig& config);
};

template <class S>
class FieldParams {
 public:
  explicit FieldParams(FieldConfig config);

  const FieldConfig& config() const { return config_; }
  const ParamLayout& layout() const { return layout_; }

  std::span<S> values() { return values_; }
  std::span<const S> values() const { return values_; }
  std::span<S> block(const ArrayBlock& b) { return std::span<S>(values_).subspan(b.offset, b.size); }
  std::span<const S> block(const ArrayBlock& b) const {
    return std::span<const S>(values_).subspan(b.offset, b.size);
  }

  std::size_t parameter_count() const { return values_.size(); }

  template <class U>
  FieldParams<U> cast() const {
    FieldParams<U> out(config_);
    auto dst = out.values();
    for (std::size_t i = 0; i < values_.size(); ++i) dst[i] = static_cast<U>(values_[i]);
    return out;
  }

 private:
  FieldConfig config_;
  ParamLayout layout_;
  AlignedVector<S> values_;
};

template <class S>
struct GradientBuffer {
  AlignedVector<S> values;

  explicit GradientBuffer(std::size_t count) : values(count, S(0)) {}
  explicit GradientBuffer(const FieldParams<S>& params) : values(params.parameter_count(), S(0)) {}
  void zero();
  bool all_finite() const;
};

FieldParams<float> init_params(const FieldConfig& config, std::uint64_t seed);

// Per lookup table (xy, xt, yt planes, then lattice levels), the interpolation
// weights of the contributing vertices for coordinate c.
std::vector<std::vector<double>> interpolation_weights(const FieldConfig& config, const Coord& c);

template <class S>
void sample_features(const FieldParams<S>& params, const Coord& c, std::span<S> out);

template <class S>
Rgb<S> decode(const FieldParams<S>& params, std::span<const S> features);

template <class S>
std::vector<Rgb<S>> forward(const FieldParams<S>& params, std::span<const Coord> batch);

template <class S>
void backward(const FieldParams<S>& params, std::span<const Coord> batch, std::span<const Rgb<S>> upstream,
              GradientBuffer<S>& out);

// Batched evaluation with activations retained for backpropagation. All
// matrices are column-major with one column per sample.
// The batch is padded with zero-feature columns to a multiple of
// kColumnPad so that every real column takes the same matrix-kernel path;
// a sample's output then does not depend on its position in the batch.
inline constexpr int kColumnPad = 16;

template <class S>
struct ForwardCache {
  int count = 0;
  int stride = 0;  // padded column count
  Buffer<S> features;
  std::vector<Buffer<S>> activations;  // one per layer; the last one is the rgb output

  std::span<const S> output() const { return std::span<const S>(activations.back()).first(std::size_t(3) * count); }
};

template <class S>
void forward_batch(const FieldParams<S>& params, std::span<const Coord> batch, ForwardCache<S>& cache);

// `upstream` is dLoss/dRgb laid out 3 x count.
template <class S>
void backward_batch(const FieldParams<S>& params, std::span<const Coord> batch, const ForwardCache<S>& cache,
                    std::span<const S> upstream, GradientBuffer<S>& out);

// Called once per shard with the rendered rgb (3 x count) for batch entries
// [first, first + count). Writes dLoss/dRgb into `upstream` and returns that
// shard's contribution to the loss.
template <class S>
using LossGradientFn = std::function<double(std::size_t first, std::span<const S> rgb, std::span<S> upstream)>;

// Forward, loss and backward over `shards` contiguous slices of the batch.
// Each shard owns a private gradient buffer; buffers and loss partials are
// merged in shard order so the result depends only on the shard count.
template <class S>
double accumulate_gradients(const FieldParams<S>& params, std::span<const Coord> batch, const LossGradientFn<S>& loss,
                            GradientBuffer<S>& out, int shards = 1);

// Pure batched evaluation split into `shards` slices (one worker each).
template <class S>
std::vector<Rgb<S>> evaluate(const FieldParams<S>& params, std::span<const Coord> batch, int shards = 1);

struct AdamConfig {
  double lr_explicit = 1e-2;
  double lr_implicit = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double epsilon = 1e-15;
};

template <class S>
struct AdamState {
  AdamConfig config;
  AlignedVector<S> first_moment;
  AlignedVector<S> second_moment;
  std::int64_t step = 0;

  AdamState(std::size_t count, AdamConfig cfg = {})
      : config(cfg), first_moment(count, S(0)), second_moment(count, S(0)) {}
};

template <class S>
void adam_step(FieldParams<S>& params, GradientBuffer<S>& grads, AdamState<S>& state);

std::vector<std::uint8_t> serialize(const FieldParams<float>& params);
FieldParams<float> deserialize(std::span<const std::uint8_t> bytes);
void save_params(const FieldParams<float>& params, const std::filesystem::path& path);
FieldParams<float> load_params(const std::filesystem::path& path);

extern template class FieldParams<float>;
extern template class FieldParams<double>;

}  // namespace nvf
