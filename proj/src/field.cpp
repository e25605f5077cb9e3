#include "nvf/field.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <thread>

#include "nvf/error.hpp"

namespace nvf {

namespace {

template <class S>
using MatrixMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>>;
template <class S>
using ConstMatrixMap = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>>;
template <class S>
using WeightMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <class S>
using ConstWeightMap = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <class S>
using VectorMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>>;
template <class S>
using ConstVectorMap = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>;

struct AxisCell {
  int index;
  double frac;
};

AxisCell locate(double u, int resolution) {
  double pos = u * (resolution - 1);
  int i0 = std::min(static_cast<int>(std::floor(pos)), resolution - 2);
  i0 = std::max(i0, 0);
  return {i0, pos - i0};
}

// Calls fn(param_offset, feature_slot, width, weight) for every vertex that
// contributes to the features of c.
template <class Fn>
void visit_lookups(const FieldConfig& cfg, const ParamLayout& layout, const Coord& c, Fn&& fn) {
  const int ch = cfg.channels;
  auto plane = [&](const ArrayBlock& block, double u, int ru, double v, int rv, int slot) {
    // Plane stored [v][u][ch].
    AxisCell cu = locate(u, ru);
    AxisCell cv = locate(v, rv);
    for (int dv = 0; dv < 2; ++dv) {
      double wv = dv ? cv.frac : 1.0 - cv.frac;
      for (int du = 0; du < 2; ++du) {
        double wu = du ? cu.frac : 1.0 - cu.frac;
        std::size_t cell = static_cast<std::size_t>(cv.index + dv) * ru + (cu.index + du);
        fn(block.offset + cell * ch, slot, ch, wu * wv);
      }
    }
  };
  plane(layout.plane_xy, c.x, cfg.plane_x, c.y, cfg.plane_y, 0);
  plane(layout.plane_xt, c.x, cfg.plane_x, c.t, cfg.plane_t, ch);
  plane(layout.plane_yt, c.y, cfg.plane_y, c.t, cfg.plane_t, 2 * ch);

  const int cg = cfg.lattice_channels;
  int slot = 3 * ch;
  for (std::size_t l = 0; l < cfg.lattices.size(); ++l, slot += cg) {
    const LatticeShape& g = cfg.lattices[l];
    AxisCell cx = locate(c.x, g.x);
    AxisCell cy = locate(c.y, g.y);
    AxisCell ct = locate(c.t, g.t);
    for (int dt = 0; dt < 2; ++dt) {
      double wt = dt ? ct.frac : 1.0 - ct.frac;
      for (int dy = 0; dy < 2; ++dy) {
        double wy = dy ? cy.frac : 1.0 - cy.frac;
        for (int dx = 0; dx < 2; ++dx) {
          double wx = dx ? cx.frac : 1.0 - cx.frac;
          std::size_t cell =
              (static_cast<std::size_t>(ct.index + dt) * g.y + (cy.index + dy)) * g.x + (cx.index + dx);
          fn(layout.lattices[l].offset + cell * cg, slot, cg, wt * wy * wx);
        }
      }
    }
  }
}

template <class S>
S sigmoid(S z) {
  S s = z >= 0 ? S(1) / (S(1) + std::exp(-z)) : std::exp(z) / (S(1) + std::exp(z));
  return std::clamp(s, std::numeric_limits<S>::min(), std::nextafter(S(1), S(0)));
}

template <class S>
void apply_activation(Activation act, MatrixMap<S>& m) {
  if (act == Activation::relu) {
    m = m.cwiseMax(S(0));
  } else {
    m = m.unaryExpr([](S z) { return sigmoid(z); });
  }
}

void check_positive(int value, int minimum, const char* name) {
  if (value < minimum) {
    fail(ErrorKind::config, std::string(name) + " must be >= " + std::to_string(minimum) + " (got " +
                                std::to_string(value) + ")");
  }
}

}  // namespace

double axis_coord(int index, int count) {
  require(count >= 1 && index >= 0 && index < count, "axis index out of range");
  return count == 1 ? 0.0 : static_cast<double>(index) / (count - 1);
}

void validate_coord(const Coord& c) {
  auto ok = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (!ok(c.x) || !ok(c.y) || !ok(c.t)) {
    fail(ErrorKind::contract, "coordinate out of [0,1]: (" + std::to_string(c.x) + ", " + std::to_string(c.y) +
                                  ", " + std::to_string(c.t) + ")");
  }
}

FieldConfig FieldConfig::defaults_for(int frames, int height, int width) {
  FieldConfig cfg;
  cfg.frames = frames;
  cfg.height = height;
  cfg.width = width;
  cfg.plane_x = std::max(2, width / 2);
  cfg.plane_y = std::max(2, height / 2);
  cfg.plane_t = std::max(frames, 16);
  return cfg;
}

void FieldConfig::validate() const {
  check_positive(frames, 1, "frames");
  check_positive(height, 2, "height");
  check_positive(width, 2, "width");
  check_positive(plane_x, 2, "plane_x");
  check_positive(plane_y, 2, "plane_y");
  check_positive(plane_t, 2, "plane_t");
  check_positive(channels, 1, "channels");
  check_positive(lattice_channels, 1, "lattice_channels");
  check_positive(decoder_layers, 1, "decoder_layers");
  check_positive(hidden_width, 1, "hidden_width");
  if (lattices.empty()) fail(ErrorKind::config, "lattices must contain at least one level");
  for (std::size_t l = 0; l < lattices.size(); ++l) {
    const auto& g = lattices[l];
    if (g.t < 2 || g.y < 2 || g.x < 2) {
      fail(ErrorKind::config, "lattices[" + std::to_string(l) + "] axis lengths must be >= 2");
    }
    if (l > 0) {
      const auto& p = lattices[l - 1];
      if (g.t < p.t || g.y < p.y || g.x < p.x) {
        fail(ErrorKind::config, "lattices[" + std::to_string(l) + "] must not be coarser than the previous level");
      }
    }
  }
  if (hidden_activation != Activation::relu) fail(ErrorKind::config, "hidden_activation must be relu");
  if (output_activation != Activation::sigmoid) fail(ErrorKind::config, "output_activation must be sigmoid");
}

ParamLayout::ParamLayout(const FieldConfig& cfg) {
  cfg.validate();
  std::size_t at = 0;
  auto take = [&](std::size_t n) {
    ArrayBlock b{at, n};
    at += n;
    return b;
  };
  const std::size_t ch = cfg.channels;
  plane_xy = take(std::size_t(cfg.plane_y) * cfg.plane_x * ch);
  plane_xt = take(std::size_t(cfg.plane_t) * cfg.plane_x * ch);
  plane_yt = take(std::size_t(cfg.plane_t) * cfg.plane_y * ch);
  for (const auto& g : cfg.lattices) {
    lattices.push_back(take(std::size_t(g.t) * g.y * g.x * cfg.lattice_channels));
  }
  explicit_count = at;

  widths.push_back(cfg.feature_width());
  for (int l = 0; l + 1 < cfg.decoder_layers; ++l) widths.push_back(cfg.hidden_width);
  widths.push_back(3);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    weights.push_back(take(std::size_t(widths[l + 1]) * widths[l]));
    biases.push_back(take(widths[l + 1]));
  }
  total = at;
}

template <class S>
FieldParams<S>::FieldParams(FieldConfig config)
    : config_(std::move(config)), layout_(config_), values_(layout_.total, S(0)) {}

template class FieldParams<float>;
template class FieldParams<double>;

template <class S>
void GradientBuffer<S>::zero() {
  std::fill(values.begin(), values.end(), S(0));
}

template <class S>
bool GradientBuffer<S>::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](S v) { return std::isfinite(v); });
}

template struct GradientBuffer<float>;
template struct GradientBuffer<double>;

FieldParams<float> init_params(const FieldConfig& config, std::uint64_t seed) {
  FieldParams<float> params(config);
  std::mt19937_64 rng(seed);
  const auto& layout = params.layout();
  auto values = params.values();

  std::uniform_real_distribution<float> feature_dist(-1e-4f, 1e-4f);
  for (std::size_t i = 0; i < layout.explicit_count; ++i) values[i] = feature_dist(rng);

  for (std::size_t l = 0; l < layout.weights.size(); ++l) {
    float bound = std::sqrt(6.0f / static_cast<float>(layout.widths[l]));
    std::uniform_real_distribution<float> weight_dist(-bound, bound);
    for (auto& w : params.block(layout.weights[l])) w = weight_dist(rng);
  }
  return params;
}

std::vector<std::vector<double>> interpolation_weights(const FieldConfig& config, const Coord& c) {
  validate_coord(c);
  ParamLayout layout(config);
  std::vector<std::vector<double>> groups(3 + config.lattices.size());
  int per_plane = 0;
  std::size_t group = 0;
  visit_lookups(config, layout, c, [&](std::size_t, int, int, double w) {
    groups[group].push_back(w);
    int limit = group < 3 ? 4 : 8;
    if (++per_plane == limit) {
      per_plane = 0;
      ++group;
    }
  });
  return groups;
}

template <class S>
void sample_features(const FieldParams<S>& params, const Coord& c, std::span<S> out) {
  validate_coord(c);
  require(out.size() == static_cast<std::size_t>(params.config().feature_width()), "feature buffer size mismatch");
  std::fill(out.begin(), out.end(), S(0));
  auto values = params.values();
  visit_lookups(params.config(), params.layout(), c, [&](std::size_t offset, int slot, int width, double w) {
    const S ws = static_cast<S>(w);
    for (int k = 0; k < width; ++k) out[slot + k] += ws * values[offset + k];
  });
}

template <class S>
void forward_batch(const FieldParams<S>& params, std::span<const Coord> batch, ForwardCache<S>& cache) {
  const auto& layout = params.layout();
  const int n = static_cast<int>(batch.size());
  const int in = layout.widths.front();
  const int stride = (n + kColumnPad - 1) / kColumnPad * kColumnPad;
  cache.count = n;
  cache.stride = stride;
  cache.features.assign(std::size_t(in) * stride, S(0));
  for (int j = 0; j < n; ++j) {
    sample_features(params, batch[j], std::span<S>(cache.features).subspan(std::size_t(j) * in, in));
  }

  const std::size_t layers = layout.weights.size();
  cache.activations.resize(layers);
  const S* prev = cache.features.data();
  for (std::size_t l = 0; l < layers; ++l) {
    const int rows = layout.widths[l + 1];
    const int cols = layout.widths[l];
    ConstWeightMap<S> w(params.values().data() + layout.weights[l].offset, rows, cols);
    ConstVectorMap<S> b(params.values().data() + layout.biases[l].offset, rows);
    cache.activations[l].resize(std::size_t(rows) * stride);
    MatrixMap<S> z(cache.activations[l].data(), rows, stride);
    ConstMatrixMap<S> a(prev, cols, stride);
    z.noalias() = w * a;
    z.colwise() += b;
    Activation act = l + 1 == layers ? params.config().output_activation : params.config().hidden_activation;
    apply_activation(act, z);
    prev = cache.activations[l].data();
  }
}

template <class S>
void backward_batch(const FieldParams<S>& params, std::span<const Coord> batch, const ForwardCache<S>& cache,
                    std::span<const S> upstream, GradientBuffer<S>& out) {
  const auto& layout = params.layout();
  const int n = cache.count;
  require(batch.size() == static_cast<std::size_t>(n), "batch does not match forward cache");
  require(upstream.size() == std::size_t(3) * n, "upstream gradient size mismatch");
  require(out.values.size() == params.parameter_count(), "gradient buffer shape mismatch");
  if (n == 0) return;

  const int stride = cache.stride;
  const std::size_t layers = layout.weights.size();
  Buffer<S> delta(std::size_t(3) * stride, S(0));
  std::copy(upstream.begin(), upstream.end(), delta.begin());
  {
    // Output activation is sigmoid: d/dz = s (1 - s).
    const auto& y = cache.activations.back();
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] *= y[i] * (S(1) - y[i]);
  }

  Buffer<S> next;
  for (std::size_t l = layers; l-- > 0;) {
    const int rows = layout.widths[l + 1];
    const int cols = layout.widths[l];
    const S* prev = l == 0 ? cache.features.data() : cache.activations[l - 1].data();
    ConstMatrixMap<S> a(prev, cols, stride);
    ConstMatrixMap<S> d(delta.data(), rows, stride);
    WeightMap<S> gw(out.values.data() + layout.weights[l].offset, rows, cols);
    VectorMap<S> gb(out.values.data() + layout.biases[l].offset, rows);
    gw.noalias() += d * a.transpose();
    gb.noalias() += d.rowwise().sum();

    ConstWeightMap<S> w(params.values().data() + layout.weights[l].offset, rows, cols);
    next.resize(std::size_t(cols) * stride);
    MatrixMap<S> da(next.data(), cols, stride);
    da.noalias() = w.transpose() * d;
    if (l > 0) {
      // Hidden activation is relu; the post-activation is positive exactly where the gate is open.
      const auto& h = cache.activations[l - 1];
      for (std::size_t i = 0; i < next.size(); ++i) {
        if (!(h[i] > S(0))) next[i] = S(0);
      }
    }
    std::swap(delta, next);
  }

  // delta now holds dLoss/dFeatures; scatter into the interpolated vertices.
  const int in = layout.widths.front();
  auto grads = std::span<S>(out.values);
  for (int j = 0; j < n; ++j) {
    const S* df = delta.data() + std::size_t(j) * in;
    visit_lookups(params.config(), layout, batch[j], [&](std::size_t offset, int slot, int width, double w) {
      const S ws = static_cast<S>(w);
      for (int k = 0; k < width; ++k) grads[offset + k] += ws * df[slot + k];
    });
  }
}

template <class S>
Rgb<S> decode(const FieldParams<S>& params, std::span<const S> features) {
  const auto& layout = params.layout();
  require(features.size() == static_cast<std::size_t>(layout.widths.front()), "feature length mismatch: expected " +
                                                                                  std::to_string(layout.widths.front()) +
                                                                                  ", got " +
                                                                                  std::to_string(features.size()));
  std::vector<S> cur(features.begin(), features.end());
  const std::size_t layers = layout.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    const int rows = layout.widths[l + 1];
    const int cols = layout.widths[l];
    auto w = params.block(layout.weights[l]);
    auto b = params.block(layout.biases[l]);
    std::vector<S> next(rows);
    for (int r = 0; r < rows; ++r) {
      S acc = b[r];
      for (int c = 0; c < cols; ++c) acc += w[std::size_t(r) * cols + c] * cur[c];
      next[r] = l + 1 == layers ? sigmoid(acc) : std::max(acc, S(0));
    }
    cur = std::move(next);
  }
  return {cur[0], cur[1], cur[2]};
}

template <class S>
std::vector<Rgb<S>> forward(const FieldParams<S>& params, std::span<const Coord> batch) {
  return evaluate(params, batch, 1);
}

template <class S>
std::vector<Rgb<S>> evaluate(const FieldParams<S>& params, std::span<const Coord> batch, int shards) {
  std::vector<Rgb<S>> out(batch.size());
  if (batch.empty()) return out;
  shards = std::clamp<int>(shards, 1, static_cast<int>(batch.size()));
  auto run = [&](std::size_t first, std::size_t count) {
    ForwardCache<S> cache;
    forward_batch(params, batch.subspan(first, count), cache);
    auto rgb = cache.output();
    for (std::size_t j = 0; j < count; ++j) out[first + j] = {rgb[3 * j], rgb[3 * j + 1], rgb[3 * j + 2]};
  };
  if (shards == 1) {
    run(0, batch.size());
    return out;
  }
  std::vector<std::jthread> workers;
  const std::size_t per = (batch.size() + shards - 1) / shards;
  for (std::size_t first = 0; first < batch.size(); first += per) {
    workers.emplace_back(run, first, std::min(per, batch.size() - first));
  }
  return out;
}

template <class S>
void backward(const FieldParams<S>& params, std::span<const Coord> batch, std::span<const Rgb<S>> upstream,
              GradientBuffer<S>& out) {
  require(batch.size() == upstream.size(), "batch and upstream gradient lengths differ");
  require(out.values.size() == params.parameter_count(), "gradient buffer shape mismatch");
  ForwardCache<S> cache;
  forward_batch(params, batch, cache);
  Buffer<S> flat(upstream.size() * 3);
  for (std::size_t j = 0; j < upstream.size(); ++j) {
    for (int k = 0; k < 3; ++k) flat[3 * j + k] = upstream[j][k];
  }
  backward_batch(params, batch, cache, std::span<const S>(flat), out);
}

template <class S>
double accumulate_gradients(const FieldParams<S>& params, std::span<const Coord> batch, const LossGradientFn<S>& loss,
                            GradientBuffer<S>& out, int shards) {
  require(out.values.size() == params.parameter_count(), "gradient buffer shape mismatch");
  if (batch.empty()) return 0.0;
  shards = std::clamp<int>(shards, 1, static_cast<int>(batch.size()));

  auto run = [&](std::size_t first, std::size_t count, GradientBuffer<S>& grads) {
    auto slice = batch.subspan(first, count);
    ForwardCache<S> cache;
    forward_batch(params, slice, cache);
    Buffer<S> upstream(3 * count, S(0));
    double partial = loss(first, cache.output(), std::span<S>(upstream));
    backward_batch(params, slice, cache, std::span<const S>(upstream), grads);
    return partial;
  };

  if (shards == 1) return run(0, batch.size(), out);

  const std::size_t per = (batch.size() + shards - 1) / shards;
  std::vector<GradientBuffer<S>> buffers;
  std::vector<double> partials;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t first = 0; first < batch.size(); first += per) {
    ranges.emplace_back(first, std::min(per, batch.size() - first));
    buffers.emplace_back(params.parameter_count());
    partials.push_back(0.0);
  }
  {
    std::vector<std::jthread> workers;
    for (std::size_t s = 0; s < ranges.size(); ++s) {
      workers.emplace_back([&, s] { partials[s] = run(ranges[s].first, ranges[s].second, buffers[s]); });
    }
  }
  double total = 0.0;
  for (std::size_t s = 0; s < ranges.size(); ++s) {
    total += partials[s];
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += buffers[s].values[i];
  }
  return total;
}

template <class S>
void adam_step(FieldParams<S>& params, GradientBuffer<S>& grads, AdamState<S>& state) {
  const auto& layout = params.layout();
  const std::size_t n = params.parameter_count();
  require(grads.values.size() == n && state.first_moment.size() == n && state.second_moment.size() == n,
          "optimizer state shape mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(grads.values[i])) {
      const char* group = i < layout.explicit_count ? "explicit (feature arrays)" : "implicit (decoder)";
      fail(ErrorKind::optimizer, std::string("non-finite gradient in parameter group ") + group + " at index " +
                                     std::to_string(i));
    }
  }

  const auto& cfg = state.config;
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const S beta1 = static_cast<S>(cfg.beta1);
  const S beta2 = static_cast<S>(cfg.beta2);
  const S inv_bc1 = static_cast<S>(1.0 / bc1);
  const S inv_bc2 = static_cast<S>(1.0 / bc2);
  const S eps = static_cast<S>(cfg.epsilon);

  auto update = [&](std::size_t begin, std::size_t end, S lr) {
    auto p = params.values();
    for (std::size_t i = begin; i < end; ++i) {
      const S g = grads.values[i];
      S& m = state.first_moment[i];
      S& v = state.second_moment[i];
      m = beta1 * m + (S(1) - beta1) * g;
      v = beta2 * v + (S(1) - beta2) * g * g;
      p[i] -= lr * (m * inv_bc1) / (std::sqrt(v * inv_bc2) + eps);
    }
  };
  update(0, layout.explicit_count, static_cast<S>(cfg.lr_explicit));
  update(layout.explicit_count, n, static_cast<S>(cfg.lr_implicit));
  grads.zero();
}

#define NVF_INSTANTIATE(S)                                                                                   \
  template void sample_features<S>(const FieldParams<S>&, const Coord&, std::span<S>);                     \
  template Rgb<S> decode<S>(const FieldParams<S>&, std::span<const S>);                                    \
  template std::vector<Rgb<S>> forward<S>(const FieldParams<S>&, std::span<const Coord>);                  \
  template std::vector<Rgb<S>> evaluate<S>(const FieldParams<S>&, std::span<const Coord>, int);            \
  template void backward<S>(const FieldParams<S>&, std::span<const Coord>, std::span<const Rgb<S>>,        \
                            GradientBuffer<S>&);                                                             \
  template void forward_batch<S>(const FieldParams<S>&, std::span<const Coord>, ForwardCache<S>&);         \
  template void backward_batch<S>(const FieldParams<S>&, std::span<const Coord>, const ForwardCache<S>&,   \
                                  std::span<const S>, GradientBuffer<S>&);                                  \
  template double accumulate_gradients<S>(const FieldParams<S>&, std::span<const Coord>,                   \
                                          const LossGradientFn<S>&, GradientBuffer<S>&, int);               \
  template void adam_step<S>(FieldParams<S>&, GradientBuffer<S>&, AdamState<S>&);

NVF_INSTANTIATE(float)
NVF_INSTANTIATE(double)

#undef NVF_INSTANTIATE

// ---------------------------------------------------------------------------
// NVF1 parameter files

namespace {

constexpr char kMagic[4] = {'N', 'V', 'F', '1'};

void put_i32(std::vector<std::uint8_t>& out, std::int64_t value) {
  auto v = static_cast<std::uint32_t>(static_cast<std::int32_t>(value));
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::int32_t i32(const char* what) {
    if (pos_ + 4 > bytes_.size()) fail(ErrorKind::format, std::string("truncated parameter header at ") + what);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t(bytes_[pos_ + k]) << (8 * k);
    pos_ += 4;
    return static_cast<std::int32_t>(v);
  }
  std::size_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize(const FieldParams<float>& params) {
  const auto& cfg = params.config();
  const auto& layout = params.layout();
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_i32(out, cfg.frames);
  put_i32(out, cfg.height);
  put_i32(out, cfg.width);
  put_i32(out, cfg.plane_x);
  put_i32(out, cfg.plane_y);
  put_i32(out, cfg.plane_t);
  put_i32(out, cfg.channels);
  put_i32(out, static_cast<std::int64_t>(cfg.lattices.size()));
  put_i32(out, cfg.lattice_channels);
  for (const auto& g : cfg.lattices) {
    put_i32(out, g.t);
    put_i32(out, g.y);
    put_i32(out, g.x);
  }
  put_i32(out, cfg.decoder_layers);
  put_i32(out, cfg.hidden_width);
  put_i32(out, static_cast<std::int32_t>(cfg.hidden_activation));
  put_i32(out, static_cast<std::int32_t>(cfg.output_activation));
  for (int w : layout.widths) put_i32(out, w);

  out.reserve(out.size() + 4 * params.parameter_count());
  for (float v : params.values()) {
    auto bits = std::bit_cast<std::uint32_t>(v);
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
  }
  return out;
}

FieldParams<float> deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    fail(ErrorKind::format, "not an NVF1 parameter file (bad magic)");
  }
  Reader in(bytes.subspan(4));
  FieldConfig cfg;
  cfg.frames = in.i32("frames");
  cfg.height = in.i32("height");
  cfg.width = in.i32("width");
  cfg.plane_x = in.i32("plane_x");
  cfg.plane_y = in.i32("plane_y");
  cfg.plane_t = in.i32("plane_t");
  cfg.channels = in.i32("channels");
  const int levels = in.i32("lattice count");
  cfg.lattice_channels = in.i32("lattice_channels");
  if (levels < 1 || levels > 64) fail(ErrorKind::format, "implausible lattice count " + std::to_string(levels));
  cfg.lattices.clear();
  for (int l = 0; l < levels; ++l) {
    LatticeShape g;
    g.t = in.i32("lattice shape");
    g.y = in.i32("lattice shape");
    g.x = in.i32("lattice shape");
    cfg.lattices.push_back(g);
  }
  cfg.decoder_layers = in.i32("decoder_layers");
  cfg.hidden_width = in.i32("hidden_width");
  cfg.hidden_activation = static_cast<Activation>(in.i32("hidden_activation"));
  cfg.output_activation = static_cast<Activation>(in.i32("output_activation"));
  if (cfg.decoder_layers < 1 || cfg.decoder_layers > 1024) fail(ErrorKind::format, "implausible decoder depth");

  try {
    cfg.validate();
  } catch (const Error& e) {
    fail(ErrorKind::format, std::string("invalid parameter header: ") + e.what());
  }
  FieldParams<float> params(cfg);
  for (int expected : params.layout().widths) {
    if (in.i32("decoder widths") != expected) fail(ErrorKind::format, "decoder layout does not match header");
  }

  const std::size_t data_at = 4 + in.position();
  const std::size_t expected_bytes = data_at + 4 * params.parameter_count();
  if (bytes.size() != expected_bytes) {
    fail(ErrorKind::format, "parameter payload size mismatch: expected " + std::to_string(expected_bytes) +
                                " bytes, got " + std::to_string(bytes.size()));
  }
  auto values = params.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int k = 0; k < 4; ++k) bits |= std::uint32_t(bytes[data_at + 4 * i + k]) << (8 * k);
    values[i] = std::bit_cast<float>(bits);
  }
  return params;
}

void save_params(const FieldParams<float>& params, const std::filesystem::path& path) {
  auto bytes = serialize(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

FieldParams<float> load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize(bytes);
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace nvf
