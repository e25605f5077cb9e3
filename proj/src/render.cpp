#include "nvf/render.hpp"

#include <cmath>
#include <string>

#include "nvf/error.hpp"

namespace nvf {

RenderSpec RenderSpec::original_grid(const FieldConfig& config) {
  RenderSpec spec{config.width, config.height, {}};
  for (int k = 0; k < config.frames; ++k) spec.time_samples.push_back(axis_coord(k, config.frames));
  return spec;
}

RenderSpec RenderSpec::interpolation_grid(const FieldConfig& config, int inserted, int width, int height) {
  require(inserted >= 0, "interpolation count must be >= 0");
  RenderSpec spec{width, height, {}};
  const int t = config.frames;
  if (t == 1) {
    spec.time_samples.push_back(0.0);
    return spec;
  }
  for (int k = 0; k + 1 < t; ++k) {
    for (int j = 0; j <= inserted; ++j) {
      spec.time_samples.push_back((k + static_cast<double>(j) / (inserted + 1)) / (t - 1));
    }
  }
  spec.time_samples.push_back(1.0);
  return spec;
}

void RenderSpec::validate() const {
  require(width >= 2 && height >= 2, "render size must be at least 2x2");
  require(!time_samples.empty(), "render spec has no time samples (empty video)");
  for (std::size_t i = 0; i < time_samples.size(); ++i) {
    double t = time_samples[i];
    require(std::isfinite(t) && t >= 0.0 && t <= 1.0, "time sample out of [0,1]: " + std::to_string(t));
    require(i == 0 || time_samples[i - 1] <= t, "time samples must be sorted");
  }
}

Buffer<Coord> frame_coords(int width, int height, double t) {
  Buffer<Coord> coords;
  coords.reserve(std::size_t(width) * height);
  for (int y = 0; y < height; ++y) {
    double cy = axis_coord(y, height);
    for (int x = 0; x < width; ++x) coords.push_back({axis_coord(x, width), cy, t});
  }
  return coords;
}

Image render_frame(const FieldParams<float>& params, int width, int height, double t, int threads) {
  require(std::isfinite(t) && t >= 0.0 && t <= 1.0, "render time out of [0,1]: " + std::to_string(t));
  require(width >= 2 && height >= 2, "render size must be at least 2x2");
  auto coords = frame_coords(width, height, t);
  auto rgb = evaluate(params, std::span<const Coord>(coords), threads);
  Image img(width, height);
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    for (int c = 0; c < 3; ++c) img.data[3 * i + c] = rgb[i][c];
  }
  return img;
}

VideoTensor render_video(const FieldParams<float>& params, const RenderSpec& spec, int threads) {
  spec.validate();
  VideoTensor v(static_cast<int>(spec.time_samples.size()), spec.height, spec.width);
  for (std::size_t k = 0; k < spec.time_samples.size(); ++k) {
    v.set_frame(static_cast<int>(k), render_frame(params, spec.width, spec.height, spec.time_samples[k], threads));
  }
  return v;
}

Image interpolate(const FieldParams<float>& params, int k, double alpha, int width, int height, int threads) {
  const int frames = params.config().frames;
  require(frames >= 2, "interpolation needs a source video with at least two frames");
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
  require(k >= 0 && k + alpha <= frames - 1, "interpolation position beyond the last frame");
  return render_frame(params, width, height, (k + alpha) / (frames - 1), threads);
}

double mse(const Image& a, const Image& b) {
  require(a.same_shape(b), "image shapes differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    double d = double(a.data[i]) - double(b.data[i]);
    acc += d * d;
  }
  return a.data.empty() ? 0.0 : acc / a.data.size();
}

namespace {

double psnr_from_mse(double m) {
  if (m <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / m));
}

}  // namespace

double psnr(const Image& a, const Image& b) { return psnr_from_mse(mse(a, b)); }

double mse(const VideoTensor& a, const VideoTensor& b) {
  require(a.same_shape(b), "video shapes differ: " + std::to_string(a.frames) + "x" + std::to_string(a.height) +
                               "x" + std::to_string(a.width) + " vs " + std::to_string(b.frames) + "x" +
                               std::to_string(b.height) + "x" + std::to_string(b.width));
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    double d = double(a.data[i]) - double(b.data[i]);
    acc += d * d;
  }
  return a.data.empty() ? 0.0 : acc / a.data.size();
}

double psnr(const VideoTensor& a, const VideoTensor& b) { return psnr_from_mse(mse(a, b)); }

double temporal_consistency(const VideoTensor& v) {
  require(v.frames >= 2, "temporal consistency needs at least two frames");
  double total = 0.0;
  for (int t = 0; t + 1 < v.frames; ++t) {
    auto a = v.frame(t);
    auto b = v.frame(t + 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(double(b[i]) - double(a[i]));
    total += acc / a.size();
  }
  return total / (v.frames - 1);
}

}  // namespace nvf
