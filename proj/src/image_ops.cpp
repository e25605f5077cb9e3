#include "nvf/image_ops.hpp"

#include <algorithm>
#include <cmath>

#include "nvf/error.hpp"

namespace nvf {

std::array<float, 3> rgb_to_hsv(std::array<float, 3> rgb) {
  const float r = rgb[0], g = rgb[1], b = rgb[2];
  const float max = std::max({r, g, b});
  const float min = std::min({r, g, b});
  const float delta = max - min;
  float h = 0.0f;
  if (delta > 0.0f) {
    if (max == r) {
      h = 60.0f * std::fmod((g - b) / delta, 6.0f);
    } else if (max == g) {
      h = 60.0f * ((b - r) / delta + 2.0f);
    } else {
      h = 60.0f * ((r - g) / delta + 4.0f);
    }
    if (h < 0.0f) h += 360.0f;
  }
  const float s = max > 0.0f ? delta / max : 0.0f;
  return {h, s, max};
}

std::array<float, 3> hsv_to_rgb(std::array<float, 3> hsv) {
  float h = std::fmod(hsv[0], 360.0f);
  if (h < 0.0f) h += 360.0f;
  const float s = hsv[1], v = hsv[2];
  const float sector = h / 60.0f;
  const int i = std::min(static_cast<int>(std::floor(sector)), 5);
  const float f = sector - i;
  const float p = v * (1.0f - s);
  const float q = v * (1.0f - s * f);
  const float t = v * (1.0f - s * (1.0f - f));
  switch (i) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

Image hue_shift(const Image& image, double degrees) {
  Image out = image;
  const float shift = static_cast<float>(degrees);
  for (std::size_t i = 0; i < image.pixels(); ++i) {
    auto hsv = rgb_to_hsv({image.data[3 * i], image.data[3 * i + 1], image.data[3 * i + 2]});
    hsv[0] += shift;
    auto rgb = hsv_to_rgb(hsv);
    for (int c = 0; c < 3; ++c) out.data[3 * i + c] = std::clamp(rgb[c], 0.0f, 1.0f);
  }
  return out;
}

Image sepia(const Image& image) {
  static constexpr float m[3][3] = {{0.393f, 0.769f, 0.189f}, {0.349f, 0.686f, 0.168f}, {0.272f, 0.534f, 0.131f}};
  Image out = image;
  for (std::size_t i = 0; i < image.pixels(); ++i) {
    const float* p = &image.data[3 * i];
    for (int c = 0; c < 3; ++c) {
      out.data[3 * i + c] = std::clamp(m[c][0] * p[0] + m[c][1] * p[1] + m[c][2] * p[2], 0.0f, 1.0f);
    }
  }
  return out;
}

float posterize_value(float v, int levels) {
  const float q = std::min(std::floor(v * levels), static_cast<float>(levels - 1));
  return std::clamp(q / (levels - 1), 0.0f, 1.0f);
}

Image posterize(const Image& image, int levels) {
  require(levels >= 2, "posterize needs at least 2 levels");
  Image out = image;
  for (float& v : out.data) v = posterize_value(v, levels);
  return out;
}

namespace {

// Keys cubic kernel, a = -0.5.
double cubic_weight(double x) {
  x = std::abs(x);
  constexpr double a = -0.5;
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

double source_position(int j, int src, int dst) { return static_cast<double>(j) * (src - 1) / (dst - 1); }

}  // namespace

Image upscale2x_bicubic(const Image& image) {
  const int w = image.width, h = image.height;
  const int w2 = 2 * w, h2 = 2 * h;
  // Separable: rows first into a w2 x h buffer, then columns.
  std::vector<double> tmp(std::size_t(w2) * h * 3, 0.0);
  for (int x2 = 0; x2 < w2; ++x2) {
    double sx = source_position(x2, w, w2);
    int base = static_cast<int>(std::floor(sx));
    for (int k = -1; k <= 2; ++k) {
      int xi = std::clamp(base + k, 0, w - 1);
      double wgt = cubic_weight(sx - (base + k));
      if (wgt == 0.0) continue;
      for (int y = 0; y < h; ++y) {
        for (int c = 0; c < 3; ++c) tmp[(std::size_t(y) * w2 + x2) * 3 + c] += wgt * image.at(y, xi, c);
      }
    }
  }
  Image out(w2, h2);
  for (int y2 = 0; y2 < h2; ++y2) {
    double sy = source_position(y2, h, h2);
    int base = static_cast<int>(std::floor(sy));
    for (int x2 = 0; x2 < w2; ++x2) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = -1; k <= 2; ++k) {
          int yi = std::clamp(base + k, 0, h - 1);
          acc += cubic_weight(sy - (base + k)) * tmp[(std::size_t(yi) * w2 + x2) * 3 + c];
        }
        out.at(y2, x2, c) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
      }
    }
  }
  return out;
}

Image upscale2x_nearest(const Image& image) {
  const int w = image.width, h = image.height;
  Image out(2 * w, 2 * h);
  for (int y2 = 0; y2 < out.height; ++y2) {
    int y = static_cast<int>(std::lround(source_position(y2, h, out.height)));
    for (int x2 = 0; x2 < out.width; ++x2) {
      int x = static_cast<int>(std::lround(source_position(x2, w, out.width)));
      for (int c = 0; c < 3; ++c) out.at(y2, x2, c) = image.at(y, x, c);
    }
  }
  return out;
}

Image blend(const Image& a, const Image& b, double s) {
  require(a.same_shape(b), "images to blend differ in size");
  Image out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = static_cast<float>((1.0 - s) * a.data[i] + s * b.data[i]);
  }
  return out;
}

}  // namespace nvf
