#pragma once

#include <array>

#include "nvf/video.hpp"

namespace nvf {

std::array<float, 3> rgb_to_hsv(std::array<float, 3> rgb);  // h in degrees [0, 360)
std::array<float, 3> hsv_to_rgb(std::array<float, 3> hsv);

Image hue_shift(const Image& image, double degrees);
Image sepia(const Image& image);
// Each channel to min(floor(v * levels), levels - 1) / (levels - 1).
Image posterize(const Image& image, int levels);
float posterize_value(float v, int levels);

// 2x resampling on the align-corners grid: output pixel j samples the source
// at j * (n - 1) / (2n - 1).
Image upscale2x_bicubic(const Image& image);
Image upscale2x_nearest(const Image& image);

// (1 - s) * a + s * b; s = 0 returns a and s = 1 returns b exactly.
Image blend(const Image& a, const Image& b, double s);

}  // namespace nvf
