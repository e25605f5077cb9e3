#pragma once

#include <array>

#include "nvf/video.hpp"

namespace nvf::synthetic {

// An anti-aliased square translating at constant velocity over a flat
// background. Pixel (x, y) covers [x, x+1) x [y, y+1); its value is the
// area-weighted mix of square and background colour.
struct MovingSquare {
  int frames = 16;
  int height = 64;
  int width = 64;
  double side = 16.0;
  double start_x = 8.0;
  double start_y = 12.0;
  double velocity_x = 1.0;  // pixels per frame
  double velocity_y = 0.5;
  std::array<float, 3> square{0.9f, 0.2f, 0.1f};
  std::array<float, 3> background{0.1f, 0.3f, 0.8f};

  // The 64x64 layout scaled to another frame size.
  static MovingSquare for_size(int frames, int height, int width);

  // Exact frame at a (possibly fractional) frame position.
  Image frame_at(double position) const;
  VideoTensor video() const;
};

VideoTensor constant_video(int frames, int height, int width, std::array<float, 3> color);

}  // namespace nvf::synthetic
