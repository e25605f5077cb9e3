#include "nvf/synthetic.hpp"

#include <algorithm>

namespace nvf::synthetic {

namespace {

double overlap(double a0, double a1, double b0, double b1) {
  return std::clamp(std::min(a1, b1) - std::max(a0, b0), 0.0, 1.0);
}

}  // namespace

MovingSquare MovingSquare::for_size(int frames, int height, int width) {
  MovingSquare s;
  s.frames = frames;
  s.height = height;
  s.width = width;
  s.side = std::min(width, height) / 4.0;
  s.start_x = width / 8.0;
  s.start_y = height * 3.0 / 16.0;
  s.velocity_x = width / 64.0;
  s.velocity_y = height / 128.0;
  return s;
}

Image MovingSquare::frame_at(double position) const {
  Image img(width, height);
  const double x0 = start_x + velocity_x * position;
  const double y0 = start_y + velocity_y * position;
  for (int y = 0; y < height; ++y) {
    double cy = overlap(y, y + 1.0, y0, y0 + side);
    for (int x = 0; x < width; ++x) {
      double cover = cy * overlap(x, x + 1.0, x0, x0 + side);
      for (int c = 0; c < 3; ++c) {
        img.at(y, x, c) = static_cast<float>(background[c] + (square[c] - background[c]) * cover);
      }
    }
  }
  return img;
}

VideoTensor MovingSquare::video() const {
  VideoTensor v(frames, height, width);
  for (int t = 0; t < frames; ++t) v.set_frame(t, frame_at(t));
  return v;
}

VideoTensor constant_video(int frames, int height, int width, std::array<float, 3> color) {
  VideoTensor v(frames, height, width);
  for (std::size_t i = 0; i < v.data.size(); ++i) v.data[i] = color[i % 3];
  return v;
}

}  // namespace nvf::synthetic
