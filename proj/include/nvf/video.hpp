#pragma once

#include <span>
#include <vector>

namespace nvf {

// H x W x 3 interleaved RGB in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, float fill = 0.0f) : width(w), height(h), data(std::size_t(w) * h * 3, fill) {}

  float& at(int y, int x, int c) { return data[(std::size_t(y) * width + x) * 3 + c]; }
  float at(int y, int x, int c) const { return data[(std::size_t(y) * width + x) * 3 + c]; }
  std::size_t pixels() const { return std::size_t(width) * height; }
  bool same_shape(const Image& o) const { return width == o.width && height == o.height; }
};

// T x H x W x 3 frame stack in [0,1].
struct VideoTensor {
  int frames = 0;
  int height = 0;
  int width = 0;
  double fps = 30.0;
  std::vector<float> data;

  VideoTensor() = default;
  VideoTensor(int t, int h, int w, float fill = 0.0f)
      : frames(t), height(h), width(w), data(std::size_t(t) * h * w * 3, fill) {}

  std::size_t frame_size() const { return std::size_t(height) * width * 3; }
  std::span<float> frame(int t) { return std::span<float>(data).subspan(t * frame_size(), frame_size()); }
  std::span<const float> frame(int t) const {
    return std::span<const float>(data).subspan(t * frame_size(), frame_size());
  }
  float at(int t, int y, int x, int c) const { return data[((std::size_t(t) * height + y) * width + x) * 3 + c]; }
  float& at(int t, int y, int x, int c) { return data[((std::size_t(t) * height + y) * width + x) * 3 + c]; }

  Image frame_image(int t) const;
  void set_frame(int t, const Image& image);
  bool same_shape(const VideoTensor& o) const {
    return frames == o.frames && height == o.height && width == o.width;
  }

  // Throws a contract error unless T >= 1, H, W >= 2 and every value is in [0,1].
  void validate() const;
};

VideoTensor stack_frames(std::span<const Image> frames, double fps = 30.0);

}  // namespace nvf
