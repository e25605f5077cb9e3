#include "nvf/video.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nvf/error.hpp"

namespace nvf {

Image VideoTensor::frame_image(int t) const {
  require(t >= 0 && t < frames, "frame index " + std::to_string(t) + " out of range");
  Image img(width, height);
  auto src = frame(t);
  std::copy(src.begin(), src.end(), img.data.begin());
  return img;
}

void VideoTensor::set_frame(int t, const Image& image) {
  require(t >= 0 && t < frames, "frame index " + std::to_string(t) + " out of range");
  require(image.width == width && image.height == height, "frame dimensions do not match video");
  std::copy(image.data.begin(), image.data.end(), frame(t).begin());
}

void VideoTensor::validate() const {
  require(frames >= 1 && height >= 2 && width >= 2,
          "video must have T >= 1, H >= 2, W >= 2 (got " + std::to_string(frames) + "x" + std::to_string(height) +
              "x" + std::to_string(width) + ")");
  require(data.size() == std::size_t(frames) * frame_size(), "video buffer size mismatch");
  for (float v : data) {
    if (!(v >= 0.0f && v <= 1.0f)) require(false, "video value outside [0,1]");
  }
}

VideoTensor stack_frames(std::span<const Image> frames, double fps) {
  require(!frames.empty(), "cannot stack an empty frame list");
  VideoTensor v(static_cast<int>(frames.size()), frames.front().height, frames.front().width);
  v.fps = fps;
  for (std::size_t t = 0; t < frames.size(); ++t) v.set_frame(static_cast<int>(t), frames[t]);
  return v;
}

}  // namespace nvf
