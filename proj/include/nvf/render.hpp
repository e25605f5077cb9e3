#pragma once

#include <cstddef>
#include <vector>

#include "nvf/field.hpp"
#include "nvf/video.hpp"

namespace nvf {

struct RenderSpec {
  int width = 0;
  int height = 0;
  std::vector<double> time_samples;

  // The source frame grid t = k/(T-1) at the source resolution.
  static RenderSpec original_grid(const FieldConfig& config);
  // The source grid with `inserted` evenly spaced novel frames between
  // each consecutive pair: (T-1)(inserted+1)+1 samples.
  static RenderSpec interpolation_grid(const FieldConfig& config, int inserted, int width, int height);

  void validate() const;
};

// Align-corners pixel grid at temporal coordinate t, row-major.
Buffer<Coord> frame_coords(int width, int height, double t);

Image render_frame(const FieldParams<float>& params, int width, int height, double t, int threads = 1);
VideoTensor render_video(const FieldParams<float>& params, const RenderSpec& spec, int threads = 1);

// Novel frame between source frames k and k+1 at t = (k + alpha)/(T-1).
Image interpolate(const FieldParams<float>& params, int k, double alpha, int width, int height, int threads = 1);

inline constexpr double kPsnrCap = 99.0;

double mse(const Image& a, const Image& b);
double mse(const VideoTensor& a, const VideoTensor& b);
double psnr(const Image& a, const Image& b);
double psnr(const VideoTensor& a, const VideoTensor& b);

// Mean over consecutive frame pairs of the mean absolute difference.
double temporal_consistency(const VideoTensor& v);

struct MemoryReport {
  std::size_t parameter_bytes = 0;
  std::size_t peak_workspace_bytes = 0;  // max of the two below
  std::size_t fit_workspace_bytes = 0;
  std::size_t edit_workspace_bytes = 0;
  int frames = 0;
  int height = 0;
  int width = 0;
  int batch_size = 0;
};

// Runs one fitting step (batch `batch_size`) and one editing step (identity
// editor at the video's frame size) on scratch copies of the parameters and
// records the transient allocation peak of each.
MemoryReport memory_report(const FieldParams<float>& params, const VideoTensor& video, int batch_size);

}  // namespace nvf
