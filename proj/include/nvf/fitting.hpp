#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nvf/field.hpp"
#include "nvf/video.hpp"
#include "nvf/workspace.hpp"

namespace nvf {

struct RngState {
  std::mt19937_64 engine;
  explicit RngState(std::uint64_t seed = 0) : engine(seed) {}
};

struct PixelBatch {
  Buffer<Coord> coords;
  Buffer<Rgb<float>> targets;
  Buffer<std::array<int, 3>> source_indices;  // (t, y, x)

  std::size_t size() const { return coords.size(); }
};

// Uniform with replacement over all T*H*W pixels.
PixelBatch sample_pixel_batch(const VideoTensor& video, int batch_size, RngState& rng);

// One Adam step on the mean (over the batch) squared RGB error. Returns the
// pre-step loss.
double fit_step(FieldParams<float>& params, const VideoTensor& video, int batch_size, RngState& rng,
                AdamState<float>& adam, int threads = 1);

struct FitConfig {
  int batch_size = 65536;
  int iterations = 30000;
  std::uint64_t seed = 0;
  int log_interval = 500;
  std::optional<double> target_psnr;
  int threads = 1;

  void validate() const;
};

struct PsnrSample {
  int iteration = 0;  // number of completed steps
  double psnr = 0.0;
};

struct FitReport {
  int iterations = 0;
  std::vector<double> losses;
  std::vector<PsnrSample> psnr_trace;
  double final_loss = 0.0;
  double final_psnr = 0.0;
  std::size_t peak_workspace_bytes = 0;
  double wall_seconds = 0.0;

  std::string to_json() const;
};

FitReport fit(FieldParams<float>& params, const VideoTensor& video, const FitConfig& config,
              const AdamConfig& adam = {});

}  // namespace nvf
