#include "nvf/fitting.hpp"

#include <chrono>
#include <cmath>
#include "json.hpp"

#include "nvf/error.hpp"
#include "nvf/render.hpp"

namespace nvf {

PixelBatch sample_pixel_batch(const VideoTensor& video, int batch_size, RngState& rng) {
  require(batch_size >= 1, "batch size must be >= 1");
  const std::uint64_t total = std::uint64_t(video.frames) * video.height * video.width;
  std::uniform_int_distribution<std::uint64_t> pick(0, total - 1);
  PixelBatch batch;
  batch.coords.reserve(batch_size);
  batch.targets.reserve(batch_size);
  batch.source_indices.reserve(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    std::uint64_t idx = pick(rng.engine);
    int x = static_cast<int>(idx % video.width);
    int y = static_cast<int>((idx / video.width) % video.height);
    int t = static_cast<int>(idx / (std::uint64_t(video.width) * video.height));
    batch.coords.push_back({axis_coord(x, video.width), axis_coord(y, video.height), axis_coord(t, video.frames)});
    batch.targets.push_back({video.at(t, y, x, 0), video.at(t, y, x, 1), video.at(t, y, x, 2)});
    batch.source_indices.push_back({t, y, x});
  }
  return batch;
}

double fit_step(FieldParams<float>& params, const VideoTensor& video, int batch_size, RngState& rng,
                AdamState<float>& adam, int threads) {
  PixelBatch batch = sample_pixel_batch(video, batch_size, rng);
  const double inv_b = 1.0 / batch_size;
  GradientBuffer<float> grads(params);
  LossGradientFn<float> loss_fn = [&](std::size_t first, std::span<const float> rgb, std::span<float> upstream) {
    double acc = 0.0;
    for (std::size_t j = 0; j < rgb.size() / 3; ++j) {
      const auto& target = batch.targets[first + j];
      for (int c = 0; c < 3; ++c) {
        double d = double(rgb[3 * j + c]) - double(target[c]);
        acc += d * d;
        upstream[3 * j + c] = static_cast<float>(2.0 * d * inv_b);
      }
    }
    return acc;
  };
  double loss = accumulate_gradients(params, std::span<const Coord>(batch.coords), loss_fn, grads, threads) * inv_b;
  if (!std::isfinite(loss)) {
    fail(ErrorKind::training, "non-finite fitting loss at iteration " + std::to_string(adam.step));
  }
  adam_step(params, grads, adam);
  return loss;
}

void FitConfig::validate() const {
  if (batch_size < 1) fail(ErrorKind::config, "fit.batch_size must be >= 1");
  if (iterations < 1) fail(ErrorKind::config, "fit.iterations must be >= 1");
  if (log_interval < 1) fail(ErrorKind::config, "fit.log_interval must be >= 1");
  if (threads < 1) fail(ErrorKind::config, "threads must be >= 1");
}

std::string FitReport::to_json() const {
  nlohmann::ordered_json j;
  j["iterations"] = iterations;
  j["losses"] = losses;
  auto trace = nlohmann::ordered_json::array();
  for (const auto& s : psnr_trace) trace.push_back({{"iteration", s.iteration}, {"psnr", s.psnr}});
  j["psnr_trace"] = trace;
  j["final_loss"] = final_loss;
  j["final_psnr"] = final_psnr;
  j["peak_workspace_bytes"] = peak_workspace_bytes;
  j["wall_seconds"] = wall_seconds;
  return j.dump();
}

FitReport fit(FieldParams<float>& params, const VideoTensor& video, const FitConfig& config, const AdamConfig& adam) {
  config.validate();
  video.validate();
  const auto started = std::chrono::steady_clock::now();
  RngState rng(config.seed);
  AdamState<float> state(params.parameter_count(), adam);
  const RenderSpec grid = RenderSpec::original_grid(params.config());
  require(grid.width == video.width && grid.height == video.height && int(grid.time_samples.size()) == video.frames,
          "field was configured for a different video extent");

  FitReport report;
  report.losses.reserve(config.iterations);
  for (int i = 0; i < config.iterations; ++i) {
    double loss;
    {
      WorkspaceScope scope;
      loss = fit_step(params, video, config.batch_size, rng, state, config.threads);
      report.peak_workspace_bytes = std::max(report.peak_workspace_bytes, scope.peak_bytes());
    }
    report.losses.push_back(loss);
    report.iterations = i + 1;
    if ((i + 1) % config.log_interval == 0 || i + 1 == config.iterations) {
      double p = psnr(render_video(params, grid, config.threads), video);
      report.psnr_trace.push_back({i + 1, p});
      if (config.target_psnr && p >= *config.target_psnr) break;
    }
  }
  report.final_loss = report.losses.back();
  report.final_psnr = report.psnr_trace.back().psnr;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace nvf
