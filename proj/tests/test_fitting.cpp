#include <cmath>
#include <map>

#include "doctest.h"
#include "json.hpp"
#include "nvf/error.hpp"
#include "nvf/fitting.hpp"
#include "nvf/render.hpp"
#include "nvf/synthetic.hpp"
#include "test_util.hpp"

using namespace nvf;

namespace {

FieldConfig tiny_config(int frames, int height, int width) {
  FieldConfig c = FieldConfig::defaults_for(frames, height, width);
  c.lattices = {{2, 4, 4}};
  c.channels = 4;
  c.hidden_width = 16;
  return c;
}

VideoTensor noise_video(int t, int h, int w, std::uint64_t seed) {
  VideoTensor v(t, h, w);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto& x : v.data) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("pixel batches are uniform, exact and deterministic") {
  VideoTensor v(1, 2, 2);
  for (int i = 0; i < 4; ++i) v.data[3 * i] = 0.25f * i;
  RngState rng(5);
  const auto batch = sample_pixel_batch(v, 4096, rng);
  REQUIRE(batch.size() == 4096);
  std::map<int, int> counts;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto [t, y, x] = batch.source_indices[i];
    counts[y * 2 + x]++;
    for (int c = 0; c < 3; ++c) CHECK(batch.targets[i][c] == v.at(t, y, x, c));
    CHECK(batch.coords[i].x == axis_coord(x, 2));
    CHECK(batch.coords[i].y == axis_coord(y, 2));
    CHECK(batch.coords[i].t == 0.0);
  }
  for (const auto& [pixel, n] : counts) CHECK(std::abs(n / 4096.0 - 0.25) <= 0.05);

  RngState a(9), b(9);
  const auto ba = sample_pixel_batch(v, 100, a);
  const auto bb = sample_pixel_batch(v, 100, b);
  CHECK(ba.source_indices == bb.source_indices);
}

TEST_CASE("fit_step returns the naive batch MSE") {
  const auto video = noise_video(3, 6, 5, 1);
  auto params = init_params(tiny_config(3, 6, 5), 2);
  RngState rng(3), replay(3);
  AdamState<float> adam(params.parameter_count());
  const auto before = params;
  const double loss = fit_step(params, video, 64, rng, adam);
  const auto batch = sample_pixel_batch(video, 64, replay);
  const auto out = forward(before, std::span<const Coord>(batch.coords));
  double naive = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i)
    for (int c = 0; c < 3; ++c) naive += std::pow(double(batch.targets[i][c]) - out[i][c], 2);
  naive /= double(out.size());
  CHECK(loss == doctest::Approx(naive).epsilon(1e-5));
}

TEST_CASE("zero loss leaves parameters unchanged") {
  // All-zero parameters render 0.5 everywhere; a 0.5 video has zero error.
  const auto cfg = tiny_config(2, 4, 4);
  FieldParams<float> params(cfg);
  const auto video = synthetic::constant_video(2, 4, 4, {0.5f, 0.5f, 0.5f});
  RngState rng(1);
  AdamState<float> adam(params.parameter_count());
  CHECK(fit_step(params, video, 128, rng, adam) == 0.0);
  for (float v : params.values()) CHECK(v == 0.0f);
}

TEST_CASE("constant video converges and renders its colour") {
  const std::array<float, 3> colour{0.2f, 0.6f, 0.9f};
  const auto video = synthetic::constant_video(2, 8, 8, colour);
  // One temporal vertex per frame so every vertex receives samples.
  auto cfg = tiny_config(2, 8, 8);
  cfg.plane_t = 2;
  auto params = init_params(cfg, 4);
  FitConfig fc;
  fc.iterations = 1500;
  fc.batch_size = 1024;
  fc.log_interval = 500;
  const auto report = fit(params, video, fc);
  CHECK(report.final_loss < 1e-6);
  for (double t : {0.0, 0.37, 1.0}) {
    const auto frame = render_frame(params, 8, 8, t);
    for (std::size_t i = 0; i < frame.data.size(); ++i) CHECK(std::abs(frame.data[i] - colour[i % 3]) <= 1.0 / 255);
  }
  const auto mid = interpolate(params, 0, 0.5, 8, 8);
  for (std::size_t i = 0; i < mid.data.size(); ++i) CHECK(std::abs(mid.data[i] - colour[i % 3]) <= 1.0 / 255);
}

TEST_CASE("fit reports, early stop and determinism") {
  const auto video = synthetic::MovingSquare::for_size(4, 16, 16).video();
  const auto cfg = tiny_config(4, 16, 16);
  FitConfig fc;
  fc.iterations = 40;
  fc.batch_size = 512;
  fc.log_interval = 10;
  fc.seed = 11;

  auto p1 = init_params(cfg, 1);
  auto p2 = init_params(cfg, 1);
  const auto r1 = fit(p1, video, fc);
  const auto r2 = fit(p2, video, fc);
  CHECK(r1.iterations == 40);
  REQUIRE(r1.psnr_trace.size() == 4);
  CHECK(r1.psnr_trace.back().iteration == 40);
  CHECK(r1.losses == r2.losses);
  CHECK(serialize(p1) == serialize(p2));
  for (std::size_t i = 0; i < r1.psnr_trace.size(); ++i) CHECK(r1.psnr_trace[i].psnr == r2.psnr_trace[i].psnr);

  // Final PSNR equals a fresh render, and survives a save/load round trip.
  const auto rendered = render_video(p1, RenderSpec::original_grid(cfg));
  CHECK(psnr(rendered, video) == r1.final_psnr);
  const auto reloaded = deserialize(std::span<const std::uint8_t>(serialize(p1)));
  CHECK(psnr(render_video(reloaded, RenderSpec::original_grid(cfg)), video) == r1.final_psnr);

  const auto doc = nlohmann::json::parse(r1.to_json());
  for (const char* key : {"iterations", "losses", "psnr_trace", "peak_workspace_bytes", "wall_seconds"}) {
    CHECK(doc.contains(key));
  }

  fc.target_psnr = 0.0;
  auto p3 = init_params(cfg, 1);
  const auto r3 = fit(p3, video, fc);
  CHECK(r3.iterations == fc.log_interval);
  CHECK(r3.psnr_trace.size() == 1);

  FitConfig bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(fit(p3, video, bad), Error);
}

TEST_CASE("smoothed fitting loss does not increase on the synthetic suite") {
  const auto video = synthetic::MovingSquare::for_size(4, 16, 16).video();
  auto params = init_params(tiny_config(4, 16, 16), 3);
  FitConfig fc;
  fc.iterations = 1500;
  fc.batch_size = 512;
  fc.log_interval = 1500;
  const auto report = fit(params, video, fc);
  std::vector<double> windows;
  for (int start = 0; start + 500 <= fc.iterations; start += 500) {
    double s = 0.0;
    for (int i = start; i < start + 500; ++i) s += report.losses[i];
    windows.push_back(s / 500);
  }
  for (std::size_t i = 1; i < windows.size(); ++i) CHECK(windows[i] <= windows[i - 1]);
}

TEST_CASE("fit workspace depends on the batch only") {
  auto step_bytes = [](int t, int h, int w, int batch) {
    const auto video = synthetic::MovingSquare::for_size(t, h, w).video();
    auto params = init_params(tiny_config(t, h, w), 0);
    RngState rng(0);
    AdamState<float> adam(params.parameter_count());
    WorkspaceScope scope;
    fit_step(params, video, batch, rng, adam);
    return scope.peak_bytes();
  };
  const auto base = step_bytes(4, 16, 16, 2048);
  CHECK(step_bytes(12, 16, 16, 2048) == base);
  CHECK(step_bytes(4, 24, 40, 2048) == base);
  const double ratio = double(step_bytes(4, 16, 16, 4096)) / base;
  CHECK(ratio >= 2.0 / 1.2);
  CHECK(ratio <= 2.0 * 1.2);
}
