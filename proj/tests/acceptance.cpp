// Acceptance run: one PASS/FAIL line per primary criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "echo_responder.hpp"
#include "json.hpp"
#include "nvf/editing.hpp"
#include "nvf/error.hpp"
#include "nvf/fitting.hpp"
#include "nvf/guidance.hpp"
#include "nvf/image_ops.hpp"
#include "nvf/nvf.h"
#include "nvf/render.hpp"
#include "nvf/synthetic.hpp"
#include "synthetic_predictor.hpp"
#include "test_util.hpp"

using namespace nvf;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %2d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Runs a criterion body; an exception counts as a failure.
void criterion(int id, const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, name, false, std::string("threw: ") + e.what());
  }
}

VideoTensor map_frames(const VideoTensor& v, const std::function<Image(const Image&)>& f) {
  std::vector<Image> frames;
  for (int t = 0; t < v.frames; ++t) frames.push_back(f(v.frame_image(t)));
  return stack_frames(frames);
}

double min_frame_psnr(const VideoTensor& a, const VideoTensor& b) {
  double worst = kPsnrCap;
  for (int t = 0; t < a.frames; ++t) worst = std::min(worst, psnr(a.frame_image(t), b.frame_image(t)));
  return worst;
}

double hue_distance(float a, float b) {
  const double d = std::fmod(std::abs(double(a) - double(b)), 360.0);
  return std::min(d, 360.0 - d);
}

float hue_at(const Image& img, int y, int x) {
  return rgb_to_hsv({img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)})[0];
}

// 1. Analytic gradients against central finite differences.
void gradient_check() {
  const auto start = Clock::now();
  FieldConfig cfg;
  cfg.frames = 4;
  cfg.height = 8;
  cfg.width = 8;
  cfg.plane_x = cfg.plane_y = cfg.plane_t = 4;
  cfg.channels = 4;
  cfg.lattices = {{3, 3, 3}};
  cfg.lattice_channels = 4;
  cfg.decoder_layers = 2;
  cfg.hidden_width = 16;
  FieldParams<double> p(cfg);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& v : p.values()) v = u(rng);
  std::vector<Coord> coords;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 8; ++i) coords.push_back({unit(rng), unit(rng), unit(rng)});
  std::vector<Rgb<double>> upstream;
  for (std::size_t i = 0; i < coords.size(); ++i) upstream.push_back({u(rng), u(rng), u(rng)});
  auto objective = [&](const FieldParams<double>& q) {
    const auto out = forward(q, std::span<const Coord>(coords));
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i)
      for (int c = 0; c < 3; ++c) s += upstream[i][c] * out[i][c];
    return s;
  };
  GradientBuffer<double> g(p);
  backward(p, std::span<const Coord>(coords), std::span<const Rgb<double>>(upstream), g);
  const double h = 1e-3;
  double worst = 0.0;
  for (std::size_t i : testutil::random_indices(p.parameter_count(), 200, 2)) {
    FieldParams<double> q = p;
    q.values()[i] += h;
    const double plus = objective(q);
    q.values()[i] -= 2 * h;
    const double numeric = (plus - objective(q)) / (2 * h);
    const double analytic = g.values[i];
    worst = std::max(worst, std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
  }
  const double elapsed = seconds_since(start);
  report(1, "gradient correctness", worst < 1e-3 && elapsed < 30.0,
         fmt("worst relative error %.2e over 200 parameters (limit 1e-3), %.1f s (limit 30 s)", worst, elapsed));
}

struct Fitted {
  VideoTensor video;
  FieldParams<float> params;
};

// 2. Default-config fits of the moving square and a constant colour.
Fitted fitting(int iterations) {
  const auto video = synthetic::MovingSquare{}.video();
  const auto cfg = FieldConfig::defaults_for(video.frames, video.height, video.width);
  auto params = init_params(cfg, 7);
  FitConfig fc;
  fc.iterations = iterations;
  fc.log_interval = iterations;
  const auto r = fit(params, video, fc);

  const auto flat = synthetic::constant_video(16, 64, 64, {0.2f, 0.6f, 0.9f});
  auto flat_params = init_params(FieldConfig::defaults_for(16, 64, 64), 7);
  FitConfig flat_fc;
  flat_fc.iterations = 30000;
  flat_fc.log_interval = 50;
  flat_fc.target_psnr = 50.0;
  const auto rf = fit(flat_params, flat, flat_fc);

  const double total = r.wall_seconds + rf.wall_seconds;
  report(2, "fitting", r.final_psnr >= 35.0 && rf.final_psnr >= 50.0 && r.wall_seconds < 300.0 &&
                           rf.wall_seconds < 300.0,
         fmt("moving square %.2f dB after %d iterations in %.0f s (limit 35 dB, 300 s); constant colour %.2f dB after "
             "%d iterations in %.0f s (limit 50 dB); total %.0f s",
             r.final_psnr, r.iterations, r.wall_seconds, rf.final_psnr, rf.iterations, rf.wall_seconds, total));
  return {video, params};
}

// 3. bench-mem through the shared-library API.
void memory_constancy() {
  nvf_config* config = nullptr;
  char* json = nullptr;
  const int frames[] = {8, 32, 128};
  if (nvf_config_new(&config) != NVF_OK || nvf_bench_mem(config, frames, 3, 64, 64, &json) != NVF_OK) {
    report(3, "memory constancy", false, std::string("bench-mem failed: ") + nvf_last_error());
    nvf_config_free(config);
    return;
  }
  const auto doc = nlohmann::json::parse(json);
  nvf_string_free(json);
  nvf_config_free(config);
  const auto& r = doc["reports"];
  std::vector<std::size_t> peak, bytes;
  for (const auto& e : r) {
    peak.push_back(e["peak_workspace_bytes"].get<std::size_t>());
    bytes.push_back(e["parameter_bytes"].get<std::size_t>());
  }
  // Only the xt and yt planes have a time axis: R_t (R_x + R_y) C floats.
  bool slope_ok = true;
  std::string slopes;
  for (int i = 0; i + 1 < 3; ++i) {
    const auto a = FieldConfig::defaults_for(frames[i], 64, 64);
    const auto b = FieldConfig::defaults_for(frames[i + 1], 64, 64);
    const std::size_t temporal = std::size_t(b.plane_t - a.plane_t) * (a.plane_x + a.plane_y) * a.channels * 4;
    slope_ok = slope_ok && bytes[i + 1] - bytes[i] == temporal;
    slopes += fmt(" %d->%d: +%zu (temporal arrays +%zu)", frames[i], frames[i + 1], bytes[i + 1] - bytes[i], temporal);
  }
  const bool constant = peak[0] == peak[1] && peak[1] == peak[2];
  report(3, "memory constancy", constant && slope_ok,
         fmt("peak workspace %zu / %zu / %zu bytes for T = 8 / 32 / 128; parameter bytes", peak[0], peak[1], peak[2]) +
             slopes);
}

struct Edited {
  FieldParams<float> params;
  double video_psnr = 0.0;
};

// 4 and 5. Hue-shift propagation, then the same run with 20% corrupted pseudo-GTs.
Edited edit_propagation(const Fitted& f) {
  const auto target = map_frames(f.video, [](const Image& im) { return hue_shift(im, 180.0); });
  auto hue = builtin_editor(EditorKind::hue_shift, {180.0});
  EditConfig ec;
  ec.schedule.total_iterations = 10 * f.video.frames;
  ec.seed = 7;

  Edited clean{f.params};
  const auto r = field_edit(clean.params, f.video, *hue, ec);
  const auto grid = RenderSpec::original_grid(f.params.config());
  const auto out = render_video(clean.params, grid);
  const double worst = min_frame_psnr(out, target);
  const double tc = temporal_consistency(out);
  const double tc_orig = temporal_consistency(f.video);
  clean.video_psnr = psnr(out, target);
  report(4, "global edit propagation", worst >= 30.0 && tc <= 1.5 * tc_orig,
         fmt("min per-frame PSNR %.2f dB vs hue-shift(original) (limit 30 dB); temporal consistency %.5f vs 1.5 x %.5f "
             "= %.5f; %d iterations in %.0f s",
             worst, tc, tc_orig, 1.5 * tc_orig, r.iterations, r.wall_seconds));
  return clean;
}

void corruption_robustness(const Fitted& f, const Edited& clean) {
  const auto target = map_frames(f.video, [](const Image& im) { return hue_shift(im, 180.0); });
  auto hue = builtin_editor(EditorKind::hue_shift, {180.0});
  CorruptingEditor corrupt(*hue, 0.2, 7);
  EditConfig ec;
  ec.schedule.total_iterations = 10 * f.video.frames;
  ec.seed = 7;
  auto params = f.params;
  field_edit(params, f.video, corrupt, ec);
  const double p = psnr(render_video(params, RenderSpec::original_grid(f.params.config())), target);
  const double drop = clean.video_psnr - p;
  report(5, "pseudo-GT robustness", drop <= 2.0,
         fmt("target PSNR %.2f dB clean vs %.2f dB with %d of %d pseudo-GTs replaced by noise: drop %.2f dB (limit 2 dB)",
             clean.video_psnr, p, corrupt.corrupted(), ec.schedule.total_iterations, drop));
}

// 6. Guidance corner weightings with a synthetic predictor.
void guidance_algebra() {
  testutil::RectanglePredictor pred(16, 16, 4, {3, 4, 11, 12}, 5);
  auto same = [](const LatentTensor& a, const LatentTensor& b) {
    return a.same_shape(b) && std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0;
  };
  int full_ok = 0, image_ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto z = testutil::random_latent(16, 16, 4, 1000 + i);
    full_ok += same(combine_guidance(pred, z, {1.0, 1.0}), pred.predict(z, true, true));
    image_ok += same(combine_guidance(pred, z, {1.0, 0.0}), pred.predict(z, true, false));
  }
  report(6, "guidance algebra", full_ok == 1000 && image_ok == 1000,
         fmt("(s_I,s_P)=(1,1) bit-exact on %d/1000 latents; (1,0) bit-exact on %d/1000", full_ok, image_ok));
}

// 7. Mask from a rectangle-supported delta and the latent blend.
void mask_fidelity() {
  const std::array<int, 4> rect{5, 3, 17, 11};
  testutil::RectanglePredictor pred(16, 24, 4, rect, 6);
  const auto z = testutil::random_latent(16, 24, 4, 7);
  const auto mask = build_aux_mask(instruction_delta(pred, z), 0.1);
  int mask_mismatch = 0;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 24; ++x) mask_mismatch += mask.at(y, x) != (pred.inside(y, x) ? 1 : 0);
  const auto edit = testutil::random_latent(16, 24, 4, 8);
  const auto cond = testutil::random_latent(16, 24, 4, 9);
  const auto blended = blend_latents(edit, cond, mask);
  int outside_changed = 0, inside_wrong = 0;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 24; ++x)
      for (int c = 0; c < 4; ++c) {
        const float want = pred.inside(y, x) ? edit.at(y, x, c) : cond.at(y, x, c);
        const float got = blended.at(y, x, c);
        const bool equal = std::memcmp(&want, &got, sizeof(float)) == 0;
        if (!equal) (pred.inside(y, x) ? inside_wrong : outside_changed)++;
      }
  report(7, "mask fidelity", mask_mismatch == 0 && outside_changed == 0 && inside_wrong == 0,
         fmt("tau 0.1 mask differs from the rectangle at %d pixels; %d outside and %d inside entries not preserved",
             mask_mismatch, outside_changed, inside_wrong));
}

// 8. Mid-frame interpolation and edit carry-over.
void interpolation(const Fitted& f, const Edited& edited) {
  const synthetic::MovingSquare square{};
  const int w = f.video.width, h = f.video.height;
  double worst = kPsnrCap;
  long carried = 0, total = 0;
  for (int k = 0; k + 1 < f.video.frames; ++k) {
    worst = std::min(worst, psnr(interpolate(f.params, k, 0.5, w, h), square.frame_at(k + 0.5)));
    const auto mid = interpolate(edited.params, k, 0.5, w, h);
    const auto a = f.video.frame_image(k), b = f.video.frame_image(k + 1);
    const auto ea = hue_shift(a, 180.0), eb = hue_shift(b, 180.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const float m = hue_at(mid, y, x);
        const double to_edited = 0.5 * (hue_distance(m, hue_at(ea, y, x)) + hue_distance(m, hue_at(eb, y, x)));
        const double to_original = 0.5 * (hue_distance(m, hue_at(a, y, x)) + hue_distance(m, hue_at(b, y, x)));
        carried += to_edited < to_original;
        ++total;
      }
  }
  const double share = double(carried) / total;
  report(8, "interpolation", worst >= 28.0 && share >= 0.95,
         fmt("min PSNR of alpha=0.5 frames vs analytic mid-frames %.2f dB (limit 28 dB); edited mid-frames closer in hue "
             "to edited neighbours on %.2f%% of pixels (limit 95%%)",
             worst, 100.0 * share));
}

// 9. A posterize stage stacked on the hue-shifted field.
void composed_editing(const Fitted& f, const Edited& edited) {
  auto params = edited.params;
  EditorOptions o;
  o.levels = 4;
  auto post = builtin_editor(EditorKind::posterize, o);
  EditConfig ec;
  ec.schedule.total_iterations = 10 * f.video.frames;
  ec.reference = ReferenceSource::field;
  ec.seed = 7;
  field_edit(params, f.video, *post, ec);
  const auto target =
      map_frames(f.video, [&](const Image& im) { return posterize(hue_shift(im, 180.0), o.levels); });
  const auto out = render_video(params, RenderSpec::original_grid(params.config()));
  const double worst = min_frame_psnr(out, target);
  report(9, "composed editing", worst >= 28.0,
         fmt("min per-frame PSNR %.2f dB vs posterize(hue-shift(original)) (limit 28 dB); video %.2f dB", worst,
             psnr(out, target)));
}

// 10. 2x super-resolution through the upscale2x editor.
void super_resolution() {
  const auto video = synthetic::MovingSquare::for_size(16, 32, 32).video();
  const auto cfg = FieldConfig::defaults_for(16, 32, 32);
  auto params = init_params(cfg, 7);
  FitConfig fc;
  fc.iterations = 300;
  fc.log_interval = 300;
  fc.batch_size = 16384;
  fit(params, video, fc);
  auto up = builtin_editor(EditorKind::upscale2x);
  EditConfig ec;
  ec.schedule.total_iterations = 10 * video.frames;
  ec.seed = 7;
  field_edit(params, video, *up, ec);
  RenderSpec spec{64, 64, RenderSpec::original_grid(cfg).time_samples};
  const auto out = render_video(params, spec);
  const auto target = map_frames(video, [](const Image& im) { return upscale2x_bicubic(im); });
  const double p = psnr(out, target);
  report(10, "super-resolution substitution", p >= 30.0,
         fmt("64x64 render vs bicubic-upscaled 32x32 source %.2f dB (limit 30 dB); min frame %.2f dB", p,
             min_frame_psnr(out, target)));
}

// 11. Exchange-directory echo against the 8-bit identity editor, and timeout.
void protocol_conformance() {
  const auto video = synthetic::MovingSquare::for_size(8, 16, 16).video();
  auto cfg = FieldConfig::defaults_for(8, 16, 16);
  auto base = init_params(cfg, 3);
  FitConfig fc;
  fc.iterations = 50;
  fc.batch_size = 2048;
  fc.log_interval = 50;
  fit(base, video, fc);
  EditConfig ec;
  ec.schedule.total_iterations = 50;

  auto via_echo = base;
  EditReport echo_report;
  {
    testutil::TempDir dir;
    testutil::EchoResponder responder(dir.path);
    auto external = external_editor(dir.path, 30.0);
    echo_report = field_edit(via_echo, video, *external, ec);
  }
  auto via_builtin = base;
  testutil::Quantized8Identity identity;
  const auto builtin_report = field_edit(via_builtin, video, identity, ec);
  bool losses_equal = echo_report.losses.size() == builtin_report.losses.size();
  for (std::size_t i = 0; losses_equal && i < echo_report.losses.size(); ++i) {
    losses_equal = echo_report.losses[i].l1_loss == builtin_report.losses[i].l1_loss;
  }
  const bool params_equal = serialize(via_echo) == serialize(via_builtin);

  const double timeout = 2.0;
  double elapsed = -1.0;
  bool timed_out = false;
  {
    testutil::TempDir dir;
    testutil::EchoResponder silent(dir.path, testutil::EchoResponder::Mode::silent);
    auto external = external_editor(dir.path, timeout);
    const auto start = Clock::now();
    try {
      external->edit(video.frame_image(0), video.frame_image(0), {});
    } catch (const Error& e) {
      timed_out = e.kind() == ErrorKind::edit;
    }
    elapsed = seconds_since(start);
  }
  const bool timing_ok = timed_out && std::abs(elapsed - timeout) <= 1.0;
  report(11, "protocol conformance", params_equal && losses_equal && timing_ok,
         fmt("50-iteration echo run vs built-in 8-bit identity: parameters %s, losses %s; timeout of %.1f s fired "
             "after %.2f s (bound +/- 1 s)",
             params_equal ? "bit-identical" : "differ", losses_equal ? "identical" : "differ", timeout, elapsed));
}

}  // namespace

int main(int argc, char** argv) {
  // The pre-fit budget for criteria 2, 4, 5, 8 and 9; stays within 30k.
  const int fit_iterations = argc > 1 ? std::atoi(argv[1]) : 1000;
  const auto start = Clock::now();
  criterion(1, "gradient correctness", gradient_check);
  std::optional<Fitted> fitted;
  criterion(2, "fitting", [&] { fitted.emplace(fitting(fit_iterations)); });
  criterion(3, "memory constancy", memory_constancy);
  std::optional<Edited> edited;
  if (fitted) {
    criterion(4, "global edit propagation", [&] { edited.emplace(edit_propagation(*fitted)); });
  } else {
    report(4, "global edit propagation", false, "no fitted field");
  }
  if (fitted && edited) {
    criterion(5, "pseudo-GT robustness", [&] { corruption_robustness(*fitted, *edited); });
  } else {
    report(5, "pseudo-GT robustness", false, "no edited field");
  }
  criterion(6, "guidance algebra", guidance_algebra);
  criterion(7, "mask fidelity", mask_fidelity);
  if (fitted && edited) {
    criterion(8, "interpolation", [&] { interpolation(*fitted, *edited); });
    criterion(9, "composed editing", [&] { composed_editing(*fitted, *edited); });
  } else {
    report(8, "interpolation", false, "no edited field");
    report(9, "composed editing", false, "no edited field");
  }
  criterion(10, "super-resolution substitution", super_resolution);
  criterion(11, "protocol conformance", protocol_conformance);
  std::printf("%d of 11 criteria failed; %.0f s\n", failures, seconds_since(start));
  return failures == 0 ? 0 : 1;
}
