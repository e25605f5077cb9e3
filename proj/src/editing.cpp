#include "nvf/editing.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"
#include "nvf/error.hpp"
#include "nvf/guidance.hpp"
#include "nvf/image_ops.hpp"
#include "nvf/render.hpp"
#include "nvf/workspace.hpp"

namespace nvf {

void EditSchedule::validate() const {
  auto unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (!unit(s_min) || !unit(s_max)) fail(ErrorKind::config, "edit strengths must lie in [0,1]");
  if (s_min > s_max) fail(ErrorKind::config, "edit.s_min must not exceed edit.s_max");
  if (total_iterations < 1) fail(ErrorKind::config, "edit.iterations must be >= 1");
}

double strength(const EditSchedule& schedule, int iteration) {
  require(iteration >= 0 && iteration < schedule.total_iterations,
          "schedule iteration " + std::to_string(iteration) + " outside [0, " +
              std::to_string(schedule.total_iterations) + ")");
  if (schedule.total_iterations == 1) return schedule.s_max;
  const double u = static_cast<double>(iteration) / (schedule.total_iterations - 1);
  const double ramp = schedule.shape == ScheduleShape::linear ? u : 0.5 * (1.0 - std::cos(std::numbers::pi * u));
  if (iteration == schedule.total_iterations - 1) return schedule.s_max;
  return schedule.s_min + (schedule.s_max - schedule.s_min) * ramp;
}

void EditConfig::validate() const {
  schedule.validate();
  if (!(t_lower >= 0.0 && t_lower <= t_upper && t_upper <= 1.0)) {
    fail(ErrorKind::config, "edit.t_l and edit.t_u must satisfy 0 <= t_l <= t_u <= 1");
  }
  if (tau && !(*tau >= 0.0 && *tau <= 1.0)) fail(ErrorKind::config, "edit.tau must lie in [0,1]");
  if (!(max_failure_fraction >= 0.0 && max_failure_fraction <= 1.0)) {
    fail(ErrorKind::config, "edit.max_failure_fraction must lie in [0,1]");
  }
  if (consistency_interval < 0) fail(ErrorKind::config, "edit.consistency_interval must be >= 0");
  if (threads < 1) fail(ErrorKind::config, "threads must be >= 1");
  if (!(lr_final_fraction > 0.0 && lr_final_fraction <= 1.0)) {
    fail(ErrorKind::config, "edit.lr_final_fraction must lie in (0,1]");
  }
  if (lr_warmup_iterations < 0) fail(ErrorKind::config, "edit.lr_warmup must be >= 0");
}

AdamConfig default_edit_optimizer() {
  AdamConfig c;
  c.lr_explicit = 1e-4;
  c.lr_implicit = 5e-2;
  return c;
}

double edit_lr_scale(const EditConfig& config, int iteration) {
  const int n = config.schedule.total_iterations;
  const double u = n > 1 ? static_cast<double>(iteration) / (n - 1) : 1.0;
  const double decay = 1.0 - (1.0 - config.lr_final_fraction) * 0.5 * (1.0 - std::cos(std::numbers::pi * u));
  const int warmup = config.lr_warmup_iterations;
  return iteration < warmup ? decay * (iteration + 1) / (warmup + 1) : decay;
}

int pick_frame(const EditConfig& config, int iteration, int frames) {
  if (config.frame_pick == FramePick::cyclic) return iteration % frames;
  std::mt19937_64 rng(config.seed ^ (0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(iteration) + 1)));
  return static_cast<int>(std::uniform_int_distribution<int>(0, frames - 1)(rng));
}

namespace {

void check_pseudo_gt(const Image& img, int iteration, int frame) {
  auto where = " (iteration " + std::to_string(iteration) + ", frame " + std::to_string(frame) + ")";
  if (img.width < 2 || img.height < 2 || img.data.size() != img.pixels() * 3) {
    fail(ErrorKind::edit, "editor returned an invalid frame" + where);
  }
  for (float v : img.data) {
    if (!(v >= 0.0f && v <= 1.0f)) fail(ErrorKind::edit, "editor output outside [0,1]" + where);
  }
}

}  // namespace

EditStepResult edit_step(FieldParams<float>& params, const VideoTensor& video, FrameEditor& editor,
                         const EditConfig& config, int iteration, AdamState<float>& adam,
                         const FieldParams<float>* reference_field, PseudoGT* pseudo_out) {
  require(iteration >= 0 && iteration < config.schedule.total_iterations, "edit iteration out of range");
  require(video.frames == params.config().frames, "video frame count does not match the field");
  const int t = pick_frame(config, iteration, video.frames);
  const double tc = axis_coord(t, video.frames);

  Image original;
  if (config.reference == ReferenceSource::field) {
    require(reference_field != nullptr, "reference field required for field-referenced editing");
    original = render_frame(*reference_field, video.width, video.height, tc, config.threads);
  } else {
    original = video.frame_image(t);
  }
  const Image rendered = render_frame(params, video.width, video.height, tc, config.threads);

  EditRequest request{iteration, t, config.instruction, strength(config.schedule, iteration)};
  Image pseudo;
  try {
    pseudo = editor.edit(rendered, original, request);
  } catch (const Error& e) {
    fail(ErrorKind::edit, "editor failed at iteration " + std::to_string(iteration) + ", frame " +
                              std::to_string(t) + ": " + e.what());
  } catch (const std::exception& e) {
    fail(ErrorKind::edit, "editor failed at iteration " + std::to_string(iteration) + ", frame " +
                              std::to_string(t) + ": " + e.what());
  }
  check_pseudo_gt(pseudo, iteration, t);

  // The field is resolution-free: supervise on the pseudo-GT's own grid.
  const Buffer<Coord> coords = frame_coords(pseudo.width, pseudo.height, tc);
  const double inv_n = 1.0 / (3.0 * static_cast<double>(coords.size()));
  GradientBuffer<float> grads(params);
  LossGradientFn<float> l1 = [&](std::size_t first, std::span<const float> rgb, std::span<float> upstream) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rgb.size(); ++i) {
      double d = double(rgb[i]) - double(pseudo.data[3 * first + i]);
      acc += std::abs(d);
      upstream[i] = static_cast<float>(d > 0.0 ? inv_n : (d < 0.0 ? -inv_n : 0.0));
    }
    return acc;
  };
  const double loss =
      accumulate_gradients(params, std::span<const Coord>(coords), l1, grads, config.threads) * inv_n;
  if (!std::isfinite(loss)) {
    fail(ErrorKind::training, "non-finite editing loss at iteration " + std::to_string(iteration));
  }
  adam_step(params, grads, adam);
  if (pseudo_out) *pseudo_out = PseudoGT{t, std::move(pseudo), iteration};
  return {t, loss};
}

std::string EditReport::to_json() const {
  nlohmann::ordered_json j;
  j["iterations"] = iterations;
  j["editor"] = editor;
  auto loss_list = nlohmann::ordered_json::array();
  for (const auto& s : losses) {
    loss_list.push_back({{"iteration", s.iteration}, {"frame_index", s.frame_index}, {"l1_loss", s.l1_loss}});
  }
  j["losses"] = loss_list;
  nlohmann::ordered_json per_frame = nlohmann::ordered_json::object();
  for (const auto& [frame, values] : per_frame_losses) per_frame[std::to_string(frame)] = values;
  j["per_frame_losses"] = per_frame;
  j["skipped_iterations"] = skipped_iterations;
  j["skipped_reasons"] = skipped_reasons;
  auto tc = nlohmann::ordered_json::array();
  for (const auto& s : consistency_trace) {
    tc.push_back({{"iteration", s.iteration}, {"temporal_consistency", s.temporal_consistency}});
  }
  j["temporal_consistency_trace"] = tc;
  j["peak_workspace_bytes"] = peak_workspace_bytes;
  j["wall_seconds"] = wall_seconds;
  return j.dump();
}

EditReport field_edit(FieldParams<float>& params, const VideoTensor& video, FrameEditor& editor,
                      const EditConfig& config, const AdamConfig& adam) {
  config.validate();
  video.validate();
  const auto started = std::chrono::steady_clock::now();
  std::optional<FieldParams<float>> reference;
  if (config.reference == ReferenceSource::field) reference.emplace(params);

  const int total = config.schedule.total_iterations;
  const int allowed_failures = static_cast<int>(std::floor(config.max_failure_fraction * total));
  const int interval = config.consistency_interval > 0 ? config.consistency_interval : video.frames;
  const RenderSpec grid = RenderSpec::original_grid(params.config());

  AdamState<float> state(params.parameter_count(), adam);
  EditReport report;
  report.editor = editor.describe();
  for (int i = 0; i < total; ++i) {
    const double scale = edit_lr_scale(config, i);
    state.config.lr_explicit = adam.lr_explicit * scale;
    state.config.lr_implicit = adam.lr_implicit * scale;
    try {
      WorkspaceScope scope;
      EditStepResult r = edit_step(params, video, editor, config, i, state, reference ? &*reference : nullptr);
      report.peak_workspace_bytes = std::max(report.peak_workspace_bytes, scope.peak_bytes());
      report.losses.push_back({i, r.frame_index, r.l1_loss});
      report.per_frame_losses[r.frame_index].push_back(r.l1_loss);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::edit) throw;
      report.skipped_iterations.push_back(i);
      report.skipped_reasons.emplace_back(e.what());
      if (static_cast<int>(report.skipped_iterations.size()) > allowed_failures) {
        fail(ErrorKind::edit, "aborting field edit after " + std::to_string(report.skipped_iterations.size()) +
                                  " failed editor calls (allowed " + std::to_string(allowed_failures) +
                                  "): " + e.what());
      }
    }
    report.iterations = i + 1;
    if (video.frames >= 2 && ((i + 1) % interval == 0 || i + 1 == total)) {
      report.consistency_trace.push_back({i + 1, temporal_consistency(render_video(params, grid, config.threads))});
    }
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

// ---------------------------------------------------------------------------
// Built-in editors

EditorKind parse_editor_kind(std::string_view name) {
  if (name == "identity") return EditorKind::identity;
  if (name == "hue-shift") return EditorKind::hue_shift;
  if (name == "sepia") return EditorKind::sepia;
  if (name == "posterize") return EditorKind::posterize;
  if (name == "region-recolor") return EditorKind::region_recolor;
  if (name == "upscale2x") return EditorKind::upscale2x;
  fail(ErrorKind::config, "unknown editor kind '" + std::string(name) + "'");
}

std::string_view to_string(EditorKind kind) {
  switch (kind) {
    case EditorKind::identity: return "identity";
    case EditorKind::hue_shift: return "hue-shift";
    case EditorKind::sepia: return "sepia";
    case EditorKind::posterize: return "posterize";
    case EditorKind::region_recolor: return "region-recolor";
    case EditorKind::upscale2x: return "upscale2x";
  }
  return "unknown";
}

namespace {

class IdentityEditor final : public FrameEditor {
 public:
  Image edit(const Image& rendered, const Image&, const EditRequest&) override { return rendered; }
  std::string describe() const override { return "identity"; }
};

class ColourEditor final : public FrameEditor {
 public:
  ColourEditor(EditorKind kind, EditorOptions options) : kind_(kind), options_(options) {}

  Image edit(const Image& rendered, const Image& original, const EditRequest& request) override {
    require(rendered.same_shape(original), "rendered and original frames differ in size");
    Image effect;
    switch (kind_) {
      case EditorKind::hue_shift: effect = hue_shift(original, options_.hue_degrees); break;
      case EditorKind::sepia: effect = sepia(original); break;
      case EditorKind::posterize: effect = posterize(original, options_.levels); break;
      default: fail(ErrorKind::contract, "not a colour editor");
    }
    return blend(rendered, effect, request.strength);
  }

  std::string describe() const override {
    std::ostringstream s;
    s << to_string(kind_);
    if (kind_ == EditorKind::hue_shift) s << " degrees=" << options_.hue_degrees;
    if (kind_ == EditorKind::posterize) s << " levels=" << options_.levels;
    return s.str();
  }

 private:
  EditorKind kind_;
  EditorOptions options_;
};

// Recolours the chosen rectangle to a target hue; the pixel-space guidance
// mask of (recoloured vs reference) confines the change before blending.
class RegionRecolorEditor final : public FrameEditor {
 public:
  explicit RegionRecolorEditor(EditorOptions options) : options_(options) {}

  Image edit(const Image& rendered, const Image& original, const EditRequest& request) override {
    require(rendered.same_shape(original), "rendered and original frames differ in size");
    const auto [x0, y0, x1, y1] = options_.region;
    if (x1 > original.width || y1 > original.height) {
      fail(ErrorKind::edit, "region-recolor rectangle exceeds the frame");
    }
    Image candidate = original;
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        auto hsv = rgb_to_hsv({original.at(y, x, 0), original.at(y, x, 1), original.at(y, x, 2)});
        hsv[0] = static_cast<float>(options_.region_hue);
        auto rgb = hsv_to_rgb(hsv);
        for (int c = 0; c < 3; ++c) candidate.at(y, x, c) = std::clamp(rgb[c], 0.0f, 1.0f);
      }
    }
    const AuxMask mask = pixel_mask_from_frames(candidate, original, options_.tau);
    Image full = original;
    for (int y = 0; y < full.height; ++y) {
      for (int x = 0; x < full.width; ++x) {
        if (!mask.at(y, x)) continue;
        for (int c = 0; c < 3; ++c) full.at(y, x, c) = candidate.at(y, x, c);
      }
    }
    return blend(rendered, full, request.strength);
  }

  std::string describe() const override {
    std::ostringstream s;
    s << "region-recolor region=" << options_.region[0] << "," << options_.region[1] << "," << options_.region[2]
      << "," << options_.region[3] << " hue=" << options_.region_hue << " tau=" << options_.tau;
    return s.str();
  }

 private:
  EditorOptions options_;
};

// 2x super-resolution. Strength blends from pixel replication of the render
// (the unchanged render on the doubled grid) to bicubic of the reference frame.
class Upscale2xEditor final : public FrameEditor {
 public:
  Image edit(const Image& rendered, const Image& original, const EditRequest& request) override {
    require(rendered.same_shape(original), "rendered and original frames differ in size");
    return blend(upscale2x_nearest(rendered), upscale2x_bicubic(original), request.strength);
  }
  std::string describe() const override { return "upscale2x"; }
};

}  // namespace

std::unique_ptr<FrameEditor> builtin_editor(EditorKind kind, const EditorOptions& options) {
  switch (kind) {
    case EditorKind::identity: return std::make_unique<IdentityEditor>();
    case EditorKind::hue_shift:
      if (!std::isfinite(options.hue_degrees)) fail(ErrorKind::config, "edit.hue_degrees must be finite");
      return std::make_unique<ColourEditor>(kind, options);
    case EditorKind::sepia: return std::make_unique<ColourEditor>(kind, options);
    case EditorKind::posterize:
      if (options.levels < 2 || options.levels > 256) fail(ErrorKind::config, "edit.levels must lie in [2, 256]");
      return std::make_unique<ColourEditor>(kind, options);
    case EditorKind::region_recolor: {
      const auto [x0, y0, x1, y1] = options.region;
      if (x0 < 0 || y0 < 0 || x1 <= x0 || y1 <= y0) {
        fail(ErrorKind::config, "edit.region must be x0,y0,x1,y1 with 0 <= x0 < x1 and 0 <= y0 < y1");
      }
      if (!(options.tau >= 0.0 && options.tau <= 1.0)) fail(ErrorKind::config, "edit.tau must lie in [0,1]");
      if (!std::isfinite(options.region_hue)) fail(ErrorKind::config, "edit.region_hue must be finite");
      return std::make_unique<RegionRecolorEditor>(options);
    }
    case EditorKind::upscale2x: return std::make_unique<Upscale2xEditor>();
  }
  fail(ErrorKind::config, "unknown editor kind");
}

CorruptingEditor::CorruptingEditor(FrameEditor& inner, double fraction, std::uint64_t seed)
    : inner_(inner), fraction_(fraction), seed_(seed) {
  require(fraction >= 0.0 && fraction <= 1.0, "corruption fraction must lie in [0,1]");
}

Image CorruptingEditor::edit(const Image& rendered, const Image& original, const EditRequest& request) {
  Image out = inner_.edit(rendered, original, request);
  std::mt19937_64 rng(seed_ ^ (0xD1B54A32D192ED03ull * (static_cast<std::uint64_t>(request.iteration) + 1)));
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  if (unit(rng) >= fraction_) return out;
  ++corrupted_;
  for (float& v : out.data) v = unit(rng);
  return out;
}

std::string CorruptingEditor::describe() const { return inner_.describe(); }

}  // namespace nvf
