#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nvf/field.hpp"
#include "nvf/video.hpp"

namespace nvf {

struct EditRequest {
  int iteration = 0;
  int frame_index = 0;
  std::string instruction;
  double strength = 1.0;
};

// Produces a pseudo ground-truth frame from the current render and the
// reference frame. Output values must lie in [0,1]; the output size is fixed
// per instance but may differ from the input size.
class FrameEditor {
 public:
  virtual ~FrameEditor() = default;
  virtual Image edit(const Image& rendered, const Image& original, const EditRequest& request) = 0;
  // Serialised options; used to check that editing leaves the editor untouched.
  virtual std::string describe() const = 0;
};

enum class ScheduleShape { linear, cosine_ramp };

struct EditSchedule {
  double s_min = 0.3;
  double s_max = 1.0;
  int total_iterations = 1;
  ScheduleShape shape = ScheduleShape::linear;

  void validate() const;
};

// Non-decreasing ramp with strength(0) = s_min and strength(N-1) = s_max.
// A single-iteration schedule runs at s_max.
double strength(const EditSchedule& schedule, int iteration);

enum class FramePick { cyclic, random };

// Which frame the editor receives as `original`: the source video, or a
// render of the field as it was when this editing stage started (used to
// stack edits).
enum class ReferenceSource { source, field };

struct EditConfig {
  EditSchedule schedule;
  FramePick frame_pick = FramePick::cyclic;
  ReferenceSource reference = ReferenceSource::source;
  std::string instruction;
  double t_lower = 0.42;
  double t_upper = 0.98;
  std::optional<double> tau;
  std::uint64_t seed = 0;
  double max_failure_fraction = 0.1;
  int consistency_interval = 0;  // iterations between temporal-consistency samples; 0 = once per sweep
  int threads = 1;
  // Cosine learning-rate decay over the stage down to this fraction of the
  // starting rates; 1 keeps them constant.
  double lr_final_fraction = 0.1;
  // Linear learning-rate warmup over the first iterations of the stage.
  int lr_warmup_iterations = 16;

  void validate() const;
};

struct PseudoGT {
  int frame_index = 0;
  Image image;
  int iteration = 0;
};

struct EditStepResult {
  int frame_index = 0;
  double l1_loss = 0.0;
};

int pick_frame(const EditConfig& config, int iteration, int frames);

// One editing iteration: render frame t, ask the editor for a pseudo-GT,
// take one Adam step on the mean absolute error at the pseudo-GT's
// resolution. `reference_field` must be set when config.reference is
// ReferenceSource::field.
EditStepResult edit_step(FieldParams<float>& params, const VideoTensor& video, FrameEditor& editor,
                         const EditConfig& config, int iteration, AdamState<float>& adam,
                         const FieldParams<float>* reference_field = nullptr, PseudoGT* pseudo_out = nullptr);

struct EditLossSample {
  int iteration = 0;
  int frame_index = 0;
  double l1_loss = 0.0;
};

struct ConsistencySample {
  int iteration = 0;
  double temporal_consistency = 0.0;
};

struct EditReport {
  int iterations = 0;
  std::vector<EditLossSample> losses;
  std::map<int, std::vector<double>> per_frame_losses;
  std::vector<int> skipped_iterations;
  std::vector<std::string> skipped_reasons;
  std::vector<ConsistencySample> consistency_trace;
  std::size_t peak_workspace_bytes = 0;
  double wall_seconds = 0.0;
  std::string editor;

  std::string to_json() const;
};

AdamConfig default_edit_optimizer();

// Learning-rate multiplier for `iteration` of an editing stage.
double edit_lr_scale(const EditConfig& config, int iteration);

EditReport field_edit(FieldParams<float>& params, const VideoTensor& video, FrameEditor& editor,
                      const EditConfig& config, const AdamConfig& adam = default_edit_optimizer());

// ---------------------------------------------------------------------------
// Built-in editors. Colour editors apply their effect to the reference frame
// and blend (1 - s) * rendered + s * effect, so s = 0 returns the render.

enum class EditorKind { identity, hue_shift, sepia, posterize, region_recolor, upscale2x };

EditorKind parse_editor_kind(std::string_view name);
std::string_view to_string(EditorKind kind);

struct EditorOptions {
  double hue_degrees = 180.0;
  int levels = 4;
  // Half-open pixel rectangle x0, y0, x1, y1 for region-recolor.
  std::array<int, 4> region{0, 0, 0, 0};
  double region_hue = 120.0;
  double tau = 0.1;
};

std::unique_ptr<FrameEditor> builtin_editor(EditorKind kind, const EditorOptions& options = {});

// Exchange-directory editor: for call n writes rendered-<n>.png,
// original-<n>.png and req-<n>.json, waits for done-<n>, then reads
// edited-<n>.png. An error-<n>.json from the responder fails the call.
std::unique_ptr<FrameEditor> external_editor(const std::filesystem::path& exchange_dir, double timeout_seconds);

// Replaces a seeded random `fraction` of the wrapped editor's outputs with
// uniform noise.
class CorruptingEditor : public FrameEditor {
 public:
  CorruptingEditor(FrameEditor& inner, double fraction, std::uint64_t seed);
  Image edit(const Image& rendered, const Image& original, const EditRequest& request) override;
  std::string describe() const override;
  int corrupted() const { return corrupted_; }

 private:
  FrameEditor& inner_;
  double fraction_;
  std::uint64_t seed_;
  int corrupted_ = 0;
};

}  // namespace nvf
