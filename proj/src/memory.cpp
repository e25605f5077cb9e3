#include "nvf/editing.hpp"
#include "nvf/fitting.hpp"
#include "nvf/render.hpp"
#include "nvf/workspace.hpp"

namespace nvf {

MemoryReport memory_report(const FieldParams<float>& params, const VideoTensor& video, int batch_size) {
  MemoryReport report;
  report.parameter_bytes = params.parameter_count() * sizeof(float);
  report.frames = video.frames;
  report.height = video.height;
  report.width = video.width;
  report.batch_size = batch_size;

  FieldParams<float> scratch = params;
  {
    AdamState<float> adam(scratch.parameter_count());
    RngState rng(0);
    WorkspaceScope scope;
    fit_step(scratch, video, batch_size, rng, adam);
    report.fit_workspace_bytes = scope.peak_bytes();
  }
  {
    auto editor = builtin_editor(EditorKind::identity);
    EditConfig config;
    config.schedule.total_iterations = 1;
    AdamState<float> adam(scratch.parameter_count());
    WorkspaceScope scope;
    edit_step(scratch, video, *editor, config, 0, adam);
    report.edit_workspace_bytes = scope.peak_bytes();
  }
  report.peak_workspace_bytes = std::max(report.fit_workspace_bytes, report.edit_workspace_bytes);
  return report;
}

}  // namespace nvf
