#include <chrono>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "nvf/editing.hpp"
#include "nvf/error.hpp"
#include "nvf/video_io.hpp"

namespace nvf {

namespace fs = std::filesystem;

namespace {

class ExchangeEditor final : public FrameEditor {
 public:
  ExchangeEditor(fs::path dir, double timeout) : dir_(std::move(dir)), timeout_(timeout) {}

  Image edit(const Image& rendered, const Image& original, const EditRequest& request) override {
    const int n = counter_++;
    const std::string id = std::to_string(n);
    const std::string rendered_name = "rendered-" + id + ".png";
    const std::string original_name = "original-" + id + ".png";
    const std::string edited_name = "edited-" + id + ".png";
    write_png(rendered, dir_ / rendered_name);
    write_png(original, dir_ / original_name);

    nlohmann::ordered_json manifest;
    manifest["iteration"] = request.iteration;
    manifest["frame_index"] = request.frame_index;
    manifest["instruction"] = request.instruction;
    manifest["strength"] = request.strength;
    manifest["rendered"] = rendered_name;
    manifest["original"] = original_name;
    manifest["edited"] = edited_name;
    // Publish atomically so a watcher never sees a partial manifest.
    const fs::path tmp = dir_ / (".req-" + id + ".json.tmp");
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) fail(ErrorKind::io, "cannot write request manifest in " + dir_.string());
      out << manifest.dump();
    }
    fs::rename(tmp, dir_ / ("req-" + id + ".json"));

    const fs::path done = dir_ / ("done-" + id);
    const fs::path error = dir_ / ("error-" + id + ".json");
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_);
    while (true) {
      if (fs::exists(done)) break;
      if (fs::exists(error)) {
        std::ifstream in(error);
        std::stringstream body;
        body << in.rdbuf();
        fail(ErrorKind::edit, "external editor reported an error for request " + id + ": " + body.str());
      }
      if (std::chrono::steady_clock::now() >= deadline) {
        fail(ErrorKind::edit, "external editor timed out after " + std::to_string(timeout_) + " s on request " + id);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }

    Image edited;
    try {
      edited = read_png(dir_ / edited_name);
    } catch (const Error& e) {
      fail(ErrorKind::edit, std::string("external editor response unreadable: ") + e.what());
    }
    if (output_size_ && (edited.width != output_size_->first || edited.height != output_size_->second)) {
      fail(ErrorKind::edit, "external editor output size changed from " + std::to_string(output_size_->first) + "x" +
                                std::to_string(output_size_->second) + " to " + std::to_string(edited.width) +
                                "x" + std::to_string(edited.height));
    }
    output_size_ = {edited.width, edited.height};
    return edited;
  }

  std::string describe() const override {
    return "external exchange_dir=" + dir_.string() + " timeout=" + std::to_string(timeout_);
  }

 private:
  fs::path dir_;
  double timeout_;
  int counter_ = 0;
  std::optional<std::pair<int, int>> output_size_;
};

}  // namespace

std::unique_ptr<FrameEditor> external_editor(const fs::path& exchange_dir, double timeout_seconds) {
  std::error_code ec;
  if (!fs::is_directory(exchange_dir, ec)) {
    fail(ErrorKind::io, "exchange directory " + exchange_dir.string() + " does not exist");
  }
  const fs::path probe = exchange_dir / ".nvf-write-probe";
  {
    std::ofstream out(probe);
    if (!out) fail(ErrorKind::io, "exchange directory " + exchange_dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
  if (!(timeout_seconds > 0.0)) fail(ErrorKind::config, "edit.timeout must be > 0");
  return std::make_unique<ExchangeEditor>(exchange_dir, timeout_seconds);
}

}  // namespace nvf
