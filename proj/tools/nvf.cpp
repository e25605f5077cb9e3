#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nvf/nvf.h"

namespace {

int exit_code(nvf_status s) {
  switch (s) {
    case NVF_OK: return 0;
    case NVF_ERR_CONFIG:
    case NVF_ERR_CONTRACT:
    case NVF_ERR_IO:
    case NVF_ERR_FORMAT: return 2;
    default: return 3;
  }
}

void print_error(const std::string& kind, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  std::cerr << j.dump() << "\n";
}

struct Failure {
  nvf_status status;
};

void check(nvf_status s) {
  if (s != NVF_OK) throw Failure{s};
}

// Emits a C-API string on stdout and frees it.
void emit(char* json) {
  std::cout << json << "\n";
  nvf_string_free(json);
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Config = Handle<nvf_config, nvf_config_free>;
using Video = Handle<nvf_video, nvf_video_free>;
using Field = Handle<nvf_field, nvf_field_free>;

struct Common {
  std::optional<long long> seed;
  std::optional<int> threads;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--seed", common.seed, "Override the config seed")->check(CLI::NonNegativeNumber);
  cmd->add_option("--threads", common.threads, "Cap worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--set", common.overrides, "Override a config key (key=value)");
}

void load_config(Config& config, const std::string& path, const Common& common) {
  check(nvf_config_load(path.c_str(), config.out()));
  for (const auto& kv : common.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      check(nvf_config_set(config.get(), kv.c_str(), ""));
    } else {
      check(nvf_config_set(config.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
    }
  }
  if (common.seed) check(nvf_config_set(config.get(), "seed", std::to_string(*common.seed).c_str()));
  if (common.threads) check(nvf_config_set(config.get(), "threads", std::to_string(*common.threads).c_str()));
}

std::vector<int> parse_frames(const std::string& list) {
  std::vector<int> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos) {
      throw CLI::ValidationError("--frames", "expected a comma-separated list of integers, got '" + list + "'");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural video field fitting, editing and rendering"};
  app.require_subcommand(1);

  Common fit_common, edit_common, bench_common;
  std::string video_path, config_path, out_path, params_path;

  auto* fit_cmd = app.add_subcommand("fit", "Fit a field to a video and write NVF1 parameters");
  fit_cmd->add_option("video", video_path, "Frame directory or .y4m file")->required();
  fit_cmd->add_option("config", config_path, "Config file")->required();
  fit_cmd->add_option("out", out_path, "Output parameter file")->required();
  add_common(fit_cmd, fit_common);

  auto* edit_cmd = app.add_subcommand("edit", "Edit a fitted field with the configured frame editor");
  edit_cmd->add_option("params", params_path, "Input parameter file")->required();
  edit_cmd->add_option("video", video_path, "Source video")->required();
  edit_cmd->add_option("config", config_path, "Config file")->required();
  edit_cmd->add_option("out", out_path, "Output parameter file")->required();
  add_common(edit_cmd, edit_common);

  int width = 0, height = 0, interp = 0, render_threads = 1;
  double fps = 30.0;
  auto* render_cmd = app.add_subcommand("render", "Render a field to a frame directory or .y4m file");
  render_cmd->add_option("params", params_path, "Parameter file")->required();
  render_cmd->add_option("--out", out_path, "Output frame directory or .y4m file")->required();
  render_cmd->add_option("--width", width, "Output width (default: source width)")->check(CLI::NonNegativeNumber);
  render_cmd->add_option("--height", height, "Output height (default: source height)")->check(CLI::NonNegativeNumber);
  render_cmd->add_option("--fps", fps, "Frame rate metadata")->check(CLI::PositiveNumber);
  render_cmd->add_option("--interp", interp, "Novel frames inserted between each source pair")
      ->check(CLI::NonNegativeNumber);
  render_cmd->add_option("--threads", render_threads, "Cap worker threads")->check(CLI::PositiveNumber);

  std::string a_path, b_path;
  auto* metrics_cmd = app.add_subcommand("metrics", "PSNR and temporal consistency of two videos");
  metrics_cmd->add_option("a", a_path, "First video")->required();
  metrics_cmd->add_option("b", b_path, "Second video")->required();

  std::string frames_list;
  int bench_height = 64, bench_width = 64;
  auto* bench_cmd = app.add_subcommand("bench-mem", "Report parameter and workspace memory per frame count");
  bench_cmd->add_option("config", config_path, "Config file")->required();
  bench_cmd->add_option("--frames", frames_list, "Comma-separated frame counts")->required();
  bench_cmd->add_option("--height", bench_height, "Frame height");
  bench_cmd->add_option("--width", bench_width, "Frame width");
  add_common(bench_cmd, bench_common);

  std::string synth_kind = "moving-square";
  int synth_frames = 16, synth_height = 64, synth_width = 64;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic test video");
  synth_cmd->add_option("out", out_path, "Output frame directory or .y4m file")->required();
  synth_cmd->add_option("--kind", synth_kind, "moving-square or constant");
  synth_cmd->add_option("--frames", synth_frames, "Frame count");
  synth_cmd->add_option("--height", synth_height, "Frame height");
  synth_cmd->add_option("--width", synth_width, "Frame width");

  app.add_subcommand("schema", "Print the config key schema as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (fit_cmd->parsed()) {
      Config config;
      Video video;
      Field field;
      char* report = nullptr;
      load_config(config, config_path, fit_common);
      check(nvf_video_load(video_path.c_str(), video.out()));
      check(nvf_fit(config.get(), video.get(), field.out(), &report));
      check(nvf_field_save(field.get(), out_path.c_str()));
      emit(report);
      std::cerr << "wrote " << out_path << "\n";
    } else if (edit_cmd->parsed()) {
      Config config;
      Video video;
      Field field;
      char* report = nullptr;
      load_config(config, config_path, edit_common);
      check(nvf_field_load(params_path.c_str(), field.out()));
      check(nvf_video_load(video_path.c_str(), video.out()));
      check(nvf_edit(config.get(), field.get(), video.get(), &report));
      check(nvf_field_save(field.get(), out_path.c_str()));
      emit(report);
      std::cerr << "wrote " << out_path << "\n";
    } else if (render_cmd->parsed()) {
      Field field;
      Video video;
      check(nvf_field_load(params_path.c_str(), field.out()));
      check(nvf_render(field.get(), width, height, interp, fps, render_threads, video.out()));
      check(nvf_video_save(video.get(), out_path.c_str()));
      int t = 0, h = 0, w = 0;
      check(nvf_video_shape(video.get(), &t, &h, &w));
      nlohmann::ordered_json j;
      j["out"] = out_path;
      j["frames"] = t;
      j["height"] = h;
      j["width"] = w;
      j["fps"] = fps;
      std::cout << j.dump() << "\n";
    } else if (metrics_cmd->parsed()) {
      Video a, b;
      char* json = nullptr;
      check(nvf_video_load(a_path.c_str(), a.out()));
      check(nvf_video_load(b_path.c_str(), b.out()));
      check(nvf_metrics(a.get(), b.get(), &json));
      emit(json);
    } else if (bench_cmd->parsed()) {
      Config config;
      char* json = nullptr;
      load_config(config, config_path, bench_common);
      const auto frames = parse_frames(frames_list);
      check(nvf_bench_mem(config.get(), frames.data(), frames.size(), bench_height, bench_width, &json));
      emit(json);
    } else if (synth_cmd->parsed()) {
      Video video;
      check(nvf_video_synthetic(synth_kind.c_str(), synth_frames, synth_height, synth_width, video.out()));
      check(nvf_video_save(video.get(), out_path.c_str()));
      nlohmann::ordered_json j;
      j["out"] = out_path;
      j["frames"] = synth_frames;
      j["height"] = synth_height;
      j["width"] = synth_width;
      std::cout << j.dump() << "\n";
    } else {
      char* json = nullptr;
      check(nvf_config_schema_json(&json));
      emit(json);
    }
  } catch (const Failure& f) {
    print_error(nvf_status_kind(f.status), nvf_last_error());
    return exit_code(f.status);
  } catch (const CLI::ValidationError& e) {
    print_error("usage", e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 3;
  }
  return 0;
}
