#include "nvf/nvf.h"

#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include "json.hpp"
#include "nvf/editing.hpp"
#include "nvf/error.hpp"
#include "nvf/fitting.hpp"
#include "nvf/render.hpp"
#include "nvf/run_config.hpp"
#include "nvf/synthetic.hpp"
#include "nvf/video_io.hpp"

struct nvf_config {
  nvf::RunConfig config;
};

struct nvf_video {
  nvf::VideoTensor video;
};

struct nvf_field {
  nvf::FieldParams<float> params;
};

namespace {

thread_local std::string last_error;

nvf_status status_of(nvf::ErrorKind kind) {
  switch (kind) {
    case nvf::ErrorKind::config: return NVF_ERR_CONFIG;
    case nvf::ErrorKind::contract: return NVF_ERR_CONTRACT;
    case nvf::ErrorKind::io: return NVF_ERR_IO;
    case nvf::ErrorKind::format: return NVF_ERR_FORMAT;
    case nvf::ErrorKind::training: return NVF_ERR_TRAINING;
    case nvf::ErrorKind::edit: return NVF_ERR_EDIT;
    case nvf::ErrorKind::optimizer: return NVF_ERR_OPTIMIZER;
  }
  return NVF_ERR_INTERNAL;
}

template <class F>
nvf_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return NVF_OK;
  } catch (const nvf::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return NVF_ERR_IO;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return NVF_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return NVF_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return NVF_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (!p) nvf::fail(nvf::ErrorKind::contract, std::string(name) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* nvf_last_error(void) { return last_error.c_str(); }

const char* nvf_status_kind(nvf_status status) {
  switch (status) {
    case NVF_OK: return "ok";
    case NVF_ERR_CONFIG: return "config";
    case NVF_ERR_CONTRACT: return "contract";
    case NVF_ERR_IO: return "io";
    case NVF_ERR_FORMAT: return "format";
    case NVF_ERR_TRAINING: return "training";
    case NVF_ERR_EDIT: return "edit";
    case NVF_ERR_OPTIMIZER: return "optimizer";
    case NVF_ERR_INTERNAL: return "internal";
  }
  return "internal";
}

void nvf_string_free(char* s) { std::free(s); }

nvf_status nvf_config_new(nvf_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new nvf_config{};
  });
}

nvf_status nvf_config_load(const char* path, nvf_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new nvf_config{nvf::RunConfig::load(path)};
  });
}

nvf_status nvf_config_parse(const char* text, nvf_config** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new nvf_config{nvf::RunConfig::parse(text)};
  });
}

nvf_status nvf_config_set(nvf_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    config->config.set(key, value);
  });
}

nvf_status nvf_config_schema_json(char** out) {
  return guarded([&] {
    need(out, "out");
    *out = dup_string(nvf::config_schema_json());
  });
}

void nvf_config_free(nvf_config* config) { delete config; }

nvf_status nvf_video_load(const char* path, nvf_video** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new nvf_video{nvf::load_video(path)};
  });
}

nvf_status nvf_video_from_data(int frames, int height, int width, const float* data, double fps, nvf_video** out) {
  return guarded([&] {
    need(data, "data");
    need(out, "out");
    if (frames < 1 || height < 2 || width < 2) nvf::fail(nvf::ErrorKind::contract, "video must be at least 1x2x2");
    nvf::VideoTensor v(frames, height, width);
    std::memcpy(v.data.data(), data, v.data.size() * sizeof(float));
    v.fps = fps;
    v.validate();
    *out = new nvf_video{std::move(v)};
  });
}

nvf_status nvf_video_synthetic(const char* kind, int frames, int height, int width, nvf_video** out) {
  return guarded([&] {
    need(kind, "kind");
    need(out, "out");
    if (frames < 1 || height < 2 || width < 2) nvf::fail(nvf::ErrorKind::config, "video must be at least 1x2x2");
    const std::string k = kind;
    if (k == "moving-square") {
      *out = new nvf_video{nvf::synthetic::MovingSquare::for_size(frames, height, width).video()};
    } else if (k == "constant") {
      *out = new nvf_video{nvf::synthetic::constant_video(frames, height, width, {0.25f, 0.5f, 0.75f})};
    } else {
      nvf::fail(nvf::ErrorKind::config, "unknown synthetic video kind '" + k + "'");
    }
  });
}

nvf_status nvf_video_save(const nvf_video* video, const char* path) {
  return guarded([&] {
    need(video, "video");
    need(path, "path");
    nvf::save_video(video->video, path);
  });
}

nvf_status nvf_video_shape(const nvf_video* video, int* frames, int* height, int* width) {
  return guarded([&] {
    need(video, "video");
    if (frames) *frames = video->video.frames;
    if (height) *height = video->video.height;
    if (width) *width = video->video.width;
  });
}

const float* nvf_video_data(const nvf_video* video) { return video ? video->video.data.data() : nullptr; }

void nvf_video_free(nvf_video* video) { delete video; }

nvf_status nvf_field_init(const nvf_config* config, const nvf_video* video, nvf_field** out) {
  return guarded([&] {
    need(config, "config");
    need(video, "video");
    need(out, "out");
    const auto& v = video->video;
    const auto fc = config->config.field_config(v.frames, v.height, v.width);
    *out = new nvf_field{nvf::init_params(fc, config->config.seed())};
  });
}

nvf_status nvf_field_load(const char* path, nvf_field** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new nvf_field{nvf::load_params(path)};
  });
}

nvf_status nvf_field_save(const nvf_field* field, const char* path) {
  return guarded([&] {
    need(field, "field");
    need(path, "path");
    nvf::save_params(field->params, path);
  });
}

nvf_status nvf_field_shape(const nvf_field* field, int* frames, int* height, int* width, size_t* parameter_count) {
  return guarded([&] {
    need(field, "field");
    const auto& c = field->params.config();
    if (frames) *frames = c.frames;
    if (height) *height = c.height;
    if (width) *width = c.width;
    if (parameter_count) *parameter_count = field->params.parameter_count();
  });
}

void nvf_field_free(nvf_field* field) { delete field; }

nvf_status nvf_fit(const nvf_config* config, const nvf_video* video, nvf_field** out_field, char** out_report_json) {
  return guarded([&] {
    need(config, "config");
    need(video, "video");
    need(out_field, "out_field");
    const auto& rc = config->config;
    const auto& v = video->video;
    const auto fit_config = rc.fit_config();
    const auto adam = rc.fit_optimizer();
    auto params = nvf::init_params(rc.field_config(v.frames, v.height, v.width), rc.seed());
    const auto report = nvf::fit(params, v, fit_config, adam);
    std::string json = report.to_json();
    *out_field = new nvf_field{std::move(params)};
    if (out_report_json) *out_report_json = dup_string(json);
  });
}

nvf_status nvf_edit(const nvf_config* config, nvf_field* field, const nvf_video* video, char** out_report_json) {
  return guarded([&] {
    need(config, "config");
    need(field, "field");
    need(video, "video");
    const auto& rc = config->config;
    const auto& v = video->video;
    const auto& fc = field->params.config();
    if (fc.frames != v.frames || fc.height != v.height || fc.width != v.width) {
      nvf::fail(nvf::ErrorKind::contract,
                "video is " + std::to_string(v.frames) + "x" + std::to_string(v.height) + "x" +
                    std::to_string(v.width) + " but the field was fitted to " + std::to_string(fc.frames) + "x" +
                    std::to_string(fc.height) + "x" + std::to_string(fc.width));
    }
    const auto edit_config = rc.edit_config(v.frames);
    const auto adam = rc.edit_optimizer();
    auto editor = rc.make_editor();
    // Work on a copy so a failed edit leaves the caller's field untouched.
    nvf::FieldParams<float> params = field->params;
    const auto report = nvf::field_edit(params, v, *editor, edit_config, adam);
    std::string json = report.to_json();
    field->params = std::move(params);
    if (out_report_json) *out_report_json = dup_string(json);
  });
}

nvf_status nvf_render(const nvf_field* field, int width, int height, int interp, double fps, int threads,
                      nvf_video** out) {
  return guarded([&] {
    need(field, "field");
    need(out, "out");
    const auto& c = field->params.config();
    if (interp < 0) nvf::fail(nvf::ErrorKind::config, "--interp must be >= 0");
    if (width < 0 || height < 0) nvf::fail(nvf::ErrorKind::config, "render size must be >= 0");
    if (threads < 1) nvf::fail(nvf::ErrorKind::config, "threads must be >= 1");
    if (!(fps > 0.0)) nvf::fail(nvf::ErrorKind::config, "fps must be > 0");
    const int w = width > 0 ? width : c.width;
    const int h = height > 0 ? height : c.height;
    if (w < 2 || h < 2) nvf::fail(nvf::ErrorKind::config, "render size must be at least 2x2");
    auto video = nvf::render_video(field->params, nvf::RenderSpec::interpolation_grid(c, interp, w, h), threads);
    video.fps = fps;
    *out = new nvf_video{std::move(video)};
  });
}

nvf_status nvf_metrics(const nvf_video* a, const nvf_video* b, char** out_json) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out_json, "out_json");
    if (!a->video.same_shape(b->video)) {
      nvf::fail(nvf::ErrorKind::contract, "videos differ in shape");
    }
    nlohmann::ordered_json j;
    j["frames"] = a->video.frames;
    j["height"] = a->video.height;
    j["width"] = a->video.width;
    j["mse"] = nvf::mse(a->video, b->video);
    j["psnr"] = nvf::psnr(a->video, b->video);
    if (a->video.frames >= 2) {
      j["temporal_consistency"] = nvf::temporal_consistency(a->video);
      j["temporal_consistency_b"] = nvf::temporal_consistency(b->video);
    } else {
      j["temporal_consistency"] = nullptr;
      j["temporal_consistency_b"] = nullptr;
    }
    *out_json = dup_string(j.dump());
  });
}

nvf_status nvf_bench_mem(const nvf_config* config, const int* frames, size_t count, int height, int width,
                         char** out_json) {
  return guarded([&] {
    need(config, "config");
    need(out_json, "out_json");
    if (count == 0) nvf::fail(nvf::ErrorKind::config, "frame list must not be empty");
    need(frames, "frames");
    if (height < 2 || width < 2) nvf::fail(nvf::ErrorKind::config, "bench size must be at least 2x2");
    const auto& rc = config->config;
    const int batch = rc.fit_config().batch_size;
    auto reports = nlohmann::ordered_json::array();
    for (size_t i = 0; i < count; ++i) {
      if (frames[i] < 1) nvf::fail(nvf::ErrorKind::config, "frame counts must be >= 1");
      const auto video = nvf::synthetic::MovingSquare::for_size(frames[i], height, width).video();
      const auto params = nvf::init_params(rc.field_config(frames[i], height, width), rc.seed());
      const auto r = nvf::memory_report(params, video, batch);
      nlohmann::ordered_json j;
      j["frames"] = r.frames;
      j["height"] = r.height;
      j["width"] = r.width;
      j["batch_size"] = r.batch_size;
      j["parameter_bytes"] = r.parameter_bytes;
      j["peak_workspace_bytes"] = r.peak_workspace_bytes;
      j["fit_workspace_bytes"] = r.fit_workspace_bytes;
      j["edit_workspace_bytes"] = r.edit_workspace_bytes;
      reports.push_back(j);
    }
    nlohmann::ordered_json doc;
    doc["reports"] = reports;
    *out_json = dup_string(doc.dump());
  });
}

}  // extern "C"
