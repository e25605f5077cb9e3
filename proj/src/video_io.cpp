#include "nvf/video_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "nvf/error.hpp"

namespace nvf {

namespace fs = std::filesystem;

std::uint8_t to_u8(float v) {
  float c = std::clamp(std::isfinite(v) ? v : 0.0f, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

float from_u8(std::uint8_t v) { return static_cast<float>(v) / 255.0f; }

Image quantize8(const Image& image) {
  Image out = image;
  for (float& v : out.data) v = from_u8(to_u8(v));
  return out;
}

VideoTensor quantize8(const VideoTensor& video) {
  VideoTensor out = video;
  for (float& v : out.data) v = from_u8(to_u8(v));
  return out;
}

Image read_png(const fs::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    fail(ErrorKind::io, path.string() + ": cannot read PNG (" + img.message + ")");
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, pixels.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    fail(ErrorKind::io, path.string() + ": corrupt PNG (" + msg + ")");
  }
  Image out(static_cast<int>(img.width), static_cast<int>(img.height));
  for (std::size_t i = 0; i < pixels.size(); ++i) out.data[i] = from_u8(pixels[i]);
  return out;
}

namespace {

void write_png_raw(const std::uint8_t* pixels, int width, int height, png_uint_32 format, const fs::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = format;
  if (!png_image_write_to_file(&img, path.c_str(), 0, pixels, 0, nullptr)) {
    fail(ErrorKind::io, path.string() + ": cannot write PNG (" + img.message + ")");
  }
}

}  // namespace

void write_png(const Image& image, const fs::path& path) {
  std::vector<std::uint8_t> pixels(image.data.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = to_u8(image.data[i]);
  write_png_raw(pixels.data(), image.width, image.height, PNG_FORMAT_RGB, path);
}

void write_png_gray8(std::span<const std::uint8_t> gray, int width, int height, const fs::path& path) {
  require(gray.size() == std::size_t(width) * height, "gray image size mismatch");
  write_png_raw(gray.data(), width, height, PNG_FORMAT_GRAY, path);
}

// ---------------------------------------------------------------------------
// Y4M

namespace {

std::uint8_t clamp_u8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

VideoTensor read_y4m(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header) || header.rfind("YUV4MPEG2", 0) != 0) {
    fail(ErrorKind::io, path.string() + ": not a YUV4MPEG2 stream");
  }
  int width = 0, height = 0;
  double fps = 30.0;
  std::string chroma = "420jpeg";
  std::istringstream tokens(header.substr(9));
  std::string tok;
  while (tokens >> tok) {
    switch (tok[0]) {
      case 'W': width = std::stoi(tok.substr(1)); break;
      case 'H': height = std::stoi(tok.substr(1)); break;
      case 'C': chroma = tok.substr(1); break;
      case 'F': {
        auto colon = tok.find(':');
        if (colon != std::string::npos) {
          double num = std::stod(tok.substr(1, colon - 1));
          double den = std::stod(tok.substr(colon + 1));
          if (den > 0) fps = num / den;
        }
        break;
      }
      default: break;
    }
  }
  if (chroma != "444") {
    fail(ErrorKind::io, path.string() + ": unsupported chroma subsampling C" + chroma + " (only C444 is supported)");
  }
  if (width < 2 || height < 2) fail(ErrorKind::io, path.string() + ": invalid frame size");

  const std::size_t plane = std::size_t(width) * height;
  std::vector<Image> frames;
  std::vector<std::uint8_t> buf(plane * 3);
  std::string marker;
  while (std::getline(in, marker)) {
    if (marker.rfind("FRAME", 0) != 0) fail(ErrorKind::io, path.string() + ": malformed frame marker");
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
      fail(ErrorKind::io, path.string() + ": truncated frame " + std::to_string(frames.size()));
    }
    Image img(width, height);
    for (std::size_t i = 0; i < plane; ++i) {
      double y = buf[i];
      double cb = double(buf[plane + i]) - 128.0;
      double cr = double(buf[2 * plane + i]) - 128.0;
      img.data[3 * i + 0] = from_u8(clamp_u8(y + 1.402 * cr));
      img.data[3 * i + 1] = from_u8(clamp_u8(y - 0.344136 * cb - 0.714136 * cr));
      img.data[3 * i + 2] = from_u8(clamp_u8(y + 1.772 * cb));
    }
    frames.push_back(std::move(img));
  }
  if (frames.empty()) fail(ErrorKind::io, path.string() + ": no frames");
  return stack_frames(frames, fps);
}

void write_y4m(const VideoTensor& video, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  long fps_num = std::lround(video.fps * 1000.0);
  out << "YUV4MPEG2 W" << video.width << " H" << video.height << " F" << fps_num << ":1000 Ip A1:1 C444\n";
  const std::size_t plane = std::size_t(video.width) * video.height;
  std::vector<std::uint8_t> buf(plane * 3);
  for (int t = 0; t < video.frames; ++t) {
    auto f = video.frame(t);
    for (std::size_t i = 0; i < plane; ++i) {
      double r = to_u8(f[3 * i]), g = to_u8(f[3 * i + 1]), b = to_u8(f[3 * i + 2]);
      buf[i] = clamp_u8(0.299 * r + 0.587 * g + 0.114 * b);
      buf[plane + i] = clamp_u8(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b);
      buf[2 * plane + i] = clamp_u8(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b);
    }
    out << "FRAME\n";
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Frame directories

fs::path frame_file_name(int index) {
  char name[32];
  std::snprintf(name, sizeof name, "frame-%05d.png", index);
  return name;
}

VideoTensor load_video(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) fail(ErrorKind::io, path.string() + ": no such file or directory");
  if (!fs::is_directory(path, ec)) {
    if (path.extension() == ".y4m") return read_y4m(path);
    fail(ErrorKind::io, path.string() + ": unsupported container (expected a .y4m file or a frame directory)");
  }
  static const std::regex pattern(R"(frame-(\d{5})\.png)");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file() && std::regex_match(entry.path().filename().string(), pattern)) {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) fail(ErrorKind::io, path.string() + ": no frame-%05d.png files");
  std::sort(files.begin(), files.end());
  std::vector<Image> frames;
  for (const auto& f : files) {
    Image img = read_png(f);
    if (!frames.empty() && !img.same_shape(frames.front())) {
      fail(ErrorKind::io, f.string() + ": frame is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                              ", expected " + std::to_string(frames.front().width) + "x" +
                              std::to_string(frames.front().height));
    }
    frames.push_back(std::move(img));
  }
  if (frames.front().width < 2 || frames.front().height < 2) {
    fail(ErrorKind::io, path.string() + ": frames must be at least 2x2");
  }
  return stack_frames(frames);
}

void save_video(const VideoTensor& video, const fs::path& path) {
  if (path.extension() == ".y4m") {
    write_y4m(video, path);
    return;
  }
  std::error_code ec;
  fs::create_directories(path, ec);
  if (!fs::is_directory(path)) fail(ErrorKind::io, path.string() + ": cannot create output directory");
  // Stale frames past the new length would otherwise be picked up on load.
  static const std::regex pattern(R"(frame-(\d{5})\.png)");
  for (const auto& entry : fs::directory_iterator(path)) {
    std::smatch m;
    std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern) && std::stoi(m[1]) >= video.frames) fs::remove(entry.path(), ec);
  }
  for (int t = 0; t < video.frames; ++t) write_png(video.frame_image(t), path / frame_file_name(t));
}

}  // namespace nvf
