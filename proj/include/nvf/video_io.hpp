#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include "nvf/video.hpp"

namespace nvf {

// File-boundary quantisation: round(clamp(v) * 255) and k / 255.
std::uint8_t to_u8(float v);
float from_u8(std::uint8_t v);
Image quantize8(const Image& image);
VideoTensor quantize8(const VideoTensor& video);

Image read_png(const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path);
void write_png_gray8(std::span<const std::uint8_t> gray, int width, int height, const std::filesystem::path& path);

// Uncompressed YUV4MPEG2, 4:4:4 8-bit only, BT.601 full-range.
VideoTensor read_y4m(const std::filesystem::path& path);
void write_y4m(const VideoTensor& video, const std::filesystem::path& path);

// `path` is either a `.y4m` file or a directory of frame-%05d.png files.
VideoTensor load_video(const std::filesystem::path& path);
void save_video(const VideoTensor& video, const std::filesystem::path& path);

std::filesystem::path frame_file_name(int index);

}  // namespace nvf
