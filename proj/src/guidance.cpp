#include "nvf/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "nvf/error.hpp"
#include "nvf/video_io.hpp"

namespace nvf {

namespace {

LatentTensor checked_predict(const NoisePredictor& p, const LatentTensor& z, bool image_cond, bool text_cond) {
  LatentTensor out = p.predict(z, image_cond, text_cond);
  require(out.same_shape(z) && out.data.size() == z.data.size(),
          "noise predictor returned a tensor of a different shape");
  return out;
}

AuxMask threshold_normalized(std::vector<double> gray, int height, int width, double tau) {
  require(tau >= 0.0 && tau <= 1.0, "mask threshold must lie in [0,1]");
  AuxMask mask{height, width, tau, std::vector<std::uint8_t>(gray.size(), 0)};
  if (gray.empty()) return mask;
  auto [lo, hi] = std::minmax_element(gray.begin(), gray.end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (std::size_t i = 0; i < gray.size(); ++i) {
    double g = range > 0.0 ? (gray[i] - min) / range : 0.0;
    mask.bits[i] = g >= tau ? 1 : 0;
  }
  return mask;
}

}  // namespace

void LatentTensor::validate() const {
  require(height >= 1 && width >= 1 && channels >= 1, "latent dimensions must be >= 1");
  require(data.size() == std::size_t(height) * width * channels, "latent buffer size mismatch");
  for (float v : data) require(std::isfinite(v), "latent contains non-finite values");
}

void GuidanceWeights::validate() const {
  require(std::isfinite(image) && std::isfinite(text) && image >= 0.0 && text >= 0.0,
          "guidance weights must be finite and non-negative");
}

LatentTensor combine_guidance(const NoisePredictor& predictor, const LatentTensor& z, const GuidanceWeights& w) {
  w.validate();
  const LatentTensor uncond = checked_predict(predictor, z, false, false);
  const LatentTensor image = checked_predict(predictor, z, true, false);
  const LatentTensor full = checked_predict(predictor, z, true, true);
  const float a = static_cast<float>(1.0 - w.image);
  const float b = static_cast<float>(w.image - w.text);
  const float c = static_cast<float>(w.text);
  LatentTensor out = z;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = a * uncond.data[i] + b * image.data[i] + c * full.data[i];
  }
  return out;
}

LatentTensor instruction_delta(const NoisePredictor& predictor, const LatentTensor& z) {
  const LatentTensor with_text = checked_predict(predictor, z, true, true);
  const LatentTensor without_text = checked_predict(predictor, z, true, false);
  LatentTensor out = z;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = with_text.data[i] - without_text.data[i];
  return out;
}

std::size_t AuxMask::count() const { return std::accumulate(bits.begin(), bits.end(), std::size_t(0)); }

AuxMask build_aux_mask(const LatentTensor& delta, double tau) {
  std::vector<double> gray(std::size_t(delta.height) * delta.width, 0.0);
  for (int y = 0; y < delta.height; ++y) {
    for (int x = 0; x < delta.width; ++x) {
      double acc = 0.0;
      for (int c = 0; c < delta.channels; ++c) acc += std::abs(double(delta.at(y, x, c)));
      gray[std::size_t(y) * delta.width + x] = acc / delta.channels;
    }
  }
  return threshold_normalized(std::move(gray), delta.height, delta.width, tau);
}

LatentTensor blend_latents(const LatentTensor& z_edit, const LatentTensor& z_cond_noisy, const AuxMask& mask) {
  require(z_edit.same_shape(z_cond_noisy), "latents to blend differ in shape");
  require(mask.height == z_edit.height && mask.width == z_edit.width, "mask does not match latent spatial shape");
  LatentTensor out = z_edit;
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      if (mask.at(y, x)) continue;
      for (int c = 0; c < out.channels; ++c) out.at(y, x, c) = z_cond_noisy.at(y, x, c);
    }
  }
  return out;
}

AuxMask majority_smooth(const AuxMask& mask) {
  AuxMask out = mask;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      int votes = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        int yy = std::clamp(y + dy, 0, mask.height - 1);
        for (int dx = -1; dx <= 1; ++dx) votes += mask.at(yy, std::clamp(x + dx, 0, mask.width - 1));
      }
      std::uint8_t& v = out.bits[std::size_t(y) * mask.width + x];
      if (votes >= 5) {
        v = 1;
      } else if (votes <= 3) {
        v = 0;
      }
    }
  }
  return out;
}

AuxMask pixel_mask_from_frames(const Image& edited, const Image& original, double tau) {
  require(edited.same_shape(original), "frames for the pixel mask differ in size");
  std::vector<double> gray(edited.pixels(), 0.0);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    double acc = 0.0;
    for (int c = 0; c < 3; ++c) acc += std::abs(double(edited.data[3 * i + c]) - double(original.data[3 * i + c]));
    gray[i] = acc / 3.0;
  }
  return majority_smooth(threshold_normalized(std::move(gray), edited.height, edited.width, tau));
}

void save_mask_png(const AuxMask& mask, const std::filesystem::path& path) {
  std::vector<std::uint8_t> gray(mask.bits.size());
  for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = mask.bits[i] ? 255 : 0;
  write_png_gray8(gray, mask.width, mask.height, path);
}

}  // namespace nvf
