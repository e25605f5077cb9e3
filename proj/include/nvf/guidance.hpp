#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "nvf/video.hpp"

namespace nvf {

// h x w x c latent array, channel-interleaved.
struct LatentTensor {
  int height = 0;
  int width = 0;
  int channels = 0;
  int step = 0;
  std::vector<float> data;

  LatentTensor() = default;
  LatentTensor(int h, int w, int c, float fill = 0.0f)
      : height(h), width(w), channels(c), data(std::size_t(h) * w * c, fill) {}

  float& at(int y, int x, int c) { return data[(std::size_t(y) * width + x) * channels + c]; }
  float at(int y, int x, int c) const { return data[(std::size_t(y) * width + x) * channels + c]; }
  bool same_shape(const LatentTensor& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
  void validate() const;
};

// eps(z, image condition?, text condition?). Implementations must return a
// tensor of the input's shape and be deterministic.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  virtual LatentTensor predict(const LatentTensor& z, bool image_cond, bool text_cond) const = 0;
};

struct GuidanceWeights {
  double image = 1.5;  // s_I
  double text = 7.5;   // s_P
  void validate() const;
};

// eps(0,0) + s_I (eps(I,0) - eps(0,0)) + s_P (eps(I,P) - eps(I,0)), evaluated
// in the regrouped form (1 - s_I) eps(0,0) + (s_I - s_P) eps(I,0) + s_P eps(I,P)
// so that the corner weightings reproduce a single prediction bit-exactly.
LatentTensor combine_guidance(const NoisePredictor& predictor, const LatentTensor& z, const GuidanceWeights& w);

// eps(I,P) - eps(I,0): the instruction's contribution to the prediction.
LatentTensor instruction_delta(const NoisePredictor& predictor, const LatentTensor& z);

struct AuxMask {
  int height = 0;
  int width = 0;
  double tau = 0.0;
  std::vector<std::uint8_t> bits;  // 0 or 1, row-major

  std::uint8_t at(int y, int x) const { return bits[std::size_t(y) * width + x]; }
  std::size_t count() const;
};

// Channel mean of |delta|, min-max normalised per image (a constant map
// normalises to zeros), then 1 where the normalised value >= tau.
AuxMask build_aux_mask(const LatentTensor& delta, double tau);

// z_edit where the mask is 1, z_cond_noisy where it is 0.
LatentTensor blend_latents(const LatentTensor& z_edit, const LatentTensor& z_cond_noisy, const AuxMask& mask);

// Pixel-space analogue for deterministic editors: per-pixel channel mean of
// |edited - original|, normalised and thresholded as above, then one 3x3
// majority pass.
AuxMask pixel_mask_from_frames(const Image& edited, const Image& original, double tau);

// 3x3 majority vote with edge replication: 5+ set neighbours (centre
// included) -> 1, 3 or fewer -> 0, exactly 4 keeps the centre.
AuxMask majority_smooth(const AuxMask& mask);

// 8-bit grayscale PNG, 0 or 255.
void save_mask_png(const AuxMask& mask, const std::filesystem::path& path);

}  // namespace nvf
