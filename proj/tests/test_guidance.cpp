#include <bit>
#include <cstdint>

#include "doctest.h"
#include "nvf/error.hpp"
#include "nvf/guidance.hpp"
#include "synthetic_predictor.hpp"
#include "test_util.hpp"
#include "nvf/video_io.hpp"

using namespace nvf;

namespace {

bool bit_equal(const LatentTensor& a, const LatentTensor& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    if (std::bit_cast<std::uint32_t>(a.data[i]) != std::bit_cast<std::uint32_t>(b.data[i])) return false;
  return true;
}

AuxMask rect_mask(int h, int w, std::array<int, 4> r) {
  AuxMask m{h, w, 0.0, std::vector<std::uint8_t>(std::size_t(h) * w, 0)};
  for (int y = r[1]; y < r[3]; ++y)
    for (int x = r[0]; x < r[2]; ++x) m.bits[std::size_t(y) * w + x] = 1;
  return m;
}

class WrongShape : public NoisePredictor {
 public:
  LatentTensor predict(const LatentTensor& z, bool, bool) const override {
    return LatentTensor(z.height + 1, z.width, z.channels);
  }
};

}  // namespace

TEST_CASE("combine_guidance corner weightings are bit exact") {
  const std::array<int, 4> rect{2, 3, 7, 6};
  testutil::RectanglePredictor pred(8, 10, 4, rect, 1);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto z = testutil::random_latent(8, 10, 4, 100 + s);
    CHECK(bit_equal(combine_guidance(pred, z, {1.0, 1.0}), pred.predict(z, true, true)));
    CHECK(bit_equal(combine_guidance(pred, z, {1.0, 0.0}), pred.predict(z, true, false)));
    CHECK(bit_equal(combine_guidance(pred, z, {0.0, 0.0}), pred.predict(z, false, false)));
  }
}

TEST_CASE("combine_guidance matches the unregrouped form and scales linearly") {
  const std::array<int, 4> rect{1, 1, 4, 4};
  testutil::RectanglePredictor pred(6, 6, 3, rect, 2);
  testutil::RectanglePredictor scaled(6, 6, 3, rect, 2, 1.0f, 3.0f);
  const auto z = testutil::random_latent(6, 6, 3, 7);
  const GuidanceWeights w{1.5, 7.5};
  const auto out = combine_guidance(pred, z, w);
  const auto e00 = pred.predict(z, false, false);
  const auto ei0 = pred.predict(z, true, false);
  const auto eip = pred.predict(z, true, true);
  const auto out3 = combine_guidance(scaled, z, w);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double ref = double(e00.data[i]) + w.image * (double(ei0.data[i]) - e00.data[i]) +
                       w.text * (double(eip.data[i]) - ei0.data[i]);
    CHECK(out.data[i] == doctest::Approx(ref).epsilon(1e-5).scale(1.0));
    CHECK(out3.data[i] == doctest::Approx(3.0 * out.data[i]).epsilon(1e-5).scale(1.0));
  }
  CHECK_THROWS_AS(combine_guidance(pred, z, {-1.0, 1.0}), Error);
  CHECK_THROWS_AS(combine_guidance(WrongShape{}, z, w), Error);
}

TEST_CASE("instruction delta") {
  const std::array<int, 4> rect{2, 1, 5, 4};
  const auto z = testutil::random_latent(6, 7, 4, 3);

  testutil::RectanglePredictor no_text(6, 7, 4, rect, 4, 0.0f);
  for (float v : instruction_delta(no_text, z).data) CHECK(v == 0.0f);

  testutil::RectanglePredictor pred(6, 7, 4, rect, 4);
  const auto d = instruction_delta(pred, z);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 7; ++x)
      for (int c = 0; c < 4; ++c) {
        if (pred.inside(y, x)) {
          CHECK(d.at(y, x, c) == doctest::Approx(1.0).epsilon(1e-5));
        } else {
          CHECK(d.at(y, x, c) == 0.0f);
        }
      }

  testutil::RectanglePredictor scaled(6, 7, 4, rect, 4, 1.0f, -2.5f);
  const auto ds = instruction_delta(scaled, z);
  for (std::size_t i = 0; i < d.data.size(); ++i)
    CHECK(ds.data[i] == doctest::Approx(-2.5 * d.data[i]).epsilon(1e-5).scale(1.0));
}

TEST_CASE("aux mask from a rectangle-supported delta") {
  const std::array<int, 4> rect{3, 2, 9, 7};
  testutil::RectanglePredictor pred(12, 14, 4, rect, 9);
  const auto delta = instruction_delta(pred, testutil::random_latent(12, 14, 4, 10));
  const auto mask = build_aux_mask(delta, 0.1);
  CHECK(mask.bits == rect_mask(12, 14, rect).bits);
  CHECK(mask.tau == 0.1);

  CHECK(build_aux_mask(delta, 0.0).count() == 12u * 14u);
  LatentTensor flat(5, 5, 2, 0.7f);
  CHECK(build_aux_mask(flat, 0.1).count() == 0);
  CHECK(build_aux_mask(flat, 0.0).count() == 25);
  CHECK_THROWS_AS(build_aux_mask(delta, 1.5), Error);

  // Positive scaling leaves the mask unchanged.
  const auto noise = testutil::random_latent(12, 14, 4, 11);
  LatentTensor bigger = noise;
  for (auto& v : bigger.data) v *= 4.0f;
  for (double tau : {0.1, 0.3, 0.5, 0.9}) CHECK(build_aux_mask(noise, tau).bits == build_aux_mask(bigger, tau).bits);
  for (auto b : build_aux_mask(noise, 0.4).bits) CHECK((b == 0 || b == 1));
}

TEST_CASE("blend_latents") {
  const auto a = testutil::random_latent(6, 8, 3, 1);
  const auto b = testutil::random_latent(6, 8, 3, 2);
  CHECK(bit_equal(blend_latents(a, b, rect_mask(6, 8, {0, 0, 8, 6})), a));
  CHECK(bit_equal(blend_latents(a, b, rect_mask(6, 8, {0, 0, 0, 0})), b));
  const std::array<int, 4> r{2, 1, 5, 4};
  const auto m = rect_mask(6, 8, r);
  const auto out = blend_latents(a, b, m);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 8; ++x)
      for (int c = 0; c < 3; ++c) {
        const bool in = m.at(y, x);
        CHECK(std::bit_cast<std::uint32_t>(out.at(y, x, c)) ==
              std::bit_cast<std::uint32_t>(in ? a.at(y, x, c) : b.at(y, x, c)));
      }
  CHECK(bit_equal(blend_latents(out, b, m), out));
  CHECK_THROWS_AS(blend_latents(a, testutil::random_latent(6, 8, 2, 3), m), Error);
  CHECK_THROWS_AS(blend_latents(a, b, rect_mask(5, 8, r)), Error);
}

TEST_CASE("majority smoothing") {
  auto m = rect_mask(7, 7, {0, 0, 0, 0});
  m.bits[3 * 7 + 3] = 1;
  CHECK(majority_smooth(m).count() == 0);

  const auto solid = rect_mask(7, 7, {2, 2, 5, 5});
  CHECK(majority_smooth(solid).bits == solid.bits);

  auto hole = rect_mask(7, 7, {1, 1, 6, 6});
  hole.bits[3 * 7 + 3] = 0;
  CHECK(majority_smooth(hole).bits == rect_mask(7, 7, {1, 1, 6, 6}).bits);

  // Exactly four votes keep the centre either way.
  auto four = rect_mask(3, 3, {0, 0, 0, 0});
  four.bits = {0, 0, 0, 0, 1, 1, 0, 1, 1};
  const auto kept = majority_smooth(four);
  CHECK(kept.at(1, 1) == 1);
}

TEST_CASE("pixel mask from frames") {
  Image original(12, 10, 0.4f);
  CHECK(pixel_mask_from_frames(original, original, 0.1).count() == 0);
  Image edited = original;
  const std::array<int, 4> r{3, 2, 8, 7};
  for (int y = r[1]; y < r[3]; ++y)
    for (int x = r[0]; x < r[2]; ++x) {
      edited.at(y, x, 0) = 0.9f;
      edited.at(y, x, 2) = 0.1f + 0.01f * x;
    }
  CHECK(pixel_mask_from_frames(edited, original, 0.1).bits == rect_mask(10, 12, r).bits);

  Image peak = original;
  peak.at(5, 5, 1) = 1.0f;
  peak.at(5, 6, 1) = 0.7f;
  const auto top = pixel_mask_from_frames(peak, original, 1.0);
  CHECK(top.count() <= 1);
  CHECK_THROWS_AS(pixel_mask_from_frames(Image(3, 3), Image(4, 3), 0.1), Error);
}

TEST_CASE("mask png export") {
  testutil::TempDir dir;
  const auto m = rect_mask(5, 6, {1, 1, 3, 4});
  save_mask_png(m, dir.path / "mask.png");
  const auto img = read_png(dir.path / "mask.png");
  REQUIRE(img.width == 6);
  REQUIRE(img.height == 5);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 6; ++x) CHECK(img.at(y, x, 0) == (m.at(y, x) ? 1.0f : 0.0f));
}
