#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "salientcrop/errors.hpp"
#include "salientcrop/saliency.hpp"
#include "support/synthetic.hpp"

using namespace salientcrop;

TEST_CASE("constant image yields an identically zero map") {
  for (float level : {0.0f, 0.5f, 1.0f}) {
    const RasterImage img = synthetic::constant_image(64, 64, level, 3);
    const SaliencyMap map = compute_saliency(img);
    REQUIRE(map.width == 64);
    REQUIRE(map.height == 64);
    for (float v : map.values) REQUIRE(v == 0.0f);
  }
}

TEST_CASE("bright square on black field peaks at the square") {
  RasterImage img = synthetic::constant_image(128, 128, 0.0f, 1);
  for (int y = 60; y < 68; ++y)
    for (int x = 60; x < 68; ++x) img.at(x, y, 0) = 1.0f;
  const SaliencyMap map = compute_saliency(img);

  float max_v = 0.0f;
  int max_x = -1, max_y = -1;
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x)
      if (map.at(x, y) > max_v) {
        max_v = map.at(x, y);
        max_x = x;
        max_y = y;
      }
  REQUIRE(max_v == 1.0f);
  // global max inside the square dilated by 8 px
  CHECK(max_x >= 52);
  CHECK(max_x < 76);
  CHECK(max_y >= 52);
  CHECK(max_y < 76);
}

TEST_CASE("map values stay inside the unit interval and hit 1 when nonzero") {
  const RasterImage img = synthetic::texture_image("stripes", 3, 128, 80);
  const SaliencyMap map = compute_saliency(img);
  float mx = 0.0f;
  for (float v : map.values) {
    REQUIRE(v >= 0.0f);
    REQUIRE(v <= 1.0f);
    mx = std::max(mx, v);
  }
  REQUIRE(mx == 1.0f);
}

TEST_CASE("identical inputs give bitwise-identical maps") {
  const RasterImage img = synthetic::texture_image("rings", 11, 160, 96);
  const SaliencyMap a = compute_saliency(img);
  const SaliencyMap b = compute_saliency(img);
  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) REQUIRE(a.values[i] == b.values[i]);
}

TEST_CASE("images below the minimum size are rejected") {
  const RasterImage img = synthetic::constant_image(31, 64, 0.5f);
  CHECK_THROWS_AS(compute_saliency(img), ImageTooSmall);
  const RasterImage img2 = synthetic::constant_image(64, 31, 0.5f);
  CHECK_THROWS_AS(compute_saliency(img2), ImageTooSmall);
}

TEST_CASE("invalid channel weights are rejected") {
  const RasterImage img = synthetic::constant_image(64, 64, 0.5f);
  SaliencyParams params;
  params.weight_intensity = -1.0;
  CHECK_THROWS_AS(compute_saliency(img, params), InvalidArgument);
  SaliencyParams zero;
  zero.weight_intensity = zero.weight_color = zero.weight_orientation = 0.0;
  CHECK_THROWS_AS(compute_saliency(img, zero), InvalidArgument);
}

TEST_CASE("normalize_map divides by the maximum") {
  std::vector<float> raw{0.0f, 1.0f, 4.0f, 2.0f};
  const SaliencyMap map = normalize_map(2, 2, raw);
  CHECK(map.values[0] == 0.0f);
  CHECK(map.values[1] == 0.25f);
  CHECK(map.values[2] == 1.0f);
  CHECK(map.values[3] == 0.5f);
}

TEST_CASE("normalize_map keeps zero grids zero") {
  std::vector<float> raw(9, 0.0f);
  const SaliencyMap map = normalize_map(3, 3, raw);
  for (float v : map.values) CHECK(v == 0.0f);
}

TEST_CASE("normalize_map is idempotent") {
  std::vector<float> raw{0.1f, 0.9f, 1.0f, 0.3f, 0.0f, 0.25f};
  const SaliencyMap once = normalize_map(3, 2, raw);
  const SaliencyMap twice = normalize_map(3, 2, once.values);
  for (std::size_t i = 0; i < once.values.size(); ++i) REQUIRE(twice.values[i] == once.values[i]);
}

TEST_CASE("normalize_map rejects negative values and bad dimensions") {
  std::vector<float> raw{0.5f, -0.1f};
  CHECK_THROWS_AS(normalize_map(2, 1, raw), InvalidArgument);
  std::vector<float> short_raw{0.5f};
  CHECK_THROWS_AS(normalize_map(2, 1, short_raw), InvalidArgument);
}

TEST_CASE("textured object is more salient than the flat background") {
  const RasterImage img = synthetic::texture_image("dots", 5, 192, 96);
  const SaliencyMap map = compute_saliency(img);
  // mean saliency over a border strip should be well below the peak
  double border = 0.0;
  int border_n = 0;
  for (int x = 0; x < map.width; ++x) {
    border += map.at(x, 0) + map.at(x, map.height - 1);
    border_n += 2;
  }
  CHECK(border / border_n < 0.5);
}
