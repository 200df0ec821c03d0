#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "salientcrop/codec.hpp"
#include "salientcrop/errors.hpp"
#include "support/synthetic.hpp"

using namespace salientcrop;

namespace {

RasterImage gradient_image(int w, int h, int channels) {
  RasterImage img;
  img.width = w;
  img.height = h;
  img.channels = channels;
  img.data.resize(static_cast<std::size_t>(w) * h * channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(x, y, c) = static_cast<float>((x * (c + 1) + y) % 256) / 255.0f;
  return img;
}

}  // namespace

TEST_CASE("png round-trip preserves 8-bit pixel values") {
  const RasterImage img = gradient_image(37, 23, 3);
  const std::vector<std::uint8_t> png = encode_png(img);
  const RasterImage back = decode_image(png.data(), png.size());
  REQUIRE(back.width == img.width);
  REQUIRE(back.height == img.height);
  REQUIRE(back.channels == 3);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    REQUIRE(std::abs(back.data[i] - img.data[i]) <= 0.5f / 255.0f + 1e-6f);
}

TEST_CASE("grayscale png round-trip") {
  GrayImage gray;
  gray.width = 16;
  gray.height = 9;
  gray.data.resize(16 * 9);
  for (std::size_t i = 0; i < gray.data.size(); ++i)
    gray.data[i] = static_cast<float>(i % 200) / 255.0f;
  const std::vector<std::uint8_t> png = encode_png(gray);
  const RasterImage back = decode_image(png.data(), png.size());
  REQUIRE(back.channels == 1);
  REQUIRE(back.width == 16);
  for (std::size_t i = 0; i < gray.data.size(); ++i)
    REQUIRE(std::abs(back.data[i] - gray.data[i]) <= 0.5f / 255.0f + 1e-6f);
}

TEST_CASE("unrecognized bytes raise DecodeError") {
  const std::vector<std::uint8_t> junk{0x00, 0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08};
  CHECK_THROWS_AS(decode_image(junk.data(), junk.size()), DecodeError);
  CHECK_THROWS_AS(decode_image(junk.data(), 2), DecodeError);
}

TEST_CASE("corrupted png body raises DecodeError") {
  const RasterImage img = gradient_image(20, 20, 3);
  std::vector<std::uint8_t> png = encode_png(img);
  for (std::size_t i = 16; i < png.size() && i < 64; ++i) png[i] ^= 0xFF;
  CHECK_THROWS_AS(decode_image(png.data(), png.size()), DecodeError);
}

TEST_CASE("file io round-trip and missing-file error") {
  const auto path = std::filesystem::temp_directory_path() / "salientcrop_codec_io.bin";
  const std::vector<std::uint8_t> payload{1, 2, 3, 250, 255, 0};
  write_file(path.string(), payload);
  CHECK(read_file(path.string()) == payload);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_file(path.string()), IoError);
}

TEST_CASE("encoded png is decodable after a disk round-trip") {
  const RasterImage img = synthetic::texture_image("dots", 7, 128, 64);
  const auto path = std::filesystem::temp_directory_path() / "salientcrop_codec_tex.png";
  write_file(path.string(), encode_png(img));
  const std::vector<std::uint8_t> bytes = read_file(path.string());
  const RasterImage back = decode_image(bytes.data(), bytes.size());
  CHECK(back.width == 128);
  CHECK(back.height == 128);
  std::filesystem::remove(path);
}
