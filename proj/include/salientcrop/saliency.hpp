// Bottom-up saliency map: center-surround differences of intensity,
// color-opponency and orientation channels over a Gaussian pyramid,
// combined into one map normalized to [0,1].
//
// The computation sits behind compute_saliency so an alternative
// backend (e.g. a learned model) can replace it without touching the
// downstream cropper.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "salientcrop/errors.hpp"
#include "salientcrop/image.hpp"

namespace salientcrop {

struct SaliencyMap {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  float at(int x, int y) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }
  float& at(int x, int y) {
    return values[static_cast<std::size_t>(y) * width + x];
  }
};

struct SaliencyParams {
  int pyramid_levels = 6;
  std::vector<int> center_levels{1, 2, 3};
  std::vector<int> surround_offsets{2, 3};
  double weight_intensity = 1.0;
  double weight_color = 1.0;
  double weight_orientation = 1.0;
};

// Divides by the global maximum; an all-zero grid stays all-zero.
inline SaliencyMap normalize_map(int width, int height, std::span<const float> raw) {
  if (raw.size() != static_cast<std::size_t>(width) * height)
    throw InvalidArgument("normalize_map: size mismatch");
  float max_v = 0.0f;
  for (float v : raw) {
    if (v < 0.0f) throw InvalidArgument("normalize_map: negative value");
    if (v > max_v) max_v = v;
  }
  SaliencyMap out{width, height, std::vector<float>(raw.begin(), raw.end())};
  if (max_v > 0.0f)
    for (float& v : out.values) v /= max_v;
  return out;
}

inline SaliencyMap normalize_map(const SaliencyMap& raw) {
  return normalize_map(raw.width, raw.height, raw.values);
}

namespace detail {

constexpr double kSaliencyPyramidSigma = 1.5;

// Sum of |P[c] - upsample(P[s])| over all valid (center, surround)
// pairs, accumulated at full input resolution. Surround indices past
// the deepest available level clamp to it.
inline void accumulate_center_surround(const std::vector<GrayImage>& pyr,
                                       const SaliencyParams& params,
                                       int out_w, int out_h,
                                       std::vector<double>& acc) {
  const int deepest = static_cast<int>(pyr.size()) - 1;
  std::vector<std::pair<int, int>> pairs;
  for (int c : params.center_levels) {
    if (c > deepest) continue;
    for (int off : params.surround_offsets) {
      const int s = std::min(c + off, deepest);
      if (s == c) continue;
      if (std::find(pairs.begin(), pairs.end(), std::make_pair(c, s)) == pairs.end())
        pairs.emplace_back(c, s);
    }
  }
  for (const auto& [c, s] : pairs) {
    const GrayImage surround = resize_bilinear(pyr[s], pyr[c].width, pyr[c].height);
    GrayImage cs{pyr[c].width, pyr[c].height,
                 std::vector<float>(pyr[c].data.size())};
    for (std::size_t i = 0; i < cs.data.size(); ++i)
      cs.data[i] = std::fabs(pyr[c].data[i] - surround.data[i]);
    const GrayImage full = resize_bilinear(cs, out_w, out_h);
    for (std::size_t i = 0; i < full.data.size(); ++i) acc[i] += full.data[i];
  }
}

// Max-normalizes an accumulated channel in place; an (effectively)
// flat channel is zeroed rather than amplified.
inline void normalize_channel(std::vector<double>& acc) {
  double max_v = 0.0;
  for (double v : acc)
    if (v > max_v) max_v = v;
  if (max_v <= 1e-9) {
    std::fill(acc.begin(), acc.end(), 0.0);
    return;
  }
  for (double& v : acc) v /= max_v;
}

// Directional gradient energy |cos(t)*Ix + sin(t)*Iy| via central
// differences, for t in {0, 45, 90, 135} degrees.
inline GrayImage orientation_energy(const GrayImage& img, double theta) {
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  GrayImage out{img.width, img.height, std::vector<float>(img.data.size())};
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int xm = std::max(x - 1, 0), xp = std::min(x + 1, img.width - 1);
      const int ym = std::max(y - 1, 0), yp = std::min(y + 1, img.height - 1);
      const double ix = 0.5 * (img.at(xp, y) - img.at(xm, y));
      const double iy = 0.5 * (img.at(x, yp) - img.at(x, ym));
      out.at(x, y) = static_cast<float>(std::fabs(ct * ix + st * iy));
    }
  }
  return out;
}

}  // namespace detail

inline SaliencyMap compute_saliency(const RasterImage& img, const SaliencyParams& params = {}) {
  if (img.width < 32 || img.height < 32)
    throw ImageTooSmall("compute_saliency: image must be at least 32x32");
  const double wsum = params.weight_intensity + params.weight_color + params.weight_orientation;
  if (params.weight_intensity < 0 || params.weight_color < 0 || params.weight_orientation < 0 ||
      wsum <= 0)
    throw InvalidArgument("compute_saliency: channel weights must be non-negative with positive sum");

  const int w = img.width;
  const int h = img.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const GrayImage gray = to_grayscale(img);

  auto pyramid_of = [&](const GrayImage& channel) {
    return gaussian_pyramid(channel, params.pyramid_levels, detail::kSaliencyPyramidSigma);
  };

  // Intensity channel.
  std::vector<double> intensity(n, 0.0);
  detail::accumulate_center_surround(pyramid_of(gray), params, w, h, intensity);
  detail::normalize_channel(intensity);

  // Color opponency: red-green and blue-yellow.
  std::vector<double> color(n, 0.0);
  if (img.channels == 3) {
    GrayImage rg{w, h, std::vector<float>(n)};
    GrayImage by{w, h, std::vector<float>(n)};
    for (std::size_t i = 0; i < n; ++i) {
      const float r = img.data[i * 3 + 0];
      const float g = img.data[i * 3 + 1];
      const float b = img.data[i * 3 + 2];
      rg.data[i] = 0.5f + 0.5f * (r - g);
      by.data[i] = 0.5f + 0.5f * (b - 0.5f * (r + g));
    }
    detail::accumulate_center_surround(pyramid_of(rg), params, w, h, color);
    detail::accumulate_center_surround(pyramid_of(by), params, w, h, color);
  }
  detail::normalize_channel(color);

  // Orientation: four directional gradient-energy maps.
  std::vector<double> orientation(n, 0.0);
  for (int k = 0; k < 4; ++k) {
    const double theta = k * 3.14159265358979323846 / 4.0;
    detail::accumulate_center_surround(pyramid_of(detail::orientation_energy(gray, theta)),
                                       params, w, h, orientation);
  }
  detail::normalize_channel(orientation);

  std::vector<float> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = (params.weight_intensity * intensity[i] +
                      params.weight_color * color[i] +
                      params.weight_orientation * orientation[i]) / wsum;
    raw[i] = static_cast<float>(v < 0.0 ? 0.0 : v);
  }
  return normalize_map(w, h, raw);
}

}  // namespace salientcrop
