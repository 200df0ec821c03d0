// Raster and grayscale image containers plus the shared filtering
// primitives: grayscale conversion, separable Gaussian blur, bilinear
// resampling and Gaussian pyramids.
//
// Pixel values are floats in [0,1], row-major. Filter accumulation runs
// in double so that a constant image stays bitwise constant through a
// blur/resample chain.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "salientcrop/errors.hpp"

namespace salientcrop {

struct RasterImage {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 or 3, interleaved
  std::vector<float> data;

  float at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  float at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  float& at(int x, int y) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
};

// ITU-R 601 luma weights. 1-channel input passes through unchanged.
inline GrayImage to_grayscale(const RasterImage& img) {
  GrayImage out;
  out.width = img.width;
  out.height = img.height;
  out.data.resize(static_cast<std::size_t>(img.width) * img.height);
  const std::size_t n = out.data.size();
  if (img.channels == 1) {
    std::copy(img.data.begin(), img.data.end(), out.data.begin());
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const float* p = &img.data[i * 3];
    out.data[i] = static_cast<float>(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
  }
  return out;
}

namespace detail {

// Normalized 1D Gaussian taps, radius ceil(3*sigma).
inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    k[i + radius] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace detail

// Separable blur with clamp-to-edge borders.
inline GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  if (sigma <= 0.0) return img;
  const std::vector<double> kernel = detail::gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int w = img.width;
  const int h = img.height;

  GrayImage tmp{w, h, std::vector<float>(img.data.size())};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int xi = std::clamp(x + i, 0, w - 1);
        acc += kernel[i + radius] * img.at(xi, y);
      }
      tmp.at(x, y) = static_cast<float>(acc);
    }
  }
  GrayImage out{w, h, std::vector<float>(img.data.size())};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int yi = std::clamp(y + i, 0, h - 1);
        acc += kernel[i + radius] * tmp.at(x, yi);
      }
      out.at(x, y) = static_cast<float>(acc);
    }
  }
  return out;
}

// Keeps every other sample; callers blur first.
inline GrayImage downsample_half(const GrayImage& img) {
  GrayImage out;
  out.width = img.width / 2;
  out.height = img.height / 2;
  out.data.resize(static_cast<std::size_t>(out.width) * out.height);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      out.at(x, y) = img.at(2 * x, 2 * y);
  return out;
}

inline GrayImage resize_bilinear(const GrayImage& img, int new_w, int new_h) {
  if (new_w <= 0 || new_h <= 0) throw InvalidArgument("resize_bilinear: non-positive size");
  GrayImage out{new_w, new_h, std::vector<float>(static_cast<std::size_t>(new_w) * new_h)};
  const double sx = static_cast<double>(img.width) / new_w;
  const double sy = static_cast<double>(img.height) / new_h;
  for (int y = 0; y < new_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < new_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      const double top = (1.0 - wx) * img.at(x0, y0) + wx * img.at(x1, y0);
      const double bot = (1.0 - wx) * img.at(x0, y1) + wx * img.at(x1, y1);
      out.at(x, y) = static_cast<float>((1.0 - wy) * top + wy * bot);
    }
  }
  return out;
}

// Level 0 is the input; each further level is blur-then-halve of the
// previous. Construction stops before a level would fall under 8x8.
inline std::vector<GrayImage> gaussian_pyramid(const GrayImage& img, int levels, double sigma) {
  if (levels < 1) throw InvalidArgument("gaussian_pyramid: levels must be >= 1");
  if (img.width < 2 || img.height < 2) throw InvalidArgument("gaussian_pyramid: image too small");
  std::vector<GrayImage> pyr;
  pyr.reserve(static_cast<std::size_t>(levels));
  pyr.push_back(img);
  for (int i = 1; i < levels; ++i) {
    const GrayImage& prev = pyr.back();
    if (prev.width / 2 < 8 || prev.height / 2 < 8) break;
    pyr.push_back(downsample_half(gaussian_blur(prev, sigma)));
  }
  return pyr;
}

inline RasterImage crop_image(const RasterImage& img, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || w <= 0 || h <= 0 || x + w > img.width || y + h > img.height)
    throw InvalidArgument("crop_image: box out of bounds");
  RasterImage out;
  out.width = w;
  out.height = h;
  out.channels = img.channels;
  out.data.resize(static_cast<std::size_t>(w) * h * img.channels);
  for (int row = 0; row < h; ++row) {
    const float* src = &img.data[((static_cast<std::size_t>(y) + row) * img.width + x) * img.channels];
    float* dst = &out.data[static_cast<std::size_t>(row) * w * img.channels];
    std::copy(src, src + static_cast<std::size_t>(w) * img.channels, dst);
  }
  return out;
}

}  // namespace salientcrop
