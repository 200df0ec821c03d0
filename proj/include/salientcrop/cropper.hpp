// Saliency-driven crop extraction: threshold the map to count object
// blobs, then iteratively take the strongest local maximum, fit a
// Gaussian blob around it, emit its bounding box and suppress every
// remaining maximum covered by that box.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "salientcrop/errors.hpp"
#include "salientcrop/image.hpp"
#include "salientcrop/saliency.hpp"

namespace salientcrop {

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  bool at(int x, int y) const {
    return bits[static_cast<std::size_t>(y) * width + x] != 0;
  }
};

struct Peak {
  int x = 0;
  int y = 0;
  float value = 0.0f;
};

struct GaussianBlob {
  double center_x = 0.0;
  double center_y = 0.0;
  double sigma_x = 1.0;
  double sigma_y = 1.0;
};

struct CropRegion {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  Peak peak;
  GaussianBlob blob;
};

struct CropParams {
  double threshold = 0.5;
  double blob_fraction = 0.6;
  double box_radius_sigmas = 2.0;
  int min_crop_px = 16;
  std::optional<int> max_crops;
};

inline BinaryMask threshold_map(const SaliencyMap& map, double threshold) {
  if (threshold <= 0.0 || threshold >= 1.0)
    throw InvalidArgument("threshold_map: threshold must be in (0,1)");
  BinaryMask mask{map.width, map.height,
                  std::vector<std::uint8_t>(map.values.size(), 0)};
  for (std::size_t i = 0; i < map.values.size(); ++i)
    mask.bits[i] = map.values[i] >= threshold ? 1 : 0;
  return mask;
}

// 8-connected components of set bits.
inline int count_blobs(const BinaryMask& mask) {
  const int w = mask.width;
  const int h = mask.height;
  std::vector<std::uint8_t> seen(mask.bits.size(), 0);
  std::vector<std::size_t> stack;
  int count = 0;
  for (std::size_t start = 0; start < mask.bits.size(); ++start) {
    if (!mask.bits[start] || seen[start]) continue;
    ++count;
    seen[start] = 1;
    stack.assign(1, start);
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      const int x = static_cast<int>(idx % w);
      const int y = static_cast<int>(idx / w);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int nx = x + dx;
          const int ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
          if (mask.bits[ni] && !seen[ni]) {
            seen[ni] = 1;
            stack.push_back(ni);
          }
        }
      }
    }
  }
  return count;
}

// Strict 8-neighborhood maxima above the floor, sorted by value
// descending with ties broken by (row, column) ascending. Border
// pixels compare only against in-bounds neighbors.
inline std::vector<Peak> find_local_maxima(const SaliencyMap& map, double floor) {
  if (floor < 0.0 || floor >= 1.0)
    throw InvalidArgument("find_local_maxima: floor must be in [0,1)");
  std::vector<Peak> peaks;
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const float v = map.at(x, y);
      if (v <= floor) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int nx = x + dx;
          const int ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= map.width || ny >= map.height) continue;
          if (map.at(nx, ny) >= v) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) peaks.push_back(Peak{x, y, v});
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  return peaks;
}

// Saliency-weighted moments over the 8-connected region of pixels at
// or above blob_fraction * peak value containing the peak. Sigmas are
// floored at one pixel.
inline GaussianBlob fit_gaussian_blob(const SaliencyMap& map, const Peak& peak,
                                      double blob_fraction) {
  if (blob_fraction <= 0.0 || blob_fraction >= 1.0)
    throw InvalidArgument("fit_gaussian_blob: blob_fraction must be in (0,1)");
  const int w = map.width;
  const int h = map.height;
  const double cutoff = blob_fraction * peak.value;

  std::vector<std::uint8_t> in_region(map.values.size(), 0);
  std::vector<std::size_t> stack;
  const std::size_t start = static_cast<std::size_t>(peak.y) * w + peak.x;
  in_region[start] = 1;
  stack.push_back(start);
  double sum_v = 0.0, sum_x = 0.0, sum_y = 0.0, sum_xx = 0.0, sum_yy = 0.0;
  while (!stack.empty()) {
    const std::size_t idx = stack.back();
    stack.pop_back();
    const int x = static_cast<int>(idx % w);
    const int y = static_cast<int>(idx / w);
    const double v = map.values[idx];
    sum_v += v;
    sum_x += v * x;
    sum_y += v * y;
    sum_xx += v * x * x;
    sum_yy += v * y * y;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int nx = x + dx;
        const int ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
        if (!in_region[ni] && map.values[ni] >= cutoff) {
          in_region[ni] = 1;
          stack.push_back(ni);
        }
      }
    }
  }

  GaussianBlob blob;
  blob.center_x = sum_x / sum_v;
  blob.center_y = sum_y / sum_v;
  const double var_x = sum_xx / sum_v - blob.center_x * blob.center_x;
  const double var_y = sum_yy / sum_v - blob.center_y * blob.center_y;
  blob.sigma_x = std::max(1.0, std::sqrt(std::max(0.0, var_x)));
  blob.sigma_y = std::max(1.0, std::sqrt(std::max(0.0, var_y)));
  return blob;
}

namespace detail {

// Integer box around the blob center, clipped to the image and grown
// to min_px per side, symmetrically while both directions have room.
inline void blob_to_box(const GaussianBlob& blob, double radius_sigmas, int min_px,
                        int img_w, int img_h, int& bx, int& by, int& bw, int& bh) {
  int x0 = static_cast<int>(std::floor(blob.center_x - radius_sigmas * blob.sigma_x));
  int x1 = static_cast<int>(std::ceil(blob.center_x + radius_sigmas * blob.sigma_x));
  int y0 = static_cast<int>(std::floor(blob.center_y - radius_sigmas * blob.sigma_y));
  int y1 = static_cast<int>(std::ceil(blob.center_y + radius_sigmas * blob.sigma_y));
  x0 = std::max(0, x0);
  y0 = std::max(0, y0);
  x1 = std::min(img_w - 1, x1);
  y1 = std::min(img_h - 1, y1);

  const int min_w = std::min(min_px, img_w);
  const int min_h = std::min(min_px, img_h);
  while (x1 - x0 + 1 < min_w) {
    if (x0 > 0) --x0;
    if (x1 - x0 + 1 < min_w && x1 < img_w - 1) ++x1;
  }
  while (y1 - y0 + 1 < min_h) {
    if (y0 > 0) --y0;
    if (y1 - y0 + 1 < min_h && y1 < img_h - 1) ++y1;
  }
  bx = x0;
  by = y0;
  bw = x1 - x0 + 1;
  bh = y1 - y0 + 1;
}

}  // namespace detail

inline std::vector<CropRegion> extract_crops(const SaliencyMap& map, const CropParams& params = {}) {
  if (params.threshold <= 0.0 || params.threshold >= 1.0 ||
      params.blob_fraction <= 0.0 || params.blob_fraction >= 1.0 ||
      params.box_radius_sigmas <= 0.0)
    throw InvalidArgument("extract_crops: bad parameters");

  const int blob_count = count_blobs(threshold_map(map, params.threshold));
  std::size_t budget = static_cast<std::size_t>(blob_count);
  if (params.max_crops)
    budget = std::min(budget, static_cast<std::size_t>(std::max(0, *params.max_crops)));

  std::vector<Peak> peaks = find_local_maxima(map, params.threshold);
  std::vector<CropRegion> crops;
  std::size_t next = 0;
  while (crops.size() < budget && next < peaks.size()) {
    const Peak peak = peaks[next++];
    CropRegion crop;
    crop.peak = peak;
    crop.blob = fit_gaussian_blob(map, peak, params.blob_fraction);
    detail::blob_to_box(crop.blob, params.box_radius_sigmas, params.min_crop_px,
                        map.width, map.height, crop.x, crop.y, crop.width, crop.height);
    crops.push_back(crop);
    // Everything inside the emitted box stops being a candidate maximum.
    std::size_t kept = next;
    for (std::size_t i = next; i < peaks.size(); ++i) {
      const bool inside = peaks[i].x >= crop.x && peaks[i].x < crop.x + crop.width &&
                          peaks[i].y >= crop.y && peaks[i].y < crop.y + crop.height;
      if (!inside) peaks[kept++] = peaks[i];
    }
    peaks.resize(kept);
  }
  return crops;
}

inline std::vector<CropRegion> extract_crops(const RasterImage& img, const SaliencyMap& map,
                                             const CropParams& params = {}) {
  if (map.width != img.width || map.height != img.height)
    throw DimensionMismatch("extract_crops: map/image size mismatch");
  return extract_crops(map, params);
}

}  // namespace salientcrop
