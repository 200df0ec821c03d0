// Scale-invariant keypoints and 128-d descriptors: difference-of-Gaussians
// extrema over a Gaussian scale space, subpixel refinement, contrast and
// edge-response filtering, orientation assignment from gradient
// histograms, and 4x4x8 trilinearly-binned descriptors.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "salientcrop/errors.hpp"
#include "salientcrop/image.hpp"

namespace salientcrop {

struct Keypoint {
  float x = 0.0f;
  float y = 0.0f;
  float scale = 0.0f;        // absolute sigma in input-image pixels
  float orientation = 0.0f;  // radians in [0, 2*pi)
  float response = 0.0f;     // refined |DoG| contrast
};

struct Descriptor {
  std::array<float, 128> values{};
};

struct SiftParams {
  int octaves = 4;  // capped so every octave base is at least 16px per side
  int scales_per_octave = 3;
  float base_sigma = 1.6f;
  float contrast_threshold = 0.03f;
  float edge_ratio = 10.0f;
};

namespace sift_detail {

constexpr double kPi = 3.14159265358979323846;
constexpr double kAssumedInputSigma = 0.5;
constexpr int kOrientationBins = 36;
constexpr double kOrientationSigmaFactor = 1.5;
constexpr double kOrientationRadiusFactor = 3.0 * kOrientationSigmaFactor;
constexpr double kOrientationPeakRatio = 0.8;
constexpr int kDescriptorWidth = 4;   // cells per side
constexpr int kDescriptorBins = 8;    // orientation bins per cell
constexpr double kDescriptorCellScale = 3.0;  // cell size in units of sigma
constexpr double kDescriptorClamp = 0.2;

struct Octave {
  std::vector<GrayImage> gauss;  // scales_per_octave + 3 images
  std::vector<GrayImage> dog;    // scales_per_octave + 2 images
};

inline int max_octaves_for(int width, int height, int requested) {
  int o = 0;
  int m = std::min(width, height);
  while (o + 1 < requested && (m >> 1) >= 16) {
    ++o;
    m >>= 1;
  }
  return o + 1;
}

inline std::vector<Octave> build_scale_space(const GrayImage& img, const SiftParams& p) {
  const int s = p.scales_per_octave;
  const int octave_count = max_octaves_for(img.width, img.height, p.octaves);
  const double k = std::pow(2.0, 1.0 / s);

  std::vector<Octave> octaves(static_cast<std::size_t>(octave_count));
  for (int o = 0; o < octave_count; ++o) {
    Octave& oct = octaves[o];
    oct.gauss.reserve(s + 3);
    if (o == 0) {
      const double d2 = p.base_sigma * p.base_sigma - kAssumedInputSigma * kAssumedInputSigma;
      oct.gauss.push_back(d2 > 0 ? gaussian_blur(img, std::sqrt(d2)) : img);
    } else {
      // Image s of the previous octave carries sigma = 2 * base_sigma.
      oct.gauss.push_back(downsample_half(octaves[o - 1].gauss[s]));
    }
    for (int i = 1; i < s + 3; ++i) {
      const double sigma_prev = p.base_sigma * std::pow(k, i - 1);
      const double inc = sigma_prev * std::sqrt(k * k - 1.0);
      oct.gauss.push_back(gaussian_blur(oct.gauss.back(), inc));
    }
    oct.dog.reserve(s + 2);
    for (int i = 0; i < s + 2; ++i) {
      const GrayImage& a = oct.gauss[i];
      const GrayImage& b = oct.gauss[i + 1];
      GrayImage d{a.width, a.height, std::vector<float>(a.data.size())};
      for (std::size_t j = 0; j < d.data.size(); ++j) d.data[j] = b.data[j] - a.data[j];
      oct.dog.push_back(std::move(d));
    }
  }
  return octaves;
}

inline bool is_extremum(const Octave& oct, int level, int x, int y) {
  const float v = oct.dog[level].at(x, y);
  bool all_above = true;
  bool all_below = true;
  for (int dl = -1; dl <= 1; ++dl) {
    const GrayImage& d = oct.dog[level + dl];
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dl == 0 && dx == 0 && dy == 0) continue;
        const float n = d.at(x + dx, y + dy);
        if (n >= v) all_above = false;
        if (n <= v) all_below = false;
        if (!all_above && !all_below) return false;
      }
    }
  }
  return all_above || all_below;
}

struct Refined {
  double x, y, level;  // subpixel octave coordinates
  double contrast;
  int ix, iy, ilevel;  // final integer position
  bool ok;
};

inline Refined refine_extremum(const Octave& oct, int level, int x, int y, int s) {
  Refined r{};
  const int w = oct.dog[0].width;
  const int h = oct.dog[0].height;
  double ox = 0, oy = 0, ol = 0;
  double gx = 0, gy = 0, gl = 0, v = 0;
  for (int iter = 0; iter < 5; ++iter) {
    const GrayImage& d0 = oct.dog[level - 1];
    const GrayImage& d1 = oct.dog[level];
    const GrayImage& d2 = oct.dog[level + 1];
    v = d1.at(x, y);
    gx = 0.5 * (d1.at(x + 1, y) - d1.at(x - 1, y));
    gy = 0.5 * (d1.at(x, y + 1) - d1.at(x, y - 1));
    gl = 0.5 * (d2.at(x, y) - d0.at(x, y));
    const double hxx = d1.at(x + 1, y) + d1.at(x - 1, y) - 2.0 * v;
    const double hyy = d1.at(x, y + 1) + d1.at(x, y - 1) - 2.0 * v;
    const double hll = d2.at(x, y) + d0.at(x, y) - 2.0 * v;
    const double hxy = 0.25 * (d1.at(x + 1, y + 1) - d1.at(x - 1, y + 1) -
                               d1.at(x + 1, y - 1) + d1.at(x - 1, y - 1));
    const double hxl = 0.25 * (d2.at(x + 1, y) - d2.at(x - 1, y) -
                               d0.at(x + 1, y) + d0.at(x - 1, y));
    const double hyl = 0.25 * (d2.at(x, y + 1) - d2.at(x, y - 1) -
                               d0.at(x, y + 1) + d0.at(x, y - 1));
    // Solve H * offset = -g by Cramer's rule.
    const double det = hxx * (hyy * hll - hyl * hyl) - hxy * (hxy * hll - hyl * hxl) +
                       hxl * (hxy * hyl - hyy * hxl);
    if (std::fabs(det) < 1e-12) return r;
    const double b0 = -gx, b1 = -gy, b2 = -gl;
    ox = (b0 * (hyy * hll - hyl * hyl) - hxy * (b1 * hll - hyl * b2) +
          hxl * (b1 * hyl - hyy * b2)) / det;
    oy = (hxx * (b1 * hll - hyl * b2) - b0 * (hxy * hll - hyl * hxl) +
          hxl * (hxy * b2 - b1 * hxl)) / det;
    ol = (hxx * (hyy * b2 - b1 * hyl) - hxy * (hxy * b2 - b1 * hxl) +
          b0 * (hxy * hyl - hyy * hxl)) / det;
    if (std::fabs(ox) < 0.5 && std::fabs(oy) < 0.5 && std::fabs(ol) < 0.5) {
      r.ok = true;
      break;
    }
    x += ox > 0.5 ? 1 : (ox < -0.5 ? -1 : 0);
    y += oy > 0.5 ? 1 : (oy < -0.5 ? -1 : 0);
    level += ol > 0.5 ? 1 : (ol < -0.5 ? -1 : 0);
    if (x < 1 || x > w - 2 || y < 1 || y > h - 2 || level < 1 || level > s) return r;
  }
  if (!r.ok) return r;
  r.x = x + ox;
  r.y = y + oy;
  r.level = level + ol;
  r.contrast = v + 0.5 * (gx * ox + gy * oy + gl * ol);
  r.ix = x;
  r.iy = y;
  r.ilevel = level;
  return r;
}

inline bool passes_edge_test(const GrayImage& d, int x, int y, double edge_ratio) {
  const double v = d.at(x, y);
  const double dxx = d.at(x + 1, y) + d.at(x - 1, y) - 2.0 * v;
  const double dyy = d.at(x, y + 1) + d.at(x, y - 1) - 2.0 * v;
  const double dxy = 0.25 * (d.at(x + 1, y + 1) - d.at(x - 1, y + 1) -
                             d.at(x + 1, y - 1) + d.at(x - 1, y - 1));
  const double tr = dxx + dyy;
  const double det = dxx * dyy - dxy * dxy;
  if (det <= 0.0) return false;
  const double r = edge_ratio;
  return tr * tr * r < det * (r + 1.0) * (r + 1.0);
}

// Gradient orientation histogram around (x, y) on one Gaussian image;
// returns up to 36-bin peaks as final orientations in [0, 2*pi).
inline std::vector<float> dominant_orientations(const GrayImage& g, int x, int y,
                                                double sigma_rel) {
  const int radius = std::max(1, static_cast<int>(std::lround(kOrientationRadiusFactor * sigma_rel)));
  const double denom = 2.0 * (kOrientationSigmaFactor * sigma_rel) * (kOrientationSigmaFactor * sigma_rel);
  std::array<double, kOrientationBins> hist{};
  for (int j = -radius; j <= radius; ++j) {
    const int yy = y + j;
    if (yy < 1 || yy > g.height - 2) continue;
    for (int i = -radius; i <= radius; ++i) {
      const int xx = x + i;
      if (xx < 1 || xx > g.width - 2) continue;
      const double dx = 0.5 * (g.at(xx + 1, yy) - g.at(xx - 1, yy));
      const double dy = 0.5 * (g.at(xx, yy + 1) - g.at(xx, yy - 1));
      const double mag = std::sqrt(dx * dx + dy * dy);
      if (mag == 0.0) continue;
      double ang = std::atan2(dy, dx);
      if (ang < 0.0) ang += 2.0 * kPi;
      int bin = static_cast<int>(kOrientationBins * ang / (2.0 * kPi));
      if (bin >= kOrientationBins) bin = 0;
      hist[bin] += mag * std::exp(-(static_cast<double>(i) * i + static_cast<double>(j) * j) / denom);
    }
  }
  // Circular smoothing, repeated.
  for (int pass = 0; pass < 6; ++pass) {
    std::array<double, kOrientationBins> sm;
    for (int b = 0; b < kOrientationBins; ++b) {
      const double l = hist[(b + kOrientationBins - 1) % kOrientationBins];
      const double rr = hist[(b + 1) % kOrientationBins];
      sm[b] = (l + hist[b] + rr) / 3.0;
    }
    hist = sm;
  }
  double max_v = 0.0;
  for (double v : hist) max_v = std::max(max_v, v);
  std::vector<float> orientations;
  if (max_v <= 0.0) return orientations;
  for (int b = 0; b < kOrientationBins; ++b) {
    const double l = hist[(b + kOrientationBins - 1) % kOrientationBins];
    const double rr = hist[(b + 1) % kOrientationBins];
    if (hist[b] <= l || hist[b] <= rr || hist[b] < kOrientationPeakRatio * max_v) continue;
    const double denom2 = l - 2.0 * hist[b] + rr;
    const double offset = denom2 == 0.0 ? 0.0 : 0.5 * (l - rr) / denom2;
    double ang = 2.0 * kPi * (b + 0.5 + offset) / kOrientationBins;
    if (ang < 0.0) ang += 2.0 * kPi;
    if (ang >= 2.0 * kPi) ang -= 2.0 * kPi;
    orientations.push_back(static_cast<float>(ang));
  }
  return orientations;
}

// Maps an absolute sigma back to (octave, relative sigma, gauss level).
struct ScaleLocation {
  int octave;
  double sigma_rel;
  int level;
};

inline ScaleLocation locate_scale(float scale, const SiftParams& p, int octave_count) {
  const double ratio = std::max(1e-6, static_cast<double>(scale) / p.base_sigma);
  int o = static_cast<int>(std::floor(std::log2(ratio)));
  o = std::clamp(o, 0, octave_count - 1);
  const double sigma_rel = scale / std::pow(2.0, o);
  int level = static_cast<int>(std::lround(p.scales_per_octave * std::log2(sigma_rel / p.base_sigma)));
  level = std::clamp(level, 0, p.scales_per_octave + 2);
  return {o, sigma_rel, level};
}

}  // namespace sift_detail

inline std::vector<Keypoint> detect_keypoints(const GrayImage& img, const SiftParams& params = {}) {
  if (img.width < 32 || img.height < 32)
    throw ImageTooSmall("detect_keypoints: image must be at least 32x32");
  if (params.octaves < 1 || params.scales_per_octave < 1 ||
      params.contrast_threshold <= 0.0f || params.edge_ratio <= 0.0f)
    throw InvalidArgument("detect_keypoints: bad parameters");

  using namespace sift_detail;
  const int s = params.scales_per_octave;
  const double k = std::pow(2.0, 1.0 / s);
  const std::vector<Octave> octaves = build_scale_space(img, params);
  const float prefilter = 0.8f * params.contrast_threshold;

  std::vector<Keypoint> keypoints;
  for (int o = 0; o < static_cast<int>(octaves.size()); ++o) {
    const Octave& oct = octaves[o];
    const int w = oct.dog[0].width;
    const int h = oct.dog[0].height;
    const double octave_scale = std::pow(2.0, o);
    for (int level = 1; level <= s; ++level) {
      for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
          if (std::fabs(oct.dog[level].at(x, y)) < prefilter) continue;
          if (!is_extremum(oct, level, x, y)) continue;
          const Refined r = refine_extremum(oct, level, x, y, s);
          if (!r.ok) continue;
          if (std::fabs(r.contrast) < params.contrast_threshold) continue;
          if (!passes_edge_test(oct.dog[r.ilevel], r.ix, r.iy, params.edge_ratio)) continue;

          const double sigma_rel = params.base_sigma * std::pow(k, r.level);
          const int gauss_level = std::clamp(r.ilevel, 0, s + 2);
          const std::vector<float> orientations =
              dominant_orientations(oct.gauss[gauss_level], r.ix, r.iy, sigma_rel);
          for (float ang : orientations) {
            Keypoint kp;
            kp.x = static_cast<float>(r.x * octave_scale);
            kp.y = static_cast<float>(r.y * octave_scale);
            kp.scale = static_cast<float>(sigma_rel * octave_scale);
            kp.orientation = ang;
            kp.response = static_cast<float>(std::fabs(r.contrast));
            if (kp.x < 0 || kp.y < 0 || kp.x > img.width - 1 || kp.y > img.height - 1) continue;
            keypoints.push_back(kp);
          }
        }
      }
    }
  }
  return keypoints;
}

struct SiftFeatures {
  std::vector<Keypoint> keypoints;   // keypoints whose patch fit inside the image
  std::vector<Descriptor> descriptors;  // aligned with keypoints
};

inline SiftFeatures compute_descriptors(const GrayImage& img,
                                        const std::vector<Keypoint>& keypoints,
                                        const SiftParams& params = {}) {
  using namespace sift_detail;
  const int d = kDescriptorWidth;
  const int nbins = kDescriptorBins;
  const std::vector<Octave> octaves = build_scale_space(img, params);

  SiftFeatures out;
  for (const Keypoint& kp : keypoints) {
    const ScaleLocation loc = locate_scale(kp.scale, params, static_cast<int>(octaves.size()));
    const GrayImage& g = octaves[loc.octave].gauss[loc.level];
    const double inv_octave = 1.0 / std::pow(2.0, loc.octave);
    const int cx = static_cast<int>(std::lround(kp.x * inv_octave));
    const int cy = static_cast<int>(std::lround(kp.y * inv_octave));

    const double cell = kDescriptorCellScale * loc.sigma_rel;
    const int radius = static_cast<int>(std::lround(cell * std::sqrt(2.0) * (d + 1) * 0.5));
    // Patch (plus the 1px gradient margin) must lie inside the image.
    if (cx - radius < 1 || cx + radius > g.width - 2 ||
        cy - radius < 1 || cy + radius > g.height - 2)
      continue;

    const double cos_t = std::cos(kp.orientation);
    const double sin_t = std::sin(kp.orientation);
    const double bins_per_rad = nbins / (2.0 * kPi);
    const double exp_scale = -2.0 / (d * d);  // Gaussian window sigma = d/2 cells
    std::array<double, 128> hist{};

    for (int i = -radius; i <= radius; ++i) {
      for (int j = -radius; j <= radius; ++j) {
        const double c_rot = (j * cos_t + i * sin_t) / cell;
        const double r_rot = (-j * sin_t + i * cos_t) / cell;
        const double rbin = r_rot + d / 2.0 - 0.5;
        const double cbin = c_rot + d / 2.0 - 0.5;
        if (rbin <= -1.0 || rbin >= d || cbin <= -1.0 || cbin >= d) continue;
        const int xx = cx + j;
        const int yy = cy + i;
        const double dx = 0.5 * (g.at(xx + 1, yy) - g.at(xx - 1, yy));
        const double dy = 0.5 * (g.at(xx, yy + 1) - g.at(xx, yy - 1));
        const double mag = std::sqrt(dx * dx + dy * dy);
        if (mag == 0.0) continue;
        double ang = std::atan2(dy, dx) - kp.orientation;
        while (ang < 0.0) ang += 2.0 * kPi;
        while (ang >= 2.0 * kPi) ang -= 2.0 * kPi;
        const double obin = ang * bins_per_rad;
        const double weight = std::exp((c_rot * c_rot + r_rot * r_rot) * exp_scale);

        // Trilinear spread over (row, col, orientation) bins.
        int r0 = static_cast<int>(std::floor(rbin));
        int c0 = static_cast<int>(std::floor(cbin));
        int o0 = static_cast<int>(std::floor(obin));
        const double fr = rbin - r0;
        const double fc = cbin - c0;
        const double fo = obin - o0;
        const double m = mag * weight;
        for (int dr = 0; dr <= 1; ++dr) {
          const int rr = r0 + dr;
          if (rr < 0 || rr >= d) continue;
          const double wr = m * (dr == 0 ? 1.0 - fr : fr);
          for (int dc = 0; dc <= 1; ++dc) {
            const int cc = c0 + dc;
            if (cc < 0 || cc >= d) continue;
            const double wc = wr * (dc == 0 ? 1.0 - fc : fc);
            for (int dob = 0; dob <= 1; ++dob) {
              const int ob = (o0 + dob) % nbins;
              hist[(rr * d + cc) * nbins + ob] += wc * (dob == 0 ? 1.0 - fo : fo);
            }
          }
        }
      }
    }

    Descriptor desc;
    double norm2 = 0.0;
    for (double v : hist) norm2 += v * v;
    if (norm2 <= 1e-24) {
      out.keypoints.push_back(kp);
      out.descriptors.push_back(desc);  // all zeros: flat patch
      continue;
    }
    double inv = 1.0 / std::sqrt(norm2);
    for (auto& v : hist) v = std::min(v * inv, kDescriptorClamp);
    norm2 = 0.0;
    for (double v : hist) norm2 += v * v;
    inv = 1.0 / std::sqrt(norm2);
    for (int idx = 0; idx < 128; ++idx)
      desc.values[idx] = static_cast<float>(hist[idx] * inv);
    out.keypoints.push_back(kp);
    out.descriptors.push_back(desc);
  }
  return out;
}

inline std::vector<Keypoint> detect_keypoints(const RasterImage& img,
                                              const SiftParams& params = {}) {
  return detect_keypoints(to_grayscale(img), params);
}

inline SiftFeatures compute_descriptors(const RasterImage& img,
                                        const std::vector<Keypoint>& keypoints,
                                        const SiftParams& params = {}) {
  return compute_descriptors(to_grayscale(img), keypoints, params);
}

}  // namespace salientcrop
