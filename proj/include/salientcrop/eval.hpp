// Dataset evaluation: TP/FP/FN tallies, accuracy/precision/recall, and
// the full image -> saliency crop -> features -> histogram -> predict
// pipeline over a CSV manifest.
//
// TP counts correctly classified items. FP counts no-class items
// classified as some class; FN counts class items classified as
// no-class. Cross-class confusions count toward none of the three,
// which is why tp + fp + fn can fall short of the number of tests.

#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "salientcrop/classifier.hpp"
#include "salientcrop/codec.hpp"
#include "salientcrop/cropper.hpp"
#include "salientcrop/saliency.hpp"
#include "salientcrop/sift.hpp"
#include "salientcrop/vocab.hpp"

namespace salientcrop {

struct EvalCounts {
  std::size_t tests = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

inline EvalCounts tally(const std::vector<std::pair<ClassLabel, ClassLabel>>& predictions) {
  EvalCounts c;
  c.tests = predictions.size();
  for (const auto& [truth, predicted] : predictions) {
    if (truth.id == predicted.id)
      ++c.tp;
    else if (truth.is_no_class() && !predicted.is_no_class())
      ++c.fp;
    else if (!truth.is_no_class() && predicted.is_no_class())
      ++c.fn;
  }
  return c;
}

inline Metrics metrics(const EvalCounts& counts) {
  if (counts.tests == 0) throw InvalidArgument("metrics: zero tests");
  Metrics m;
  m.accuracy = static_cast<double>(counts.tp) / static_cast<double>(counts.tests);
  m.precision = counts.tp + counts.fp == 0
                    ? 1.0
                    : static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fp);
  m.recall = counts.tp + counts.fn == 0
                 ? 1.0
                 : static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fn);
  return m;
}

// Half-up rounding to integer percent, as reported in results tables.
inline int percent_round(double ratio) {
  return static_cast<int>(std::floor(ratio * 100.0 + 0.5));
}

// The training-recipe crop: bounding box of the thresholded saliency
// map. Falls back to the whole frame when nothing is suprathreshold.
inline RasterImage saliency_bounding_crop(const RasterImage& img, double threshold,
                                          const SaliencyParams& sparams = {}) {
  const SaliencyMap map = compute_saliency(img, sparams);
  const BinaryMask mask = threshold_map(map, threshold);
  int x0 = img.width, y0 = img.height, x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) return img;
  return crop_image(img, x0, y0, x1 - x0 + 1, y1 - y0 + 1);
}

// Descriptors of the saliency-cropped image; empty when the crop is too
// small for detection or carries no features.
inline std::vector<Descriptor> image_descriptors(const RasterImage& img,
                                                 const SiftParams& sift_params,
                                                 double saliency_threshold) {
  RasterImage region;
  try {
    region = saliency_bounding_crop(img, saliency_threshold);
  } catch (const ImageTooSmall&) {
    region = img;
  }
  try {
    const GrayImage gray = to_grayscale(region);
    const std::vector<Keypoint> kps = detect_keypoints(gray, sift_params);
    return compute_descriptors(gray, kps, sift_params).descriptors;
  } catch (const ImageTooSmall&) {
    return {};
  }
}

struct ManifestEntry {
  std::string path;
  ClassLabel truth;
};

// CSV manifest with a `path,label` header; relative paths resolve
// against the manifest's directory.
inline std::vector<ManifestEntry> read_manifest(const std::string& manifest_path,
                                                const LabelTable& table) {
  std::ifstream in(manifest_path);
  if (!in) throw ManifestError("cannot open manifest: " + manifest_path);
  std::string line;
  if (!std::getline(in, line)) throw ManifestError("empty manifest: " + manifest_path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "path,label")
    throw ManifestError("manifest must start with 'path,label' header: " + manifest_path);

  const std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
  std::vector<ManifestEntry> entries;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t comma = line.rfind(',');
    if (comma == std::string::npos)
      throw ManifestError("manifest line " + std::to_string(line_no) + ": missing label column");
    const std::string rel = line.substr(0, comma);
    const std::string label_name = line.substr(comma + 1);
    const auto id = table.id_of(label_name);
    if (!id)
      throw ManifestError("manifest line " + std::to_string(line_no) + ": unknown label '" +
                          label_name + "'");
    std::filesystem::path p(rel);
    if (p.is_relative()) p = base / p;
    entries.push_back({p.string(), table.label(*id)});
  }
  return entries;
}

struct EvalReport {
  EvalCounts counts;
  Metrics metrics;
  // confusion[true label][predicted label] = count
  std::map<std::string, std::map<std::string, std::size_t>> confusion;
};

inline EvalReport evaluate(const SvmModel& model, const Vocabulary& vocab,
                           const std::string& manifest_path, const SiftParams& sift_params = {},
                           double saliency_threshold = 0.5) {
  const std::vector<ManifestEntry> entries = read_manifest(manifest_path, model.labels);
  if (entries.empty()) throw InvalidArgument("evaluate: manifest has no entries");

  std::vector<std::pair<ClassLabel, ClassLabel>> outcomes;
  outcomes.reserve(entries.size());
  EvalReport report;
  for (const ManifestEntry& e : entries) {
    RasterImage img;
    try {
      img = decode_image(read_file(e.path));
    } catch (const Error& err) {
      throw ManifestError("unreadable entry '" + e.path + "': " + err.what());
    }
    const std::vector<Descriptor> descs = image_descriptors(img, sift_params, saliency_threshold);
    ClassLabel predicted;  // defaults to no-class
    if (!descs.empty()) predicted = predict(model, histogram(vocab, descs)).label;
    outcomes.emplace_back(e.truth, predicted);
    ++report.confusion[e.truth.name][predicted.name];
  }
  report.counts = tally(outcomes);
  report.metrics = metrics(report.counts);
  return report;
}

}  // namespace salientcrop
