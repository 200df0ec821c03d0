// End-to-end analysis: saliency -> crops -> SIFT -> BoVW histogram ->
// linear classifier, plus the canonical JSON rendering shared by the
// CLI and the HTTP service so both emit byte-identical documents.

#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "salientcrop/classifier.hpp"
#include "salientcrop/codec.hpp"
#include "salientcrop/cropper.hpp"
#include "salientcrop/errors.hpp"
#include "salientcrop/saliency.hpp"
#include "salientcrop/sift.hpp"
#include "salientcrop/store.hpp"
#include "salientcrop/vocab.hpp"

namespace salientcrop {

struct CropAnalysis {
  CropRegion region;
  ClassLabel label;
  double score = 0.0;        // winning decision value, 0.0 when no features
  std::string png_base64;    // filled only when crop encoding is requested
};

struct AnalysisResult {
  std::string image_id;
  std::vector<CropAnalysis> crops;                // descending peak saliency
  std::map<std::string, std::size_t> counts;      // label name -> instances
};

inline std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string content_id(const std::vector<std::uint8_t>& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
  return std::string(buf, 16);
}

inline std::string base64_encode(const std::uint8_t* data, std::size_t size) {
  static const char* alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((size + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= size; i += 3) {
    const std::uint32_t v = (static_cast<std::uint32_t>(data[i]) << 16) |
                            (static_cast<std::uint32_t>(data[i + 1]) << 8) | data[i + 2];
    out.push_back(alphabet[(v >> 18) & 63]);
    out.push_back(alphabet[(v >> 12) & 63]);
    out.push_back(alphabet[(v >> 6) & 63]);
    out.push_back(alphabet[v & 63]);
  }
  if (i + 1 == size) {
    const std::uint32_t v = static_cast<std::uint32_t>(data[i]) << 16;
    out.push_back(alphabet[(v >> 18) & 63]);
    out.push_back(alphabet[(v >> 12) & 63]);
    out += "==";
  } else if (i + 2 == size) {
    const std::uint32_t v =
        (static_cast<std::uint32_t>(data[i]) << 16) | (static_cast<std::uint32_t>(data[i + 1]) << 8);
    out.push_back(alphabet[(v >> 18) & 63]);
    out.push_back(alphabet[(v >> 12) & 63]);
    out.push_back(alphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

struct AnalyzeOptions {
  CropParams crop;
  SiftParams sift;
  std::string image_id;
  bool encode_crops = false;  // attach base64 PNG of each crop
};

// Classify every salient crop of a decoded image. Crops too small for
// feature extraction, or yielding no descriptors, are reported as
// no-class with a zero score rather than dropped, so the counts always
// tally every emitted crop.
inline AnalysisResult analyze_image(const RasterImage& img, const Vocabulary& vocab,
                                    const SvmModel& model, const AnalyzeOptions& opts = {}) {
  if (model.dim != vocab.k())
    throw DimensionMismatch("analyze: model dimension does not match vocabulary size");

  AnalysisResult result;
  result.image_id = opts.image_id;

  const SaliencyMap map = compute_saliency(img);
  const std::vector<CropRegion> regions = extract_crops(img, map, opts.crop);

  for (const CropRegion& region : regions) {
    CropAnalysis entry;
    entry.region = region;
    entry.label = ClassLabel{kNoClassId, std::string(kNoClassName)};

    const RasterImage patch = crop_image(img, region.x, region.y, region.width, region.height);
    SiftFeatures features;
    try {
      features = compute_descriptors(patch, detect_keypoints(patch, opts.sift), opts.sift);
    } catch (const ImageTooSmall&) {
      // patch below the detector minimum: keep the no-class default
    }
    if (!features.descriptors.empty()) {
      const Histogram h = histogram(vocab, features.descriptors);
      const Prediction pred = predict(model, h);
      entry.label = pred.label;
      double best = pred.scores.empty() ? 0.0 : pred.scores[0];
      for (double s : pred.scores)
        if (s > best) best = s;
      entry.score = best;
    }

    if (opts.encode_crops) {
      const std::vector<std::uint8_t> png = encode_png(patch);
      entry.png_base64 = base64_encode(png.data(), png.size());
    }

    ++result.counts[entry.label.name];
    result.crops.push_back(std::move(entry));
  }

  return result;
}

inline AnalysisResult analyze_image(const RasterImage& img, const Vocabulary& vocab,
                                    const SvmModel& model, const CropParams& crop_params) {
  AnalyzeOptions opts;
  opts.crop = crop_params;
  return analyze_image(img, vocab, model, opts);
}

inline AnalysisResult analyze_bytes(const std::vector<std::uint8_t>& bytes,
                                    const LoadedModel& model, AnalyzeOptions opts = {}) {
  const RasterImage img = decode_image(bytes.data(), bytes.size());
  opts.sift = model.sift;
  if (opts.image_id.empty()) opts.image_id = content_id(bytes);
  return analyze_image(img, model.vocab, model.svm, opts);
}

namespace json_detail {

inline void append_escaped(std::string& out, const std::string& s) {
  out.push_back('"');
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
}

inline void append_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  out += buf;
}

}  // namespace json_detail

// Canonical rendering: compact separators, object keys in ascending
// byte order, numbers through %.6g. Any consumer producing this document
// from the same AnalysisResult gets the same bytes.
inline std::string to_canonical_json(const AnalysisResult& r) {
  std::string out;
  out += "{\"counts\":{";
  bool first = true;
  for (const auto& [name, n] : r.counts) {
    if (!first) out.push_back(',');
    first = false;
    json_detail::append_escaped(out, name);
    out.push_back(':');
    out += std::to_string(n);
  }
  out += "},\"crops\":[";
  for (std::size_t i = 0; i < r.crops.size(); ++i) {
    const CropAnalysis& c = r.crops[i];
    if (i) out.push_back(',');
    out += "{\"box\":{\"h\":";
    out += std::to_string(c.region.height);
    out += ",\"w\":";
    out += std::to_string(c.region.width);
    out += ",\"x\":";
    out += std::to_string(c.region.x);
    out += ",\"y\":";
    out += std::to_string(c.region.y);
    out += "},\"label\":";
    json_detail::append_escaped(out, c.label.name);
    if (!c.png_base64.empty()) {
      out += ",\"png_base64\":";
      json_detail::append_escaped(out, c.png_base64);
    }
    out += ",\"score\":";
    json_detail::append_number(out, c.score);
    out.push_back('}');
  }
  out += "],\"image_id\":";
  json_detail::append_escaped(out, r.image_id);
  out.push_back('}');
  return out;
}

}  // namespace salientcrop
