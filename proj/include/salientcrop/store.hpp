// On-disk model archive: 8-byte magic, a length-prefixed UTF-8 JSON
// metadata block, then little-endian float32 payload arrays (words,
// weights, biases), each preceded by a little-endian uint64 element
// count. Identical inputs serialize to identical bytes.

#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#ifndef _WIN32
#include <unistd.h>
#endif

#include "salientcrop/classifier.hpp"
#include "salientcrop/errors.hpp"
#include "salientcrop/sift.hpp"
#include "salientcrop/vocab.hpp"

namespace salientcrop {

inline constexpr char kModelMagic[8] = {'S', 'C', 'R', 'M', 'D', 'L', '0', '1'};
inline constexpr char kVocabMagic[8] = {'S', 'C', 'R', 'V', 'O', 'C', '0', '1'};
inline constexpr int kArchiveFormatVersion = 1;

namespace store_detail {

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

inline void put_f32(std::vector<std::uint8_t>& out, float f) {
  const std::uint32_t v = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

class Reader {
public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::uint64_t u64() {
    if (pos_ + 8 > size_) throw CorruptArchive("archive truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }

  float f32() {
    if (pos_ + 4 > size_) throw CorruptArchive("archive truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return std::bit_cast<float>(v);
  }

  std::string bytes(std::size_t n) {
    if (pos_ + n > size_) throw CorruptArchive("archive truncated");
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return size_ - pos_; }

private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

inline void put_array(std::vector<std::uint8_t>& out, const float* data, std::uint64_t count) {
  put_u64(out, count);
  for (std::uint64_t i = 0; i < count; ++i) put_f32(out, data[i]);
}

inline std::vector<float> get_array(Reader& r, std::uint64_t expected, const char* what) {
  const std::uint64_t count = r.u64();
  if (count != expected)
    throw CorruptArchive(std::string("archive: ") + what + " length mismatch");
  std::vector<float> v(static_cast<std::size_t>(count));
  for (auto& f : v) f = r.f32();
  return v;
}

inline nlohmann::json sift_to_json(const SiftParams& p) {
  return nlohmann::json{{"octaves", p.octaves},
                        {"scales_per_octave", p.scales_per_octave},
                        {"base_sigma", p.base_sigma},
                        {"contrast_threshold", p.contrast_threshold},
                        {"edge_ratio", p.edge_ratio}};
}

inline SiftParams sift_from_json(const nlohmann::json& j) {
  SiftParams p;
  p.octaves = j.at("octaves").get<int>();
  p.scales_per_octave = j.at("scales_per_octave").get<int>();
  p.base_sigma = j.at("base_sigma").get<float>();
  p.contrast_threshold = j.at("contrast_threshold").get<float>();
  p.edge_ratio = j.at("edge_ratio").get<float>();
  return p;
}

inline void write_synced(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open for writing: " + path);
  const std::size_t written = bytes.empty() ? 0 : std::fwrite(bytes.data(), 1, bytes.size(), f);
  if (written != bytes.size() || std::fflush(f) != 0) {
    std::fclose(f);
    throw IoError("write failed: " + path);
  }
#ifndef _WIN32
  if (fsync(fileno(f)) != 0) {
    std::fclose(f);
    throw IoError("fsync failed: " + path);
  }
#endif
  if (std::fclose(f) != 0) throw IoError("close failed: " + path);
}

inline std::vector<std::uint8_t> read_all(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open: " + path);
  std::fseek(f, 0, SEEK_END);
  const long size = std::ftell(f);
  std::fseek(f, 0, SEEK_SET);
  std::vector<std::uint8_t> bytes(size > 0 ? static_cast<std::size_t>(size) : 0);
  if (!bytes.empty() && std::fread(bytes.data(), 1, bytes.size(), f) != bytes.size()) {
    std::fclose(f);
    throw IoError("read failed: " + path);
  }
  std::fclose(f);
  return bytes;
}

}  // namespace store_detail

inline void save_model(const Vocabulary& vocab, const SvmModel& model, const std::string& path,
                       const SiftParams& sift_params = {}) {
  if (model.dim != vocab.k())
    throw DimensionMismatch("save_model: model dimension does not match vocabulary size");

  nlohmann::json meta{{"format_version", kArchiveFormatVersion},
                      {"k", vocab.k()},
                      {"M", model.class_count},
                      {"labels", model.labels.names},
                      {"tau", model.tau},
                      {"C", model.C},
                      {"params", store_detail::sift_to_json(sift_params)}};
  const std::string meta_str = meta.dump();

  std::vector<std::uint8_t> out;
  out.insert(out.end(), kModelMagic, kModelMagic + 8);
  store_detail::put_u64(out, meta_str.size());
  out.insert(out.end(), meta_str.begin(), meta_str.end());
  store_detail::put_u64(out, static_cast<std::uint64_t>(vocab.k()) * 128);
  for (const WordVector& w : vocab.words())
    for (float v : w) store_detail::put_f32(out, v);
  store_detail::put_u64(out, static_cast<std::uint64_t>(model.class_count) * model.dim);
  for (const auto& w : model.weights)
    for (float v : w) store_detail::put_f32(out, v);
  store_detail::put_array(out, model.biases.data(), model.biases.size());
  store_detail::write_synced(path, out);
}

struct LoadedModel {
  Vocabulary vocab;
  SvmModel svm;
  SiftParams sift;
};

inline LoadedModel load_model(const std::string& path) {
  const std::vector<std::uint8_t> bytes = store_detail::read_all(path);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kModelMagic, 8) != 0)
    throw FormatError("not a model archive (bad magic): " + path);

  store_detail::Reader r(bytes.data() + 8, bytes.size() - 8);
  const std::uint64_t meta_len = r.u64();
  const std::string meta_str = r.bytes(static_cast<std::size_t>(meta_len));
  nlohmann::json meta = nlohmann::json::parse(meta_str, nullptr, false);
  if (meta.is_discarded()) throw FormatError("model archive metadata is not valid JSON");
  if (!meta.contains("format_version") || meta["format_version"].get<int>() != kArchiveFormatVersion)
    throw FormatError("unsupported archive format version");

  const int k = meta.at("k").get<int>();
  const int M = meta.at("M").get<int>();
  if (k < 1 || M < 2) throw CorruptArchive("archive: implausible k or M");
  const std::vector<std::string> label_names = meta.at("labels").get<std::vector<std::string>>();
  if (static_cast<int>(label_names.size()) != M)
    throw CorruptArchive("archive: label table length mismatch");

  const std::vector<float> word_data =
      store_detail::get_array(r, static_cast<std::uint64_t>(k) * 128, "words");
  const std::vector<float> weight_data =
      store_detail::get_array(r, static_cast<std::uint64_t>(M) * k, "weights");
  const std::vector<float> bias_data =
      store_detail::get_array(r, static_cast<std::uint64_t>(M), "biases");

  std::vector<WordVector> words(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c)
    std::copy_n(word_data.begin() + static_cast<std::size_t>(c) * 128, 128, words[c].begin());

  SvmModel model;
  model.class_count = M;
  model.dim = k;
  model.tau = meta.at("tau").get<double>();
  model.C = meta.at("C").get<double>();
  model.labels = LabelTable{label_names};
  model.weights.resize(static_cast<std::size_t>(M));
  for (int c = 0; c < M; ++c)
    model.weights[c].assign(weight_data.begin() + static_cast<std::size_t>(c) * k,
                            weight_data.begin() + static_cast<std::size_t>(c + 1) * k);
  model.biases = bias_data;

  return LoadedModel{Vocabulary(std::move(words)), std::move(model),
                     store_detail::sift_from_json(meta.at("params"))};
}

inline void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
  nlohmann::json meta{{"format_version", kArchiveFormatVersion}, {"k", vocab.k()}};
  const std::string meta_str = meta.dump();
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kVocabMagic, kVocabMagic + 8);
  store_detail::put_u64(out, meta_str.size());
  out.insert(out.end(), meta_str.begin(), meta_str.end());
  store_detail::put_u64(out, static_cast<std::uint64_t>(vocab.k()) * 128);
  for (const WordVector& w : vocab.words())
    for (float v : w) store_detail::put_f32(out, v);
  store_detail::write_synced(path, out);
}

inline Vocabulary load_vocabulary(const std::string& path) {
  const std::vector<std::uint8_t> bytes = store_detail::read_all(path);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kVocabMagic, 8) != 0)
    throw FormatError("not a vocabulary archive (bad magic): " + path);
  store_detail::Reader r(bytes.data() + 8, bytes.size() - 8);
  const std::uint64_t meta_len = r.u64();
  nlohmann::json meta = nlohmann::json::parse(r.bytes(static_cast<std::size_t>(meta_len)), nullptr, false);
  if (meta.is_discarded()) throw FormatError("vocabulary archive metadata is not valid JSON");
  if (!meta.contains("format_version") || meta["format_version"].get<int>() != kArchiveFormatVersion)
    throw FormatError("unsupported archive format version");
  const int k = meta.at("k").get<int>();
  if (k < 1) throw CorruptArchive("archive: implausible k");
  const std::vector<float> word_data =
      store_detail::get_array(r, static_cast<std::uint64_t>(k) * 128, "words");
  std::vector<WordVector> words(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c)
    std::copy_n(word_data.begin() + static_cast<std::size_t>(c) * 128, 128, words[c].begin());
  return Vocabulary(std::move(words));
}

}  // namespace salientcrop
