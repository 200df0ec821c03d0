// Command-line surface. run_command() takes argv-style tokens (program
// name excluded) and writes to caller-supplied streams, so the whole
// CLI is exercisable in-process. Exit codes: 0 success, 1 user error,
// 2 internal error.

#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "salientcrop/classifier.hpp"
#include "salientcrop/codec.hpp"
#include "salientcrop/cropper.hpp"
#include "salientcrop/errors.hpp"
#include "salientcrop/eval.hpp"
#include "salientcrop/pipeline.hpp"
#include "salientcrop/saliency.hpp"
#include "salientcrop/service.hpp"
#include "salientcrop/sift.hpp"
#include "salientcrop/store.hpp"
#include "salientcrop/vocab.hpp"

namespace salientcrop {

namespace cli_detail {

inline bool has_image_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && has_image_extension(entry.path())) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

inline RasterImage load_raster(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  return decode_image(bytes.data(), bytes.size());
}

struct TrainedArtifacts {
  Vocabulary vocab;
  SvmModel model;
  SiftParams sift;
  std::size_t correct = 0;
  std::size_t total = 0;
};

// Training layout: one subdirectory per class, directory name = class
// name, sorted names form the label table. Images without any features
// are skipped with a warning.
inline TrainedArtifacts train_from_directory(const std::string& input_dir, int k, double C,
                                             std::uint64_t seed, float threshold, double tau,
                                             const std::optional<std::string>& vocab_path,
                                             std::ostream& err) {
  const std::filesystem::path root(input_dir);
  if (!std::filesystem::is_directory(root))
    throw InvalidArgument("train: not a directory: " + input_dir);

  std::vector<std::string> class_names;
  for (const auto& entry : std::filesystem::directory_iterator(root))
    if (entry.is_directory()) class_names.push_back(entry.path().filename().string());
  std::sort(class_names.begin(), class_names.end());
  if (class_names.size() < 2)
    throw InvalidArgument("train: need at least 2 class subdirectories in " + input_dir);

  const LabelTable table{class_names};
  const SiftParams sift_params;

  std::vector<std::vector<Descriptor>> per_image;
  std::vector<ClassLabel> labels;
  std::vector<Descriptor> all_descriptors;
  for (std::size_t ci = 0; ci < class_names.size(); ++ci) {
    for (const auto& path : list_images(root / class_names[ci])) {
      const RasterImage img = load_raster(path.string());
      std::vector<Descriptor> descs = image_descriptors(img, sift_params, threshold);
      if (descs.empty()) {
        err << "warning: no features in " << path.string() << ", skipping\n";
        continue;
      }
      all_descriptors.insert(all_descriptors.end(), descs.begin(), descs.end());
      per_image.push_back(std::move(descs));
      labels.push_back(table.label(static_cast<int>(ci)));
    }
  }
  if (per_image.empty()) throw InsufficientData("train: no usable training images");

  Vocabulary vocab = vocab_path ? load_vocabulary(*vocab_path)
                                : build_vocabulary(all_descriptors, k, seed);

  std::vector<Histogram> histograms;
  histograms.reserve(per_image.size());
  for (const auto& descs : per_image) histograms.push_back(histogram(vocab, descs));

  SvmModel model = train(histograms, labels, table, C, seed, tau);

  TrainedArtifacts result{std::move(vocab), std::move(model), sift_params, 0, histograms.size()};
  for (std::size_t i = 0; i < histograms.size(); ++i)
    if (predict(result.model, histograms[i]).label.id == labels[i].id) ++result.correct;
  return result;
}

inline std::pair<std::string, int> split_bind(const std::string& bind) {
  const std::size_t colon = bind.rfind(':');
  if (colon == std::string::npos || colon + 1 == bind.size())
    throw InvalidArgument("bind address must be host:port, got: " + bind);
  const std::string host = bind.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw InvalidArgument("bad port in bind address: " + bind);
  }
  if (port < 0 || port > 65535) throw InvalidArgument("port out of range: " + bind);
  return {host, port};
}

inline std::string format_float(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace cli_detail

inline int run_command(const std::vector<std::string>& args, std::ostream& out,
                       std::ostream& err) {
  CLI::App app{"saliency-driven image cropping and classification"};
  app.name("salientcrop");
  app.require_subcommand(0, 1);
  app.failure_message(CLI::FailureMessage::help);

  std::uint64_t seed = 42;
  float threshold = 0.5f;
  int k = 500;
  double c_param = 1.0;
  double tau = 0.0;
  bool json_output = false;

  // build-vocab
  auto* vocab_cmd = app.add_subcommand("build-vocab", "cluster descriptors into a visual vocabulary");
  std::string vocab_input, vocab_out;
  vocab_cmd->add_option("--input", vocab_input, "directory of training images")->required();
  vocab_cmd->add_option("--out", vocab_out, "output vocabulary file")->required();
  vocab_cmd->add_option("--k", k, "vocabulary size");
  vocab_cmd->add_option("--seed", seed, "random seed");
  vocab_cmd->add_option("--threshold", threshold, "saliency threshold");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a classifier from a class-per-directory corpus");
  std::string train_input, train_out;
  std::string train_vocab;
  train_cmd->add_option("--input", train_input, "directory with one subdirectory per class")->required();
  train_cmd->add_option("--out", train_out, "output model file")->required();
  train_cmd->add_option("--vocab", train_vocab, "reuse a prebuilt vocabulary file");
  train_cmd->add_option("--k", k, "vocabulary size");
  train_cmd->add_option("--c", c_param, "SVM regularization weight");
  train_cmd->add_option("--seed", seed, "random seed");
  train_cmd->add_option("--threshold", threshold, "saliency threshold");
  train_cmd->add_option("--tau", tau, "no-class decision threshold");

  // crop
  auto* crop_cmd = app.add_subcommand("crop", "extract salient crops from an image");
  std::string crop_image_path, crop_out_dir = ".", crop_saliency_path;
  std::optional<int> crop_max;
  crop_cmd->add_option("--image", crop_image_path, "input image")->required();
  crop_cmd->add_option("--out-dir", crop_out_dir, "directory for crop PNGs and manifest");
  crop_cmd->add_option("--saliency", crop_saliency_path, "also write the saliency map as a grayscale PNG");
  crop_cmd->add_option("--max-crops", crop_max, "cap on emitted crops");
  crop_cmd->add_option("--threshold", threshold, "saliency threshold");
  crop_cmd->add_flag("--json", json_output, "print the crop manifest to stdout");

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "classify the salient crops of an image");
  std::string analyze_model_path, analyze_image_path;
  std::optional<double> analyze_tau;
  std::optional<int> analyze_max;
  bool analyze_png = false;
  analyze_cmd->add_option("--model", analyze_model_path, "trained model file")->required();
  analyze_cmd->add_option("--image", analyze_image_path, "input image")->required();
  analyze_cmd->add_option("--threshold", threshold, "saliency threshold");
  analyze_cmd->add_option("--tau", analyze_tau, "override the model's no-class threshold");
  analyze_cmd->add_option("--max-crops", analyze_max, "cap on analyzed crops");
  analyze_cmd->add_flag("--json", json_output, "emit the canonical JSON document");
  analyze_cmd->add_flag("--crops-png", analyze_png, "embed base64 PNGs of the crops in JSON output");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "score a model against a labeled manifest");
  std::string eval_model_path, eval_manifest_path;
  eval_cmd->add_option("--model", eval_model_path, "trained model file")->required();
  eval_cmd->add_option("--manifest", eval_manifest_path, "CSV manifest (path,label)")->required();
  eval_cmd->add_option("--threshold", threshold, "saliency threshold");
  eval_cmd->add_flag("--json", json_output, "emit a JSON report");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP analysis service");
  std::string serve_model_path, serve_bind = "127.0.0.1:8080";
  serve_cmd->add_option("--model", serve_model_path, "trained model file")
      ->envname("SALIENTCROP_MODEL")
      ->required();
  serve_cmd->add_option("--bind", serve_bind, "host:port to listen on")->envname("SALIENTCROP_BIND");
  serve_cmd->add_option("--threshold", threshold, "saliency threshold");

  // features
  auto* features_cmd = app.add_subcommand("features", "dump detected keypoints as CSV");
  std::string features_image_path, features_out;
  features_cmd->add_option("--image", features_image_path, "input image")->required();
  features_cmd->add_option("--out", features_out, "output CSV file (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return 1;
  }

  try {
    if (vocab_cmd->parsed()) {
      const std::filesystem::path root(vocab_input);
      if (!std::filesystem::is_directory(root))
        throw InvalidArgument("build-vocab: not a directory: " + vocab_input);
      std::vector<std::filesystem::path> images;
      if (std::filesystem::is_directory(root)) {
        for (const auto& entry : std::filesystem::recursive_directory_iterator(root))
          if (entry.is_regular_file() && cli_detail::has_image_extension(entry.path()))
            images.push_back(entry.path());
      }
      std::sort(images.begin(), images.end());
      if (images.empty()) throw InsufficientData("build-vocab: no images under " + vocab_input);

      const SiftParams sift_params;
      std::vector<Descriptor> descriptors;
      for (const auto& path : images) {
        const RasterImage img = cli_detail::load_raster(path.string());
        std::vector<Descriptor> descs = image_descriptors(img, sift_params, threshold);
        if (descs.empty()) {
          err << "warning: no features in " << path.string() << ", skipping\n";
          continue;
        }
        descriptors.insert(descriptors.end(), descs.begin(), descs.end());
      }
      const Vocabulary vocab = build_vocabulary(descriptors, k, seed);
      save_vocabulary(vocab, vocab_out);
      out << "vocabulary: " << vocab.k() << " words from " << descriptors.size()
          << " descriptors (" << images.size() << " images) -> " << vocab_out << "\n";
      return 0;
    }

    if (train_cmd->parsed()) {
      std::optional<std::string> vocab_path;
      if (!train_vocab.empty()) vocab_path = train_vocab;
      cli_detail::TrainedArtifacts art = cli_detail::train_from_directory(
          train_input, k, c_param, seed, threshold, tau, vocab_path, err);
      save_model(art.vocab, art.model, train_out, art.sift);
      const double acc = art.total ? static_cast<double>(art.correct) / art.total : 0.0;
      out << "trained " << art.model.class_count << " classes on " << art.total
          << " images; training accuracy " << percent_round(acc) << "% (" << art.correct << "/"
          << art.total << ") -> " << train_out << "\n";
      return 0;
    }

    if (crop_cmd->parsed()) {
      const RasterImage img = cli_detail::load_raster(crop_image_path);
      const SaliencyMap map = compute_saliency(img);
      CropParams params;
      params.threshold = threshold;
      if (crop_max) params.max_crops = *crop_max;
      const std::vector<CropRegion> crops = extract_crops(img, map, params);

      const std::filesystem::path out_dir(crop_out_dir);
      std::filesystem::create_directories(out_dir);
      const std::string stem = std::filesystem::path(crop_image_path).stem().string();

      nlohmann::json manifest;
      manifest["image"] = crop_image_path;
      manifest["crops"] = nlohmann::json::array();
      for (std::size_t i = 0; i < crops.size(); ++i) {
        const CropRegion& r = crops[i];
        const RasterImage patch = crop_image(img, r.x, r.y, r.width, r.height);
        const std::filesystem::path crop_path =
            out_dir / (stem + "_crop" + std::to_string(i) + ".png");
        write_file(crop_path.string(), encode_png(patch));
        manifest["crops"].push_back(
            {{"box", {{"x", r.x}, {"y", r.y}, {"w", r.width}, {"h", r.height}}},
             {"file", crop_path.filename().string()},
             {"peak", r.peak.value}});
      }
      const std::filesystem::path manifest_path = out_dir / (stem + "_crops.json");
      const std::string manifest_str = manifest.dump(2) + "\n";
      write_file(manifest_path.string(),
                 std::vector<std::uint8_t>(manifest_str.begin(), manifest_str.end()));

      if (!crop_saliency_path.empty()) {
        GrayImage gray{map.width, map.height, map.values};
        write_file(crop_saliency_path, encode_png(gray));
      }
      if (json_output) {
        out << manifest.dump() << "\n";
      } else {
        out << crops.size() << " crops -> " << manifest_path.string() << "\n";
      }
      return 0;
    }

    if (analyze_cmd->parsed()) {
      LoadedModel model = load_model(analyze_model_path);
      if (analyze_tau) model.svm.tau = *analyze_tau;
      const std::vector<std::uint8_t> bytes = read_file(analyze_image_path);
      AnalyzeOptions opts;
      opts.crop.threshold = threshold;
      if (analyze_max) opts.crop.max_crops = *analyze_max;
      opts.encode_crops = analyze_png;
      const AnalysisResult result = analyze_bytes(bytes, model, opts);
      if (json_output) {
        out << to_canonical_json(result) << "\n";
      } else {
        out << "image " << result.image_id << ": " << result.crops.size() << " crops\n";
        for (const CropAnalysis& c : result.crops)
          out << "  [" << c.region.x << "," << c.region.y << " " << c.region.width << "x"
              << c.region.height << "] " << c.label.name << " ("
              << cli_detail::format_float(c.score) << ")\n";
        for (const auto& [name, n] : result.counts) out << "  " << name << ": " << n << "\n";
      }
      return 0;
    }

    if (eval_cmd->parsed()) {
      const LoadedModel model = load_model(eval_model_path);
      const EvalReport report =
          evaluate(model.svm, model.vocab, eval_manifest_path, model.sift, threshold);
      if (json_output) {
        nlohmann::json doc;
        doc["counts"] = {{"tests", report.counts.tests},
                         {"tp", report.counts.tp},
                         {"fp", report.counts.fp},
                         {"fn", report.counts.fn}};
        doc["ratios"] = {{"accuracy", report.metrics.accuracy},
                         {"precision", report.metrics.precision},
                         {"recall", report.metrics.recall}};
        doc["percent"] = {{"accuracy", percent_round(report.metrics.accuracy)},
                          {"precision", percent_round(report.metrics.precision)},
                          {"recall", percent_round(report.metrics.recall)},
                          {"fp", percent_round(static_cast<double>(report.counts.fp) /
                                               report.counts.tests)},
                          {"fn", percent_round(static_cast<double>(report.counts.fn) /
                                               report.counts.tests)}};
        doc["confusion"] = report.confusion;
        out << doc.dump() << "\n";
      } else {
        out << "tests " << report.counts.tests << ", tp " << report.counts.tp << ", fp "
            << report.counts.fp << ", fn " << report.counts.fn << "\n";
        out << "accuracy " << percent_round(report.metrics.accuracy) << "%, precision "
            << percent_round(report.metrics.precision) << "%, recall "
            << percent_round(report.metrics.recall) << "%\n";
      }
      return 0;
    }

    if (serve_cmd->parsed()) {
      const auto [host, port] = cli_detail::split_bind(serve_bind);
      LoadedModel model = load_model(serve_model_path);
      ServiceConfig config;
      config.host = host;
      config.port = port;
      config.analyze.crop.threshold = threshold;
      Service service(std::move(model), std::move(config));
      out << "serving on " << host << ":" << port << "\n";
      service.run();
      return 0;
    }

    if (features_cmd->parsed()) {
      const RasterImage img = cli_detail::load_raster(features_image_path);
      const SiftParams sift_params;
      const std::vector<Keypoint> keypoints = detect_keypoints(img, sift_params);
      std::string csv = "x,y,scale,orientation,response\n";
      for (const Keypoint& kp : keypoints) {
        csv += cli_detail::format_float(kp.x);
        csv += ',';
        csv += cli_detail::format_float(kp.y);
        csv += ',';
        csv += cli_detail::format_float(kp.scale);
        csv += ',';
        csv += cli_detail::format_float(kp.orientation);
        csv += ',';
        csv += cli_detail::format_float(kp.response);
        csv += '\n';
      }
      if (features_out.empty()) {
        out << csv;
      } else {
        write_file(features_out, std::vector<std::uint8_t>(csv.begin(), csv.end()));
        out << keypoints.size() << " keypoints -> " << features_out << "\n";
      }
      return 0;
    }

    out << app.help();
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace salientcrop
