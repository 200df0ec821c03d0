// One-vs-all linear SVM over visual-word histograms. Each class gets a
// linear discriminant trained by seeded epoch-based subgradient descent
// on the L2-regularized hinge loss; a prediction whose best score falls
// under tau is assigned the no-class outlier label.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "salientcrop/errors.hpp"
#include "salientcrop/rng.hpp"
#include "salientcrop/vocab.hpp"

namespace salientcrop {

inline constexpr int kNoClassId = -1;
inline constexpr const char* kNoClassName = "no-class";

struct ClassLabel {
  int id = kNoClassId;
  std::string name = kNoClassName;

  bool is_no_class() const { return id == kNoClassId; }
};

struct LabelTable {
  std::vector<std::string> names;

  static LabelTable default_table() {
    return LabelTable{{"flowers", "baby", "dog", "car", "painting",
                       "bicycle", "bird", "bottle", "lamp", "fish"}};
  }

  int size() const { return static_cast<int>(names.size()); }

  ClassLabel label(int id) const {
    if (id == kNoClassId) return ClassLabel{};
    return ClassLabel{id, names.at(static_cast<std::size_t>(id))};
  }

  // Maps a name to a class id; "no-class" maps to the sentinel.
  std::optional<int> id_of(const std::string& name) const {
    if (name == kNoClassName) return kNoClassId;
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    return std::nullopt;
  }
};

struct SvmModel {
  int class_count = 0;
  int dim = 0;
  std::vector<std::vector<float>> weights;  // class_count x dim
  std::vector<float> biases;                // class_count
  double tau = 0.0;
  double C = 1.0;
  LabelTable labels;
};

struct Prediction {
  ClassLabel label;
  std::vector<double> scores;
};

struct SvmTrainStats {
  // epoch_objective[class][epoch]: regularized hinge objective after that epoch.
  std::vector<std::vector<double>> epoch_objective;
};

namespace svm_detail {

constexpr int kEpochs = 200;

inline double dot(const std::vector<double>& w, const std::vector<float>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
  return s;
}

inline double objective(const std::vector<double>& w, double b,
                        const std::vector<const Histogram*>& xs,
                        const std::vector<double>& ys, double lambda) {
  double reg = 0.0;
  for (double v : w) reg += v * v;
  double hinge = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double margin = ys[j] * (dot(w, xs[j]->bins) + b);
    hinge += std::max(0.0, 1.0 - margin);
  }
  return 0.5 * lambda * reg + hinge / static_cast<double>(xs.size());
}

}  // namespace svm_detail

inline SvmModel train(const std::vector<Histogram>& histograms,
                      const std::vector<ClassLabel>& labels, const LabelTable& table,
                      double C, std::uint64_t seed, double tau = 0.0,
                      SvmTrainStats* stats = nullptr) {
  if (histograms.size() != labels.size())
    throw DimensionMismatch("train: histogram/label count mismatch");
  if (histograms.empty()) throw InsufficientData("train: empty training set");
  if (C <= 0.0) throw InvalidArgument("train: C must be positive");
  const int M = table.size();
  if (M < 2) throw InvalidArgument("train: need at least 2 classes");
  const std::size_t dim = histograms.front().bins.size();
  for (const Histogram& h : histograms)
    if (h.bins.size() != dim) throw DimensionMismatch("train: inconsistent histogram dimensions");

  std::vector<std::size_t> per_class(static_cast<std::size_t>(M), 0);
  for (const ClassLabel& l : labels) {
    if (l.is_no_class())
      throw InvalidArgument("train: no-class labels are not allowed in training data");
    if (l.id < 0 || l.id >= M) throw InvalidArgument("train: label id out of range");
    ++per_class[static_cast<std::size_t>(l.id)];
  }
  for (int c = 0; c < M; ++c)
    if (per_class[c] == 0)
      throw MissingClass("train: class '" + table.names[c] + "' has no examples");

  const std::size_t n = histograms.size();
  const double lambda = 1.0 / (C * static_cast<double>(n));

  SvmModel model;
  model.class_count = M;
  model.dim = static_cast<int>(dim);
  model.tau = tau;
  model.C = C;
  model.labels = table;
  model.weights.assign(static_cast<std::size_t>(M), std::vector<float>(dim, 0.0f));
  model.biases.assign(static_cast<std::size_t>(M), 0.0f);
  if (stats) stats->epoch_objective.assign(static_cast<std::size_t>(M), {});

  std::vector<const Histogram*> xs(n);
  for (std::size_t j = 0; j < n; ++j) xs[j] = &histograms[j];

  for (int cls = 0; cls < M; ++cls) {
    std::vector<double> ys(n);
    for (std::size_t j = 0; j < n; ++j) ys[j] = labels[j].id == cls ? 1.0 : -1.0;

    SplitMix64 rng(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(cls + 1)));
    std::vector<std::size_t> order(n);
    for (std::size_t j = 0; j < n; ++j) order[j] = j;

    std::vector<double> w(dim, 0.0);
    double b = 0.0;
    std::uint64_t t = 0;
    for (int epoch = 0; epoch < svm_detail::kEpochs; ++epoch) {
      // Fisher-Yates with the pinned generator.
      for (std::size_t j = n - 1; j > 0; --j)
        std::swap(order[j], order[rng.index(j + 1)]);
      for (std::size_t idx : order) {
        ++t;
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const double margin = ys[idx] * (svm_detail::dot(w, xs[idx]->bins) + b);
        const double shrink = 1.0 - eta * lambda;  // = 1 - 1/t
        for (double& v : w) v *= shrink;
        if (margin < 1.0) {
          const double step = eta * ys[idx];
          const std::vector<float>& x = xs[idx]->bins;
          for (std::size_t d = 0; d < dim; ++d) w[d] += step * x[d];
          b += step;
        }
      }
      if (stats)
        stats->epoch_objective[cls].push_back(svm_detail::objective(w, b, xs, ys, lambda));
    }
    for (std::size_t d = 0; d < dim; ++d) model.weights[cls][d] = static_cast<float>(w[d]);
    model.biases[cls] = static_cast<float>(b);
  }
  return model;
}

inline Prediction predict(const SvmModel& model, const Histogram& h) {
  if (static_cast<int>(h.bins.size()) != model.dim)
    throw DimensionMismatch("predict: histogram dimension mismatch");
  Prediction p;
  p.scores.resize(static_cast<std::size_t>(model.class_count));
  int best = 0;
  for (int c = 0; c < model.class_count; ++c) {
    double s = 0.0;
    const std::vector<float>& w = model.weights[c];
    for (std::size_t d = 0; d < h.bins.size(); ++d) s += static_cast<double>(w[d]) * h.bins[d];
    s += model.biases[c];
    p.scores[c] = s;
    if (s > p.scores[best]) best = c;
  }
  p.label = p.scores[best] < model.tau ? ClassLabel{} : model.labels.label(best);
  return p;
}

}  // namespace salientcrop
