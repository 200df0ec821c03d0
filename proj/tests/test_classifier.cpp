#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "salientcrop/classifier.hpp"
#include "salientcrop/errors.hpp"
#include "salientcrop/rng.hpp"
#include "salientcrop/vocab.hpp"

using namespace salientcrop;

namespace {

Histogram histo(std::vector<float> bins, std::size_t total = 10) {
  Histogram h;
  h.bins = std::move(bins);
  h.total_features = total;
  return h;
}

// Two prototype histograms, far apart, plus bounded noise: linearly
// separable by construction.
struct SeparableSet {
  std::vector<Histogram> histograms;
  std::vector<ClassLabel> labels;
  LabelTable table{std::vector<std::string>{"alpha", "beta"}};
};

SeparableSet separable_set(std::uint64_t seed, int per_class = 50, int dim = 8) {
  SeparableSet set;
  SplitMix64 rng(seed);
  for (int cls = 0; cls < 2; ++cls) {
    for (int n = 0; n < per_class; ++n) {
      std::vector<float> bins(dim, 0.0f);
      // class alpha concentrates mass in the low half, beta in the high half
      for (int i = 0; i < dim; ++i) {
        const bool home = (cls == 0) ? (i < dim / 2) : (i >= dim / 2);
        bins[i] = home ? 0.2f + static_cast<float>(rng.uniform()) * 0.05f
                       : static_cast<float>(rng.uniform()) * 0.02f;
      }
      float sum = 0.0f;
      for (float v : bins) sum += v;
      for (float& v : bins) v /= sum;
      set.histograms.push_back(histo(std::move(bins)));
      set.labels.push_back(set.table.label(cls));
    }
  }
  return set;
}

}  // namespace

TEST_CASE("default label table lists the ten classes") {
  const LabelTable table = LabelTable::default_table();
  REQUIRE(table.size() == 10);
  CHECK(table.label(0).name == "flowers");
  CHECK(table.label(9).name == "fish");
  CHECK(table.id_of("dog").value() == 2);
  CHECK(table.id_of("no-class").value() == kNoClassId);
  CHECK_FALSE(table.id_of("zeppelin").has_value());
}

TEST_CASE("separable training set reaches 100% training accuracy") {
  const SeparableSet set = separable_set(5);
  const SvmModel model = train(set.histograms, set.labels, set.table, 1.0, 42);
  REQUIRE(model.class_count == 2);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < set.histograms.size(); ++i)
    if (predict(model, set.histograms[i]).label.id == set.labels[i].id) ++correct;
  CHECK(correct == set.histograms.size());
}

TEST_CASE("prototype histogram classifies to its own class") {
  const SeparableSet set = separable_set(9);
  const SvmModel model = train(set.histograms, set.labels, set.table, 1.0, 42);
  const Prediction p = predict(model, set.histograms[0]);
  CHECK(p.label.name == "alpha");
  const Prediction q = predict(model, set.histograms.back());
  CHECK(q.label.name == "beta");
}

TEST_CASE("missing class raises MissingClass") {
  SeparableSet set = separable_set(3);
  // relabel everything as class 0: class 1 has no examples
  for (auto& l : set.labels) l = set.table.label(0);
  CHECK_THROWS_AS(train(set.histograms, set.labels, set.table, 1.0, 42), MissingClass);
}

TEST_CASE("training input validation") {
  SeparableSet set = separable_set(4);
  SECTION("no-class labels are rejected") {
    set.labels[0] = ClassLabel{kNoClassId, std::string(kNoClassName)};
    CHECK_THROWS_AS(train(set.histograms, set.labels, set.table, 1.0, 42), InvalidArgument);
  }
  SECTION("count mismatch") {
    set.labels.pop_back();
    CHECK_THROWS_AS(train(set.histograms, set.labels, set.table, 1.0, 42), DimensionMismatch);
  }
  SECTION("inconsistent histogram dimensions") {
    set.histograms[1].bins.push_back(0.0f);
    CHECK_THROWS_AS(train(set.histograms, set.labels, set.table, 1.0, 42), DimensionMismatch);
  }
  SECTION("non-positive C") {
    CHECK_THROWS_AS(train(set.histograms, set.labels, set.table, 0.0, 42), InvalidArgument);
  }
  SECTION("empty training set") {
    CHECK_THROWS_AS(train({}, {}, set.table, 1.0, 42), InsufficientData);
  }
}

TEST_CASE("ten-class table trains ten weight vectors") {
  const LabelTable table = LabelTable::default_table();
  SplitMix64 rng(13);
  std::vector<Histogram> histograms;
  std::vector<ClassLabel> labels;
  for (int cls = 0; cls < 10; ++cls)
    for (int n = 0; n < 6; ++n) {
      std::vector<float> bins(10, 0.01f);
      bins[cls] = 0.9f + static_cast<float>(rng.uniform()) * 0.01f;
      float sum = 0.0f;
      for (float v : bins) sum += v;
      for (float& v : bins) v /= sum;
      histograms.push_back(histo(std::move(bins)));
      labels.push_back(table.label(cls));
    }
  const SvmModel model = train(histograms, labels, table, 1.0, 42);
  REQUIRE(model.class_count == 10);
  REQUIRE(model.weights.size() == 10);
  for (const auto& w : model.weights) CHECK(w.size() == 10);
  CHECK(model.labels.size() == 10);
}

TEST_CASE("all scores below tau map to no-class") {
  const SeparableSet set = separable_set(21);
  const SvmModel model = train(set.histograms, set.labels, set.table, 1.0, 42, /*tau=*/1e9);
  const Prediction p = predict(model, set.histograms[0]);
  CHECK(p.label.is_no_class());
  CHECK(p.label.id == kNoClassId);
  CHECK(p.label.name == kNoClassName);
}

TEST_CASE("equal top scores break ties toward the lower class id") {
  SvmModel model;
  model.class_count = 3;
  model.dim = 2;
  model.labels = LabelTable{std::vector<std::string>{"a", "b", "c"}};
  model.weights = {{1.0f, 0.0f}, {1.0f, 0.0f}, {0.0f, 0.0f}};
  model.biases = {0.5f, 0.5f, 0.0f};
  model.tau = 0.0;
  const Prediction p = predict(model, histo({1.0f, 0.0f}));
  CHECK(p.scores[0] == p.scores[1]);
  CHECK(p.label.id == 0);
}

TEST_CASE("predict validates histogram dimension") {
  const SeparableSet set = separable_set(2);
  const SvmModel model = train(set.histograms, set.labels, set.table, 1.0, 42);
  CHECK_THROWS_AS(predict(model, histo({0.5f, 0.5f, 0.0f})), DimensionMismatch);
}

TEST_CASE("label is invariant under uniform positive rescaling") {
  const SeparableSet set = separable_set(33);
  SvmModel model = train(set.histograms, set.labels, set.table, 1.0, 42);
  std::vector<int> before;
  for (const Histogram& h : set.histograms) before.push_back(predict(model, h).label.id);
  for (auto& w : model.weights)
    for (float& v : w) v *= 7.5f;
  for (float& b : model.biases) b *= 7.5f;
  model.tau *= 7.5;
  for (std::size_t i = 0; i < set.histograms.size(); ++i)
    REQUIRE(predict(model, set.histograms[i]).label.id == before[i]);
}

TEST_CASE("retraining with the same seed reproduces identical weights bitwise") {
  const SeparableSet set = separable_set(44);
  const SvmModel a = train(set.histograms, set.labels, set.table, 1.0, 77);
  const SvmModel b = train(set.histograms, set.labels, set.table, 1.0, 77);
  REQUIRE(a.weights.size() == b.weights.size());
  for (std::size_t c = 0; c < a.weights.size(); ++c) {
    for (std::size_t i = 0; i < a.weights[c].size(); ++i)
      REQUIRE(a.weights[c][i] == b.weights[c][i]);
    REQUIRE(a.biases[c] == b.biases[c]);
  }
}

TEST_CASE("objective decreases from start to finish on the separable set") {
  const SeparableSet set = separable_set(55);
  SvmTrainStats stats;
  train(set.histograms, set.labels, set.table, 1.0, 42, 0.0, &stats);
  REQUIRE(stats.epoch_objective.size() == 2);
  for (const auto& per_epoch : stats.epoch_objective) {
    REQUIRE(per_epoch.size() >= 2);
    CHECK(per_epoch.back() <= per_epoch.front());
  }
}
