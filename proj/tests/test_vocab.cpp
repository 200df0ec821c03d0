#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "salientcrop/errors.hpp"
#include "salientcrop/rng.hpp"
#include "salientcrop/vocab.hpp"
#include "support/synthetic.hpp"

using namespace salientcrop;

namespace {

// Exhaustive nearest-center search, the oracle for KD-tree exactness.
int linear_nearest(const std::vector<WordVector>& words, const std::array<float, 128>& q) {
  int best = 0;
  double best_d2 = 1e300;
  for (std::size_t j = 0; j < words.size(); ++j) {
    double d2 = 0.0;
    for (int i = 0; i < 128; ++i) {
      const double diff = static_cast<double>(q[i]) - words[j][i];
      d2 += diff * diff;
    }
    if (d2 < best_d2) {
      best_d2 = d2;
      best = static_cast<int>(j);
    }
  }
  return best;
}

std::vector<WordVector> random_words(std::uint64_t seed, int k) {
  SplitMix64 rng(seed);
  std::vector<WordVector> words(k);
  for (auto& w : words)
    for (float& v : w) v = static_cast<float>(rng.uniform());
  return words;
}

}  // namespace

TEST_CASE("two separated clusters recover their true means") {
  SplitMix64 rng(11);
  WordVector mean_a{}, mean_b{};
  for (int i = 0; i < 128; ++i) {
    mean_a[i] = (i % 2 == 0) ? 1.0f : 0.0f;
    mean_b[i] = (i % 2 == 0) ? 0.0f : 1.0f;
  }
  std::vector<Descriptor> points;
  // direct mean accumulation is the oracle
  WordVector sum_a{}, sum_b{};
  for (int n = 0; n < 100; ++n) {
    Descriptor d;
    for (int i = 0; i < 128; ++i)
      d.values[i] = mean_a[i] + static_cast<float>((rng.uniform() - 0.5) * 0.002);
    for (int i = 0; i < 128; ++i) sum_a[i] += d.values[i];
    points.push_back(d);
  }
  for (int n = 0; n < 100; ++n) {
    Descriptor d;
    for (int i = 0; i < 128; ++i)
      d.values[i] = mean_b[i] + static_cast<float>((rng.uniform() - 0.5) * 0.002);
    for (int i = 0; i < 128; ++i) sum_b[i] += d.values[i];
    points.push_back(d);
  }
  for (int i = 0; i < 128; ++i) {
    sum_a[i] /= 100.0f;
    sum_b[i] /= 100.0f;
  }

  const Vocabulary vocab = build_vocabulary(points, 2, 42);
  REQUIRE(vocab.k() == 2);
  // match each center to the nearer true mean
  for (const WordVector& true_mean : {sum_a, sum_b}) {
    double best = 1e300;
    for (const WordVector& center : vocab.words()) {
      double worst_coord = 0.0;
      for (int i = 0; i < 128; ++i)
        worst_coord = std::max(worst_coord,
                               std::abs(static_cast<double>(center[i]) - true_mean[i]));
      best = std::min(best, worst_coord);
    }
    CHECK(best < 0.01);
  }
}

TEST_CASE("k below two is rejected") {
  const std::vector<Descriptor> points = synthetic::descriptor_cloud(3, 50);
  CHECK_THROWS_AS(build_vocabulary(points, 1, 42), InvalidArgument);
}

TEST_CASE("insufficient distinct descriptors are rejected") {
  Descriptor a, b;
  for (int i = 0; i < 128; ++i) {
    a.values[i] = 0.25f;
    b.values[i] = 0.75f;
  }
  std::vector<Descriptor> points(50, a);
  points.resize(100, b);  // only 2 distinct values
  CHECK_THROWS_AS(build_vocabulary(points, 3, 42), InsufficientData);
  CHECK_NOTHROW(build_vocabulary(points, 2, 42));
}

TEST_CASE("same inputs and seed build identical vocabularies") {
  const std::vector<Descriptor> points = synthetic::descriptor_cloud(17, 400, 8);
  const Vocabulary a = build_vocabulary(points, 8, 7);
  const Vocabulary b = build_vocabulary(points, 8, 7);
  REQUIRE(a.k() == b.k());
  for (int c = 0; c < a.k(); ++c)
    for (int i = 0; i < 128; ++i) REQUIRE(a.words()[c][i] == b.words()[c][i]);
}

TEST_CASE("different seeds may reorder but still cover the prototypes") {
  const std::vector<Descriptor> points = synthetic::descriptor_cloud(29, 600, 4, 0.005);
  const Vocabulary a = build_vocabulary(points, 4, 1);
  const Vocabulary b = build_vocabulary(points, 4, 2);
  // both runs must quantize every point to a center at tiny distance
  for (const Descriptor& d : points) {
    for (const Vocabulary* v : {&a, &b}) {
      const int idx = quantize(*v, d);
      double d2 = 0.0;
      for (int i = 0; i < 128; ++i) {
        const double diff = static_cast<double>(d.values[i]) - v->words()[idx][i];
        d2 += diff * diff;
      }
      REQUIRE(d2 < 0.05);
    }
  }
}

TEST_CASE("kd-tree equals linear scan on random queries") {
  const std::vector<WordVector> words = random_words(101, 500);
  const Vocabulary vocab(words);
  SplitMix64 rng(202);
  for (int q = 0; q < 1000; ++q) {
    Descriptor d;
    for (float& v : d.values) v = static_cast<float>(rng.uniform());
    REQUIRE(quantize(vocab, d) == linear_nearest(words, d.values));
  }
}

TEST_CASE("quantize of an exact center returns its index") {
  const std::vector<WordVector> words = random_words(303, 64);
  const Vocabulary vocab(words);
  for (int j = 0; j < 64; ++j) {
    Descriptor d;
    d.values = words[j];
    CHECK(quantize(vocab, d) == j);
  }
}

TEST_CASE("equidistant queries resolve to the lowest index") {
  // centers 2 and 5 are mirror images around the query
  std::vector<WordVector> words(8);
  for (int j = 0; j < 8; ++j)
    for (int i = 0; i < 128; ++i) words[j][i] = static_cast<float>(j) * 10.0f;
  for (int i = 0; i < 128; ++i) {
    words[2][i] = (i == 0) ? 1.0f : 0.5f;
    words[5][i] = (i == 0) ? -1.0f : 0.5f;
  }
  Descriptor q;
  for (int i = 0; i < 128; ++i) q.values[i] = (i == 0) ? 0.0f : 0.5f;
  const Vocabulary vocab(words);
  CHECK(quantize(vocab, q) == 2);
  CHECK(linear_nearest(words, q.values) == 2);
}

TEST_CASE("wcss is nonincreasing across lloyd iterations") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const std::vector<Descriptor> points = synthetic::descriptor_cloud(seed + 400, 2000, 12, 0.2);
    KMeansStats stats;
    build_vocabulary(points, 16, seed, &stats);
    REQUIRE_FALSE(stats.wcss.empty());
    for (std::size_t i = 1; i < stats.wcss.size(); ++i) REQUIRE(stats.wcss[i] <= stats.wcss[i - 1]);
  }
}

TEST_CASE("histogram of a single word concentrates in one bin") {
  std::vector<WordVector> words = random_words(7, 16);
  // make word 3 far from the rest so all probes land there
  for (int i = 0; i < 128; ++i) words[3][i] = 100.0f;
  const Vocabulary vocab(words);
  std::vector<Descriptor> probes(10);
  for (auto& d : probes)
    for (int i = 0; i < 128; ++i) d.values[i] = 100.0f;
  const Histogram h = histogram(vocab, probes);
  REQUIRE(h.bins.size() == 16);
  CHECK(h.bins[3] == 1.0f);
  CHECK(h.total_features == 10);
  for (int j = 0; j < 16; ++j)
    if (j != 3) CHECK(h.bins[j] == 0.0f);
}

TEST_CASE("histogram rejects an empty descriptor list") {
  const Vocabulary vocab(random_words(9, 8));
  CHECK_THROWS_AS(histogram(vocab, {}), NoFeatures);
}

TEST_CASE("histograms are L1-normalized and permutation-invariant") {
  const Vocabulary vocab(random_words(31, 32));
  std::vector<Descriptor> probes = synthetic::descriptor_cloud(77, 64);
  const Histogram a = histogram(vocab, probes);
  double sum = 0.0;
  for (float v : a.bins) sum += v;
  CHECK(std::abs(sum - 1.0) < 1e-6);

  std::reverse(probes.begin(), probes.end());
  const Histogram b = histogram(vocab, probes);
  for (std::size_t i = 0; i < a.bins.size(); ++i) REQUIRE(a.bins[i] == b.bins[i]);
}

TEST_CASE("vocabulary construction rejects an empty word list") {
  CHECK_THROWS_AS(Vocabulary(std::vector<WordVector>{}), InvalidArgument);
}
