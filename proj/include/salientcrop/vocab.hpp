// Visual vocabulary: k-means++ seeded Lloyd clustering of SIFT
// descriptors, an exact KD-tree over the resulting word centers, and
// L1-normalized visual-word histograms.
//
// All randomness is drawn from an explicitly seeded generator with
// pinned sampling, so (descriptors, k, seed) fully determine the
// vocabulary.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "salientcrop/errors.hpp"
#include "salientcrop/rng.hpp"
#include "salientcrop/sift.hpp"

namespace salientcrop {

using WordVector = std::array<float, 128>;

namespace vocab_detail {

inline double dist2(const WordVector& a, const WordVector& b) {
  double s = 0.0;
  for (int i = 0; i < 128; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return s;
}

struct KdNode {
  int point = -1;  // index into words
  int dim = -1;
  int left = -1;
  int right = -1;
};

}  // namespace vocab_detail

class Vocabulary {
public:
  explicit Vocabulary(std::vector<WordVector> words) : words_(std::move(words)) {
    if (words_.empty()) throw InvalidArgument("Vocabulary: no words");
    std::vector<int> indices(words_.size());
    std::iota(indices.begin(), indices.end(), 0);
    nodes_.reserve(words_.size());
    root_ = build(indices, 0, static_cast<int>(indices.size()));
  }

  int k() const { return static_cast<int>(words_.size()); }
  const std::vector<WordVector>& words() const { return words_; }

  // Index of the Euclidean-nearest word; exact search with full
  // backtracking, distance ties resolved to the lowest index.
  int nearest(const WordVector& query) const {
    double best_d2 = std::numeric_limits<double>::infinity();
    int best_idx = -1;
    search(root_, query, best_d2, best_idx);
    return best_idx;
  }

private:
  int build(std::vector<int>& indices, int lo, int hi) {
    if (lo >= hi) return -1;
    // Split on the dimension with the largest spread in this subset.
    int dim = 0;
    float best_spread = -1.0f;
    for (int d = 0; d < 128; ++d) {
      float mn = words_[indices[lo]][d], mx = mn;
      for (int i = lo; i < hi; ++i) {
        const float v = words_[indices[i]][d];
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      if (mx - mn > best_spread) {
        best_spread = mx - mn;
        dim = d;
      }
    }
    const int mid = (lo + hi) / 2;
    std::sort(indices.begin() + lo, indices.begin() + hi, [&](int a, int b) {
      if (words_[a][dim] != words_[b][dim]) return words_[a][dim] < words_[b][dim];
      return a < b;
    });
    vocab_detail::KdNode node;
    node.point = indices[mid];
    node.dim = dim;
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    nodes_[self].left = build(indices, lo, mid);
    nodes_[self].right = build(indices, mid + 1, hi);
    return self;
  }

  void search(int node_idx, const WordVector& q, double& best_d2, int& best_idx) const {
    if (node_idx < 0) return;
    const vocab_detail::KdNode& node = nodes_[node_idx];
    const double d2 = vocab_detail::dist2(q, words_[node.point]);
    if (d2 < best_d2 || (d2 == best_d2 && node.point < best_idx)) {
      best_d2 = d2;
      best_idx = node.point;
    }
    const double diff = static_cast<double>(q[node.dim]) -
                        static_cast<double>(words_[node.point][node.dim]);
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    search(near, q, best_d2, best_idx);
    if (diff * diff <= best_d2) search(far, q, best_d2, best_idx);
  }

  std::vector<WordVector> words_;
  std::vector<vocab_detail::KdNode> nodes_;
  int root_ = -1;
};

struct KMeansStats {
  std::vector<double> wcss;  // within-cluster sum of squares after each assignment
  int iterations = 0;
};

inline Vocabulary build_vocabulary(const std::vector<Descriptor>& descriptors, int k,
                                   std::uint64_t seed, KMeansStats* stats = nullptr) {
  if (k < 2) throw InvalidArgument("build_vocabulary: k must be >= 2");
  {
    std::vector<const Descriptor*> sorted(descriptors.size());
    for (std::size_t i = 0; i < descriptors.size(); ++i) sorted[i] = &descriptors[i];
    std::sort(sorted.begin(), sorted.end(),
              [](const Descriptor* a, const Descriptor* b) { return a->values < b->values; });
    std::size_t distinct = sorted.empty() ? 0 : 1;
    for (std::size_t i = 1; i < sorted.size(); ++i)
      if (sorted[i]->values != sorted[i - 1]->values) ++distinct;
    if (distinct < static_cast<std::size_t>(k))
      throw InsufficientData("build_vocabulary: fewer distinct descriptors than k");
  }

  const std::size_t n = descriptors.size();
  SplitMix64 rng(seed);

  // k-means++ seeding.
  std::vector<std::array<double, 128>> centers(static_cast<std::size_t>(k));
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  auto set_center = [&](int c, const WordVector& v) {
    for (int d = 0; d < 128; ++d) centers[c][d] = v[d];
  };
  set_center(0, descriptors[rng.index(n)].values);
  auto d2_to_center = [&](std::size_t p, int c) {
    double s = 0.0;
    for (int d = 0; d < 128; ++d) {
      const double diff = descriptors[p].values[d] - centers[c][d];
      s += diff * diff;
    }
    return s;
  };
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      min_d2[p] = std::min(min_d2[p], d2_to_center(p, c - 1));
      total += min_d2[p];
    }
    const double target = rng.uniform() * total;
    double cum = 0.0;
    std::size_t chosen = n;
    for (std::size_t p = 0; p < n; ++p) {
      cum += min_d2[p];
      if (cum >= target && min_d2[p] > 0.0) {
        chosen = p;
        break;
      }
    }
    if (chosen == n) {  // boundary rounding: fall back to any unused point
      for (std::size_t p = 0; p < n; ++p)
        if (min_d2[p] > 0.0) {
          chosen = p;
          break;
        }
    }
    set_center(c, descriptors[chosen].values);
  }

  // Lloyd iterations until the assignment reaches a fixpoint.
  std::vector<int> assign(n, -1);
  std::vector<double> dist(n, 0.0);
  int iter = 0;
  for (; iter < 100; ++iter) {
    bool changed = false;
    double wcss = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = -1;
      for (int c = 0; c < k; ++c) {
        const double d2 = d2_to_center(p, c);
        if (d2 < best) {
          best = d2;
          best_c = c;
        }
      }
      if (assign[p] != best_c) {
        assign[p] = best_c;
        changed = true;
      }
      dist[p] = best;
      wcss += best;
    }
    if (stats) stats->wcss.push_back(wcss);
    if (!changed) break;

    std::vector<std::array<double, 128>> sums(static_cast<std::size_t>(k));
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (auto& s : sums) s.fill(0.0);
    for (std::size_t p = 0; p < n; ++p) {
      const int c = assign[p];
      ++counts[c];
      for (int d = 0; d < 128; ++d) sums[c][d] += descriptors[p].values[d];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Re-seed an empty cluster from the point farthest from its center.
        std::size_t far_p = 0;
        double far_d = -1.0;
        for (std::size_t p = 0; p < n; ++p) {
          if (dist[p] > far_d) {
            far_d = dist[p];
            far_p = p;
          }
        }
        set_center(c, descriptors[far_p].values);
        dist[far_p] = 0.0;
        continue;
      }
      for (int d = 0; d < 128; ++d) centers[c][d] = sums[c][d] / counts[c];
    }
  }
  if (stats) stats->iterations = iter;

  std::vector<WordVector> words(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c)
    for (int d = 0; d < 128; ++d) words[c][d] = static_cast<float>(centers[c][d]);
  return Vocabulary(std::move(words));
}

inline int quantize(const Vocabulary& vocab, const Descriptor& d) {
  return vocab.nearest(d.values);
}

struct Histogram {
  std::vector<float> bins;
  std::size_t total_features = 0;
};

inline Histogram histogram(const Vocabulary& vocab, const std::vector<Descriptor>& descriptors) {
  if (descriptors.empty()) throw NoFeatures("histogram: no descriptors");
  std::vector<std::size_t> counts(static_cast<std::size_t>(vocab.k()), 0);
  for (const Descriptor& d : descriptors) ++counts[vocab.nearest(d.values)];
  Histogram h;
  h.total_features = descriptors.size();
  h.bins.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    h.bins[i] = static_cast<float>(static_cast<double>(counts[i]) / descriptors.size());
  return h;
}

}  // namespace salientcrop
