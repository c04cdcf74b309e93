#pragma once

// Bag-of-visual-words image description: oriented BRIEF descriptors, a
// hierarchical k-medians vocabulary, tf-idf vectors, L1 similarity, and
// intra-sequence closest-match retrieval.

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "slamchar/core.hpp"
#include "slamchar/features.hpp"
#include "slamchar/image_ops.hpp"

namespace slamchar::similarity {

/// 256-bit binary descriptor.
struct Descriptor {
  std::array<std::uint64_t, 4> bits{};

  bool test(int i) const { return (bits[i / 64] >> (i % 64)) & 1u; }
  void set(int i) { bits[i / 64] |= std::uint64_t{1} << (i % 64); }
  bool operator==(const Descriptor&) const = default;
};

inline int hamming(const Descriptor& a, const Descriptor& b) {
  int d = 0;
  for (int i = 0; i < 4; ++i) d += std::popcount(a.bits[i] ^ b.bits[i]);
  return d;
}

// ---------------------------------------------------------------------------
// Oriented BRIEF
// ---------------------------------------------------------------------------

inline constexpr int kPatternExtent = 13;   // test points lie in [-13, 13]^2
inline constexpr int kDescriptorBorder = 19; // ceil(13 * sqrt(2))

struct BriefPattern {
  std::array<std::array<int, 4>, 256> pairs{};  // x1, y1, x2, y2

  static BriefPattern make(std::uint64_t seed) {
    BriefPattern p;
    std::mt19937_64 rng(seed);
    const auto span = static_cast<std::uint64_t>(2 * kPatternExtent + 1);
    for (auto& pr : p.pairs) {
      for (int& c : pr) c = static_cast<int>(rng() % span) - kPatternExtent;
      if (pr[0] == pr[2] && pr[1] == pr[3]) pr[2] = pr[0] < kPatternExtent ? pr[0] + 1 : pr[0] - 1;
    }
    return p;
  }
};

/// Descriptors for keypoints far enough from the border; others are skipped.
/// `smoothed` should be the detector image after Gaussian smoothing.
inline std::vector<Descriptor> describe(const Gray8& smoothed, const std::vector<features::Keypoint>& kps,
                                        const BriefPattern& pattern) {
  std::vector<Descriptor> out;
  out.reserve(kps.size());
  for (const auto& kp : kps) {
    const int x = static_cast<int>(kp.x);
    const int y = static_cast<int>(kp.y);
    if (x < kDescriptorBorder || y < kDescriptorBorder || x >= smoothed.width() - kDescriptorBorder ||
        y >= smoothed.height() - kDescriptorBorder) {
      continue;
    }
    const double c = std::cos(kp.angle);
    const double s = std::sin(kp.angle);
    auto sample = [&](int px, int py) {
      const int rx = static_cast<int>(std::lround(c * px - s * py));
      const int ry = static_cast<int>(std::lround(s * px + c * py));
      return smoothed(x + rx, y + ry);
    };
    Descriptor d;
    for (int i = 0; i < 256; ++i) {
      const auto& pr = pattern.pairs[i];
      if (sample(pr[0], pr[1]) < sample(pr[2], pr[3])) d.set(i);
    }
    out.push_back(d);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

using WordId = std::uint32_t;

/// Sparse tf-idf histogram, L1-normalized; the zero vector for featureless images.
using BowVector = std::map<WordId, double>;

class Vocabulary {
 public:
  struct Node {
    Descriptor centroid;
    int parent = -1;
    std::vector<int> children;
    int word = -1;  // leaf word id, -1 for internal nodes
  };

  Vocabulary() = default;

  int branching() const { return k_; }
  int depth() const { return depth_; }
  std::size_t words() const { return idf_.size(); }
  const std::vector<double>& idf() const { return idf_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t training_images() const { return images_; }

  /// Recursive k-medians (majority-bit medians under Hamming distance) to the given
  /// depth, k-means++ seeding; idf = max(0, ln(N / (1 + n_w))) over the training images.
  static Vocabulary build(const std::vector<std::vector<Descriptor>>& images, int k, int depth, std::uint64_t seed) {
    if (k < 1 || depth < 1) throw Error("vocabulary needs k >= 1 and depth >= 1");
    Vocabulary v;
    v.k_ = k;
    v.depth_ = depth;
    v.images_ = images.size();
    std::vector<Descriptor> all;
    for (const auto& img : images) all.insert(all.end(), img.begin(), img.end());
    if (all.size() < static_cast<std::size_t>(k)) throw Error("descriptor sample smaller than k");

    std::mt19937_64 rng(seed);
    v.nodes_.push_back(Node{});
    std::vector<std::size_t> idx(all.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    v.grow(0, all, idx, 0, rng);

    int next_word = 0;
    for (auto& n : v.nodes_) {
      if (n.children.empty()) n.word = next_word++;
    }
    v.idf_.assign(static_cast<std::size_t>(next_word), 0.0);
    std::vector<std::size_t> containing(v.idf_.size(), 0);
    for (const auto& img : images) {
      std::vector<bool> seen(v.idf_.size(), false);
      for (const auto& d : img) seen[v.word_of(d)] = true;
      for (std::size_t w = 0; w < seen.size(); ++w) containing[w] += seen[w] ? 1 : 0;
    }
    const double n_img = static_cast<double>(images.size());
    for (std::size_t w = 0; w < v.idf_.size(); ++w) {
      v.idf_[w] = n_img > 0 ? std::max(0.0, std::log(n_img / (1.0 + static_cast<double>(containing[w])))) : 0.0;
    }
    return v;
  }

  WordId word_of(const Descriptor& d) const {
    int node = 0;
    while (!nodes_[node].children.empty()) {
      int best = nodes_[node].children.front();
      int best_dist = hamming(d, nodes_[best].centroid);
      for (std::size_t i = 1; i < nodes_[node].children.size(); ++i) {
        const int c = nodes_[node].children[i];
        const int dist = hamming(d, nodes_[c].centroid);
        if (dist < best_dist) {
          best = c;
          best_dist = dist;
        }
      }
      node = best;
    }
    return static_cast<WordId>(nodes_[node].word);
  }

  BowVector transform(const std::vector<Descriptor>& descs) const {
    BowVector v;
    if (descs.empty()) return v;
    for (const auto& d : descs) v[word_of(d)] += 1.0;
    double total = 0.0;
    for (auto it = v.begin(); it != v.end();) {
      it->second = it->second / static_cast<double>(descs.size()) * idf_[it->first];
      if (it->second == 0.0) {
        it = v.erase(it);
      } else {
        total += it->second;
        ++it;
      }
    }
    for (auto& [w, x] : v) x /= total;
    return v;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write vocabulary " + path.string());
    out << "SLAMCHAR-VOCAB 1\n";
    out << "k " << k_ << " depth " << depth_ << " images " << images_ << " nodes " << nodes_.size() << " words "
        << idf_.size() << "\n";
    char buf[64];
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& n = nodes_[i];
      out << "node " << i << ' ' << n.parent << ' ' << n.word << ' ';
      for (auto b : n.centroid.bits) {
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(b));
        out << buf;
      }
      out << '\n';
    }
    for (std::size_t w = 0; w < idf_.size(); ++w) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), idf_[w]);
      out << "idf " << w << ' ' << std::string(buf, end) << '\n';
    }
    if (!out) throw Error("cannot write vocabulary " + path.string());
  }

  static Vocabulary load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read vocabulary " + path.string());
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "SLAMCHAR-VOCAB" || version != 1) throw Error("not a vocabulary file: " + path.string());
    Vocabulary v;
    std::string tag;
    std::size_t n_nodes = 0, n_words = 0;
    in >> tag >> v.k_ >> tag >> v.depth_ >> tag >> v.images_ >> tag >> n_nodes >> tag >> n_words;
    v.nodes_.resize(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
      std::size_t id = 0;
      std::string hex;
      in >> tag >> id >> v.nodes_[i].parent >> v.nodes_[i].word >> hex;
      if (tag != "node" || id != i || hex.size() != 64) throw Error("corrupt vocabulary node in " + path.string());
      for (int b = 0; b < 4; ++b) v.nodes_[i].centroid.bits[b] = std::stoull(hex.substr(b * 16, 16), nullptr, 16);
      if (v.nodes_[i].parent >= 0) v.nodes_[static_cast<std::size_t>(v.nodes_[i].parent)].children.push_back(static_cast<int>(i));
    }
    v.idf_.resize(n_words);
    for (std::size_t w = 0; w < n_words; ++w) {
      std::size_t id = 0;
      std::string num;
      in >> tag >> id >> num;
      if (tag != "idf" || id != w) throw Error("corrupt vocabulary idf table in " + path.string());
      std::from_chars(num.data(), num.data() + num.size(), v.idf_[w]);
    }
    if (!in) throw Error("truncated vocabulary " + path.string());
    return v;
  }

 private:
  static double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

  void grow(int node, const std::vector<Descriptor>& all, const std::vector<std::size_t>& members, int level,
            std::mt19937_64& rng) {
    if (level >= depth_ || members.size() < static_cast<std::size_t>(k_)) return;

    // k-means++ seeding over Hamming distance.
    std::vector<Descriptor> centers;
    centers.push_back(all[members[rng() % members.size()]]);
    std::vector<double> dist2(members.size());
    while (centers.size() < static_cast<std::size_t>(k_)) {
      double total = 0.0;
      for (std::size_t i = 0; i < members.size(); ++i) {
        const double d = hamming(all[members[i]], centers.back());
        dist2[i] = centers.size() == 1 ? d * d : std::min(dist2[i], d * d);
        total += dist2[i];
      }
      if (total == 0.0) break;
      double target = uniform01(rng) * total;
      std::size_t pick = 0;
      for (; pick + 1 < members.size(); ++pick) {
        target -= dist2[pick];
        if (target < 0.0) break;
      }
      centers.push_back(all[members[pick]]);
    }

    std::vector<int> assign(members.size(), -1);
    for (int iter = 0; iter < 20; ++iter) {
      bool changed = false;
      for (std::size_t i = 0; i < members.size(); ++i) {
        int best = 0;
        int best_dist = hamming(all[members[i]], centers[0]);
        for (std::size_t c = 1; c < centers.size(); ++c) {
          const int d = hamming(all[members[i]], centers[c]);
          if (d < best_dist) {
            best = static_cast<int>(c);
            best_dist = d;
          }
        }
        if (assign[i] != best) {
          assign[i] = best;
          changed = true;
        }
      }
      if (!changed) break;
      for (std::size_t c = 0; c < centers.size(); ++c) {
        std::array<std::size_t, 256> ones{};
        std::size_t count = 0;
        for (std::size_t i = 0; i < members.size(); ++i) {
          if (assign[i] != static_cast<int>(c)) continue;
          ++count;
          for (int b = 0; b < 256; ++b) ones[b] += all[members[i]].test(b) ? 1 : 0;
        }
        if (count == 0) continue;
        Descriptor median;
        for (int b = 0; b < 256; ++b) {
          if (2 * ones[b] > count) median.set(b);
        }
        centers[c] = median;
      }
    }

    for (std::size_t c = 0; c < centers.size(); ++c) {
      std::vector<std::size_t> sub;
      for (std::size_t i = 0; i < members.size(); ++i) {
        if (assign[i] == static_cast<int>(c)) sub.push_back(members[i]);
      }
      if (sub.empty()) continue;
      const int child = static_cast<int>(nodes_.size());
      nodes_.push_back(Node{centers[c], node, {}, -1});
      nodes_[static_cast<std::size_t>(node)].children.push_back(child);
      grow(child, all, sub, level + 1, rng);
    }
  }

  int k_ = 0;
  int depth_ = 0;
  std::size_t images_ = 0;
  std::vector<Node> nodes_;
  std::vector<double> idf_;
};

// ---------------------------------------------------------------------------
// Scoring and retrieval
// ---------------------------------------------------------------------------

/// L1 score 1 - |v1 - v2|_1 / 2. Zero when either vector is empty or no word is shared.
inline double bow_score(const BowVector& a, const BowVector& b) {
  if (a.empty() || b.empty()) return 0.0;
  double l1 = 0.0;
  bool shared = false;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      l1 += std::abs(ia->second);
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      l1 += std::abs(ib->second);
      ++ib;
    } else {
      l1 += std::abs(ia->second - ib->second);
      shared = true;
      ++ia;
      ++ib;
    }
  }
  return shared ? std::clamp(1.0 - 0.5 * l1, 0.0, 1.0) : 0.0;
}

struct SimilarityReport {
  std::vector<double> score;          // LC_S per frame; NaN when no frame is min_gap away
  std::vector<std::size_t> distance;  // LC_D per frame, in frames
  std::size_t count_ge_100 = 0;
  std::size_t count_ge_090 = 0;
  std::size_t count_ge_050 = 0;
  double loop_opportunity_pct = 0.0;  // frames whose best score reaches 0.3
  std::size_t min_gap = 1;
};

inline constexpr double kLoopClosureScore = 0.3;

/// For every frame, the best-scoring other frame at least min_gap frames away.
/// Ties go to the temporally nearer frame, then to the earlier one. Frames that
/// share no word score exactly zero, so only inverted-index candidates are scored.
inline std::optional<SimilarityReport> closest_match(const std::vector<BowVector>& seq, std::size_t min_gap) {
  if (min_gap < 1) throw Error("min gap must be at least 1");
  const std::size_t n = seq.size();
  if (n < 2 || n < min_gap + 1) return std::nullopt;

  std::map<WordId, std::vector<std::size_t>> inverted;
  for (std::size_t j = 0; j < n; ++j) {
    for (const auto& [w, x] : seq[j]) inverted[w].push_back(j);
  }

  SimilarityReport r;
  r.min_gap = min_gap;
  r.score.resize(n);
  r.distance.resize(n);
  std::vector<std::size_t> stamp(n, n);
  std::size_t loops = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < min_gap && i + min_gap >= n) {
      // no admissible partner
      r.score[i] = std::numeric_limits<double>::quiet_NaN();
      r.distance[i] = 0;
      continue;
    }
    // Zero-score baseline: the nearest admissible frame, earlier side first.
    std::size_t best_j = i >= min_gap ? i - min_gap : i + min_gap;
    double best_s = 0.0;
    auto better = [&](std::size_t j, double s) {
      const std::size_t dj = j > i ? j - i : i - j;
      const std::size_t db = best_j > i ? best_j - i : i - best_j;
      if (s != best_s) return s > best_s;
      if (dj != db) return dj < db;
      return j < best_j;
    };
    for (const auto& [w, x] : seq[i]) {
      for (std::size_t j : inverted[w]) {
        if (stamp[j] == i) continue;
        stamp[j] = i;
        const std::size_t dj = j > i ? j - i : i - j;
        if (dj < min_gap) continue;
        const double s = bow_score(seq[i], seq[j]);
        if (better(j, s)) {
          best_j = j;
          best_s = s;
        }
      }
    }
    r.score[i] = best_s;
    r.distance[i] = best_j > i ? best_j - i : i - best_j;
    r.count_ge_100 += best_s >= 1.0 ? 1 : 0;
    r.count_ge_090 += best_s >= 0.9 ? 1 : 0;
    r.count_ge_050 += best_s >= 0.5 ? 1 : 0;
    loops += best_s >= kLoopClosureScore ? 1 : 0;
  }
  std::size_t scored = 0;
  for (double s : r.score) scored += std::isnan(s) ? 0 : 1;
  r.loop_opportunity_pct = scored ? 100.0 * static_cast<double>(loops) / static_cast<double>(scored) : 0.0;
  return r;
}

/// Detector + descriptor front end used to turn a frame into a BoW vector.
struct DescriptorExtractor {
  features::DetectorConfig detector;
  BriefPattern pattern;
  double smoothing_sigma = 2.0;

  std::vector<Descriptor> extract(const Gray8& img) const {
    const auto kps = features::detect_orb_style(img, detector);
    const Gray8 smooth = quantize(gaussian_blur(to_real(img), smoothing_sigma));
    return describe(smooth, kps, pattern);
  }
};

}  // namespace slamchar::similarity
