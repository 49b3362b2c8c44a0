#pragma once

// Generators and independent oracles shared by the unit and acceptance
// suites. Nothing here calls the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "bof/bow.hpp"
#include "bof/featureio.hpp"
#include "bof/index.hpp"

namespace bof::testing {

// Test-side randomness; independent of bof::Rng on purpose.
using Gen = std::mt19937_64;

inline std::uint64_t pick(Gen& g, std::uint64_t lo, std::uint64_t hi) {
  return std::uniform_int_distribution<std::uint64_t>(lo, hi)(g);
}

inline double real(Gen& g, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); }

inline std::string id_for(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "img%05zu", i);
  return buf;
}

inline FeatureSet random_feature_set(Gen& g, std::size_t count, std::uint32_t dim, const std::string& id = "img") {
  FeatureSet fs(id, dim);
  std::vector<float> d(dim);
  for (std::size_t i = 0; i < count; ++i) {
    for (auto& v : d) v = static_cast<float>(real(g, -100.0, 100.0));
    Keypoint k{static_cast<float>(real(g, 0, 500)), static_cast<float>(real(g, 0, 500)),
               static_cast<float>(pick(g, 1, 8)) * 0.5f,  // coarse scales produce ties
               static_cast<float>(real(g, -3.14, 3.14))};
    fs.add(k, d);
  }
  return fs;
}

// Bag with `distinct` words from [0, vocab) and tf in [1, max_tf].
inline BagOfWords random_bag(Gen& g, std::size_t distinct, std::uint32_t vocab, std::uint32_t max_tf,
                             const std::string& id = "img") {
  std::vector<WordId> words;
  while (words.size() < std::min<std::size_t>(distinct, vocab)) {
    const auto w = static_cast<WordId>(pick(g, 0, vocab - 1));
    if (std::find(words.begin(), words.end(), w) == words.end()) words.push_back(w);
  }
  std::sort(words.begin(), words.end());
  std::vector<WordCount> entries;
  for (WordId w : words) entries.push_back({w, static_cast<std::uint32_t>(pick(g, 1, max_tf))});
  return BagOfWords::from_entries(id, entries);
}

// Corpus whose word popularity is skewed so that posting lists overlap.
inline std::vector<BagOfWords> random_corpus(Gen& g, std::size_t docs, std::uint32_t vocab, std::size_t max_tokens) {
  std::vector<BagOfWords> corpus;
  for (std::size_t d = 0; d < docs; ++d) {
    const std::size_t tokens = pick(g, 0, max_tokens);
    std::vector<WordId> stream;
    for (std::size_t t = 0; t < tokens; ++t) {
      const double u = real(g, 0.0, 1.0);
      stream.push_back(static_cast<WordId>(std::min<double>(vocab - 1, std::floor(vocab * u * u * u))));
    }
    corpus.push_back(BagOfWords::from_tokens(id_for(d), stream));
  }
  return corpus;
}

// Brute-force k-means: Forgy initialisation (k distinct random points),
// plain double-precision Lloyd iterations to a fixed point, best of
// `restarts`.
inline double lloyd_oracle_inertia(const std::vector<std::vector<double>>& pts, std::size_t k, int restarts,
                                   std::uint64_t seed) {
  Gen g(seed);
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = pts.size(), dim = pts[0].size();
  auto d2 = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < dim; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
  };
  for (int r = 0; r < restarts; ++r) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), g);
    std::vector<std::vector<double>> c;
    for (std::size_t j = 0; j < k; ++j) c.push_back(pts[idx[j]]);
    std::vector<std::size_t> label(n, k);
    for (int it = 0; it < 1000; ++it) {
      bool changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t bj = 0;
        for (std::size_t j = 1; j < k; ++j)
          if (d2(pts[i], c[j]) < d2(pts[i], c[bj])) bj = j;
        if (bj != label[i]) changed = true;
        label[i] = bj;
      }
      if (!changed) break;
      for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> sum(dim, 0.0);
        std::size_t cnt = 0;
        for (std::size_t i = 0; i < n; ++i)
          if (label[i] == j) {
            for (std::size_t t = 0; t < dim; ++t) sum[t] += pts[i][t];
            ++cnt;
          }
        if (cnt)
          for (std::size_t t = 0; t < dim; ++t) c[j][t] = sum[t] / cnt;
      }
    }
    double inertia = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) m = std::min(m, d2(pts[i], c[j]));
      inertia += m;
    }
    best = std::min(best, inertia);
  }
  return best;
}

// Exhaustive argmin with long double distances; lowest id on ties.
inline std::uint32_t nearest_oracle(std::span<const float> x, std::span<const float> centroids, std::uint32_t dim) {
  const std::size_t k = centroids.size() / dim;
  std::uint32_t best = 0;
  long double best_d = std::numeric_limits<long double>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    long double s = 0;
    for (std::uint32_t i = 0; i < dim; ++i) {
      const long double diff = static_cast<long double>(x[i]) - centroids[c * dim + i];
      s += diff * diff;
    }
    if (s < best_d) {
      best_d = s;
      best = static_cast<std::uint32_t>(c);
    }
  }
  return best;
}

// Score-closed subsets by enumeration: the smallest set S (fewest tokens,
// then fewest words) that contains every entry ranked above any member and
// reaches the budget. `closed_under_ties` additionally requires S to hold
// every entry whose score equals a member's.
inline std::vector<WordId> prune_oracle(std::span<const WordCount> entries, std::span<const double> scores,
                                        std::uint64_t budget, bool closed_under_ties) {
  const std::size_t n = entries.size();
  // rank_above(a, b): a precedes b in score-desc, word-asc order.
  auto above = [&](std::size_t a, std::size_t b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : entries[a].word < entries[b].word;
  };
  std::uint64_t best_tokens = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t best_mask = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    bool ok = true;
    std::uint64_t tokens = 0;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(mask >> i & 1)) continue;
      tokens += entries[i].tf;
      for (std::size_t j = 0; j < n && ok; ++j) {
        if (mask >> j & 1) continue;
        if (above(j, i)) ok = false;
        if (closed_under_ties && scores[j] == scores[i]) ok = false;
      }
    }
    if (!ok || tokens < budget) continue;
    if (tokens < best_tokens) {
      best_tokens = tokens;
      best_mask = mask;
    }
  }
  std::vector<WordId> kept;
  for (std::size_t i = 0; i < n; ++i)
    if (best_mask >> i & 1) kept.push_back(entries[i].word);
  return kept;
}

inline std::vector<WordId> words_of(const BagOfWords& bow) {
  std::vector<WordId> w;
  for (const auto& e : bow.entries()) w.push_back(e.word);
  return w;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() / ("bof_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::filesystem::path operator/(const std::string& f) const { return path / f; }
};

}  // namespace bof::testing
