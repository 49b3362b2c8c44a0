#pragma once

// Visual-word codebook: k-means construction and hard assignment.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "bof/bow.hpp"
#include "bof/featureio.hpp"

namespace bof {

class Vocabulary {
 public:
  Vocabulary() = default;
  /// `centroids` holds K * dimensionality floats, row-major by word id.
  /// Throws DataError if K or the dimensionality would be 0.
  Vocabulary(std::uint32_t dimensionality, std::vector<float> centroids);

  std::uint32_t size() const { return k_; }
  std::uint32_t dimensionality() const { return dim_; }
  std::span<const float> centroid(WordId w) const { return {centroids_.data() + std::size_t{w} * dim_, dim_}; }
  std::span<const float> data() const { return centroids_; }

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  std::uint32_t k_ = 0;
  std::uint32_t dim_ = 0;
  std::vector<float> centroids_;
};

struct KMeansConfig {
  std::uint32_t k = 1000;
  std::uint32_t max_iterations = 100;
  double tolerance = 1e-4;  // stop when relative inertia improvement drops below
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> sample_cap;  // uniform subsample of descriptors
  std::uint32_t restarts = 1;  // independent k-means++ runs; lowest inertia wins
};

struct KMeansRun {
  std::vector<double> inertia;  // after seeding, then after each accepted iteration
  bool converged = false;
};

struct KMeansResult {
  Vocabulary vocabulary;
  double inertia = 0.0;
  std::size_t sample_size = 0;
  std::size_t best_run = 0;
  std::vector<KMeansRun> runs;
};

/// Lloyd's algorithm with k-means++ seeding on `n` row-major points.
///
/// Each restart r seeds from Rng(mix64(seed + r)). An iteration recomputes
/// means, reseeds empty clusters at the points farthest from their current
/// centroid, and reassigns. It stops after max_iterations, when assignments
/// stop changing, when the relative improvement falls below the tolerance,
/// or when float rounding of the centroids would increase inertia (that
/// update is discarded). Recorded inertia is therefore non-increasing.
KMeansResult kmeans(std::span<const float> points, std::uint32_t dimensionality, const KMeansConfig& cfg);

/// Clusters the descriptors of `corpus`. With a sample cap the descriptors
/// are first subsampled uniformly with Rng(seed).
KMeansResult build_vocabulary_traced(std::span<const FeatureSet> corpus, const KMeansConfig& cfg);
Vocabulary build_vocabulary(std::span<const FeatureSet> corpus, const KMeansConfig& cfg);

/// Nearest centroid by Euclidean distance, lowest id on ties.
WordId nearest_word(std::span<const float> descriptor, const Vocabulary& vocab);

BagOfWords assign_words(const FeatureSet& fs, const Vocabulary& vocab);
std::vector<BagOfWords> assign_corpus(std::span<const FeatureSet> corpus, const Vocabulary& vocab);

// Vocabulary file ("BOFV"): little-endian magic | version u32 = 1 | K u32 |
// D u32, then K * D f32 row-major by word id.
inline constexpr std::size_t kVocabularyHeaderBytes = 16;

Vocabulary load_vocabulary(const std::filesystem::path& path);
void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_vocabulary(const Vocabulary& vocab);
Vocabulary decode_vocabulary(std::span<const std::uint8_t> bytes, const std::string& source);

}  // namespace bof
