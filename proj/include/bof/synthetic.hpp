#pragma once

// Planted synthetic corpora standing in for real landmark datasets.
//
// Each class owns `clusters_per_class` descriptor centers drawn uniformly in
// [0, descriptor_range)^D. An image draws round((1 - noise_fraction) * n)
// "planted" features around its class's centers (Gaussian jitter) and the
// rest uniformly at random ("noise"). Planted features get scales from
// planted_scale, noise features from noise_scale; overlapping ranges give
// imperfect scale signal. Feature order within an image is shuffled.
//
// The first `train_per_class` images of each class form the dataset, the
// rest the queries. Retrieval ground truth for a query is the dataset
// images of its class.

#include <cstdint>
#include <vector>

#include "bof/featureio.hpp"
#include "bof/ground_truth.hpp"

namespace bof {

struct ScaleRange {
  float lo = 1.0f;
  float hi = 2.0f;
};

struct SyntheticConfig {
  std::uint32_t num_classes = 12;
  std::uint32_t images_per_class = 20;
  std::uint32_t train_per_class = 4;
  std::uint32_t features_per_image = 100;
  std::uint32_t dimensionality = 128;
  std::uint32_t clusters_per_class = 10;
  double noise_fraction = 0.0;
  double jitter_sigma = 4.0;
  double descriptor_range = 256.0;
  ScaleRange planted_scale{2.0f, 8.0f};
  ScaleRange noise_scale{1.0f, 3.0f};
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  std::vector<FeatureSet> dataset;
  std::vector<FeatureSet> queries;
  LabelMap labels;  // every image, dataset and queries
  std::vector<RetrievalGroundTruth> ground_truth;  // one per query
  std::vector<std::vector<float>> centers;  // class c owns [c*clusters, (c+1)*clusters)
};

/// Throws ConfigError on zero classes/images/features/dimensions, a train
/// split outside [1, images_per_class], or a noise fraction outside [0, 1].
SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& cfg);

}  // namespace bof
