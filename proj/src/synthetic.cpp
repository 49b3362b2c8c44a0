#include "bof/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "bof/errors.hpp"
#include "bof/rng.hpp"

namespace bof {

namespace {

void validate(const SyntheticConfig& cfg) {
  if (cfg.num_classes == 0) throw ConfigError("synthetic corpus needs at least one class");
  if (cfg.images_per_class == 0) throw ConfigError("images_per_class must be positive");
  if (cfg.train_per_class == 0 || cfg.train_per_class > cfg.images_per_class)
    throw ConfigError("train_per_class must be in [1, images_per_class]");
  if (cfg.features_per_image == 0) throw ConfigError("features_per_image must be positive");
  if (cfg.dimensionality == 0) throw ConfigError("dimensionality must be positive");
  if (cfg.clusters_per_class == 0) throw ConfigError("clusters_per_class must be positive");
  if (!(cfg.noise_fraction >= 0.0 && cfg.noise_fraction <= 1.0))
    throw ConfigError("noise_fraction must be in [0, 1]");
  if (!(cfg.jitter_sigma >= 0.0)) throw ConfigError("jitter_sigma must be non-negative");
  if (!(cfg.descriptor_range > 0.0)) throw ConfigError("descriptor_range must be positive");
  for (const ScaleRange& r : {cfg.planted_scale, cfg.noise_scale})
    if (!(r.lo > 0.0f && r.hi >= r.lo)) throw ConfigError("scale ranges must satisfy 0 < lo <= hi");
}

std::string image_name(std::uint32_t cls, std::uint32_t img) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "c%03u_i%04u", cls, img);
  return buf;
}

std::string class_name(std::uint32_t cls) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "class%03u", cls);
  return buf;
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  const std::uint32_t dim = cfg.dimensionality;
  SyntheticCorpus out;

  const std::size_t num_centers = std::size_t{cfg.num_classes} * cfg.clusters_per_class;
  out.centers.resize(num_centers, std::vector<float>(dim));
  for (auto& c : out.centers)
    for (auto& v : c) v = static_cast<float>(rng.uniform(0.0, cfg.descriptor_range));

  const auto planted = static_cast<std::uint32_t>(
      std::lround((1.0 - cfg.noise_fraction) * cfg.features_per_image));
  std::vector<LocalFeature> feats(cfg.features_per_image);
  for (auto& f : feats) f.descriptor.resize(dim);

  for (std::uint32_t cls = 0; cls < cfg.num_classes; ++cls) {
    for (std::uint32_t img = 0; img < cfg.images_per_class; ++img) {
      for (std::uint32_t i = 0; i < cfg.features_per_image; ++i) {
        LocalFeature& f = feats[i];
        f.keypoint.x = static_cast<float>(rng.uniform(0.0, 500.0));
        f.keypoint.y = static_cast<float>(rng.uniform(0.0, 500.0));
        f.keypoint.orientation = static_cast<float>(rng.uniform(-std::numbers::pi, std::numbers::pi));
        if (i < planted) {
          const auto& center =
              out.centers[cls * cfg.clusters_per_class + rng.uniform_below(cfg.clusters_per_class)];
          for (std::uint32_t d = 0; d < dim; ++d)
            f.descriptor[d] = static_cast<float>(center[d] + cfg.jitter_sigma * rng.normal());
          f.keypoint.scale = static_cast<float>(rng.uniform(cfg.planted_scale.lo, cfg.planted_scale.hi));
        } else {
          for (auto& v : f.descriptor) v = static_cast<float>(rng.uniform(0.0, cfg.descriptor_range));
          f.keypoint.scale = static_cast<float>(rng.uniform(cfg.noise_scale.lo, cfg.noise_scale.hi));
        }
      }
      // Shuffle so planted and noise features interleave.
      for (std::size_t i = feats.size(); i > 1; --i)
        std::swap(feats[i - 1], feats[rng.uniform_below(i)]);

      FeatureSet fs(image_name(cls, img), dim);
      fs.reserve(feats.size());
      for (const auto& f : feats) fs.add(f);
      out.labels.emplace(fs.image_id(), class_name(cls));
      (img < cfg.train_per_class ? out.dataset : out.queries).push_back(std::move(fs));
    }
  }

  for (const auto& q : out.queries) {
    RetrievalGroundTruth gt;
    gt.query_id = q.image_id();
    const std::string& cls = out.labels.at(q.image_id());
    for (const auto& d : out.dataset)
      if (out.labels.at(d.image_id()) == cls) gt.positives.insert(d.image_id());
    out.ground_truth.push_back(std::move(gt));
  }
  return out;
}

}  // namespace bof
