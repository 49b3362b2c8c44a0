#pragma once

// Local features, their on-disk formats, and the two reduction criteria that
// run before word assignment (scale and random feature removal).

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace bof {

struct Keypoint {
  float x = 0.0f;
  float y = 0.0f;
  float scale = 1.0f;        // detector scale, > 0
  float orientation = 0.0f;  // radians
  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

struct LocalFeature {
  Keypoint keypoint;
  std::vector<float> descriptor;
};

/// Features of one image. Descriptors are stored contiguously, row-major,
/// `dimensionality()` floats per feature, in insertion order.
class FeatureSet {
 public:
  FeatureSet() = default;
  FeatureSet(std::string image_id, std::uint32_t dimensionality);

  /// Throws DataError on a descriptor of the wrong length or a non-positive
  /// scale.
  void add(const Keypoint& keypoint, std::span<const float> descriptor);
  void add(const LocalFeature& feature) { add(feature.keypoint, feature.descriptor); }
  void reserve(std::size_t count);

  const std::string& image_id() const { return image_id_; }
  void set_image_id(std::string id) { image_id_ = std::move(id); }
  std::uint32_t dimensionality() const { return dim_; }
  std::size_t size() const { return keypoints_.size(); }
  bool empty() const { return keypoints_.empty(); }

  const Keypoint& keypoint(std::size_t i) const { return keypoints_[i]; }
  std::span<const float> descriptor(std::size_t i) const {
    return {descriptors_.data() + i * dim_, dim_};
  }
  LocalFeature feature(std::size_t i) const;
  std::span<const Keypoint> keypoints() const { return keypoints_; }
  std::span<const float> descriptors() const { return descriptors_; }

  /// Features at the given ascending positions, order preserved.
  FeatureSet subset(std::span<const std::size_t> positions) const;

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

 private:
  std::string image_id_;
  std::uint32_t dim_ = 0;
  std::vector<Keypoint> keypoints_;
  std::vector<float> descriptors_;
};

/// How much of an image to keep: a fraction p in (0, 1] or an absolute count.
class RetentionSpec {
 public:
  static RetentionSpec fraction(double p);
  static RetentionSpec absolute(std::uint64_t count);

  bool is_fraction() const { return is_fraction_; }
  double value() const { return value_; }

  /// ceil(p * m) in fraction mode, min(count, m) in absolute mode.
  /// Products within 1e-9 above an integer are snapped down to it, so
  /// p = 0.07, m = 100 keeps 7 rather than 8.
  std::size_t keep_count(std::size_t m) const;

 private:
  RetentionSpec(bool is_fraction, double value) : is_fraction_(is_fraction), value_(value) {}
  bool is_fraction_ = true;
  double value_ = 1.0;
};

// Binary feature file ("BOFF"): little-endian header
//   magic "BOFF" | version u32 = 1 | dimensionality u32 | count u64
// (20 bytes), then per feature x, y, scale, orientation, descriptor[D], all
// f32. The image id is not stored; loaders take it from the file stem or the
// manifest.
inline constexpr std::size_t kFeatureHeaderBytes = 20;

FeatureSet load_features(const std::filesystem::path& path);
void save_features(const FeatureSet& fs, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_features(const FeatureSet& fs);
FeatureSet decode_features(std::span<const std::uint8_t> bytes, const std::string& source);

// Text form: header line "BOFT 1 <D> <count>", then one feature per line
// "x y scale orientation d1 .. dD" with shortest round-trip float formatting.
FeatureSet load_features_text(const std::filesystem::path& path);
void save_features_text(const FeatureSet& fs, const std::filesystem::path& path);

/// Keeps the features with the largest scale. Ties on scale go to the
/// earlier feature; survivors stay in their original order.
FeatureSet prune_by_scale(const FeatureSet& fs, const RetentionSpec& keep);

/// Keeps a uniform random subset (sample_indices with Rng(seed)); survivors
/// stay in their original order.
FeatureSet prune_random_features(const FeatureSet& fs, const RetentionSpec& keep,
                                 std::uint64_t seed);

// Corpus manifest: one "image_id<TAB>feature_file_path" per line. Relative
// paths are resolved against the manifest's directory.
struct ManifestEntry {
  std::string image_id;
  std::filesystem::path path;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path);

/// Loads every feature file named in a manifest, image ids from the manifest.
std::vector<FeatureSet> load_corpus(const std::filesystem::path& manifest);

// Label file: one "image_id<TAB>class_label" per line.
using LabelMap = std::map<std::string, std::string>;

LabelMap read_labels(const std::filesystem::path& path);
void write_labels(const LabelMap& labels, const std::filesystem::path& path);

}  // namespace bof
