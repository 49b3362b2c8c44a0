#include "bof/featureio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bof/errors.hpp"
#include "bof/rng.hpp"
#include "detail/io.hpp"

namespace bof {

namespace {

constexpr std::uint32_t kFormatVersion = 1;

std::uint64_t record_bytes(std::uint32_t dim) { return 16 + 4ull * dim; }

}  // namespace

FeatureSet::FeatureSet(std::string image_id, std::uint32_t dimensionality)
    : image_id_(std::move(image_id)), dim_(dimensionality) {
  if (dim_ == 0) throw DataError("feature dimensionality must be positive");
}

void FeatureSet::add(const Keypoint& keypoint, std::span<const float> descriptor) {
  if (descriptor.size() != dim_)
    throw DataError("descriptor length " + std::to_string(descriptor.size()) +
                    " does not match dimensionality " + std::to_string(dim_));
  if (!(keypoint.scale > 0.0f)) throw DataError("feature scale must be positive");
  keypoints_.push_back(keypoint);
  descriptors_.insert(descriptors_.end(), descriptor.begin(), descriptor.end());
}

void FeatureSet::reserve(std::size_t count) {
  keypoints_.reserve(count);
  descriptors_.reserve(count * dim_);
}

LocalFeature FeatureSet::feature(std::size_t i) const {
  const auto d = descriptor(i);
  return {keypoints_[i], std::vector<float>(d.begin(), d.end())};
}

FeatureSet FeatureSet::subset(std::span<const std::size_t> positions) const {
  FeatureSet out;
  out.image_id_ = image_id_;
  out.dim_ = dim_;
  out.reserve(positions.size());
  for (std::size_t p : positions) {
    out.keypoints_.push_back(keypoints_[p]);
    const auto d = descriptor(p);
    out.descriptors_.insert(out.descriptors_.end(), d.begin(), d.end());
  }
  return out;
}

RetentionSpec RetentionSpec::fraction(double p) {
  if (!(p > 0.0 && p <= 1.0))
    throw ConfigError("retention fraction must be in (0, 1], got " + std::to_string(p));
  return RetentionSpec(true, p);
}

RetentionSpec RetentionSpec::absolute(std::uint64_t count) {
  if (count < 1) throw ConfigError("absolute retention must be at least 1");
  return RetentionSpec(false, static_cast<double>(count));
}

std::size_t RetentionSpec::keep_count(std::size_t m) const {
  if (!is_fraction_) return std::min<std::size_t>(static_cast<std::size_t>(value_), m);
  const double product = value_ * static_cast<double>(m);
  const double floor = std::floor(product);
  if (product - floor <= 1e-9) return std::min(static_cast<std::size_t>(floor), m);
  return std::min(static_cast<std::size_t>(floor) + 1, m);
}

std::vector<std::uint8_t> encode_features(const FeatureSet& fs) {
  detail::ByteWriter w;
  w.bytes().reserve(kFeatureHeaderBytes + fs.size() * record_bytes(fs.dimensionality()));
  w.magic("BOFF");
  w.u32(kFormatVersion);
  w.u32(fs.dimensionality());
  w.u64(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const Keypoint& k = fs.keypoint(i);
    w.f32(k.x);
    w.f32(k.y);
    w.f32(k.scale);
    w.f32(k.orientation);
    for (float v : fs.descriptor(i)) w.f32(v);
  }
  return std::move(w.bytes());
}

FeatureSet decode_features(std::span<const std::uint8_t> bytes, const std::string& source) {
  detail::ByteReader r(bytes, source);
  r.expect_magic("BOFF");
  const std::uint64_t version_at = r.offset();
  if (r.u32() != kFormatVersion) r.fail(version_at, "unsupported version");
  const std::uint64_t dim_at = r.offset();
  const std::uint32_t dim = r.u32();
  if (dim == 0) r.fail(dim_at, "dimensionality 0");
  const std::uint64_t count = r.u64();

  const std::uint64_t rec = record_bytes(dim);
  FeatureSet fs(std::filesystem::path(source).stem().string(), dim);
  if (count <= r.remaining() / rec) fs.reserve(count);
  std::vector<float> desc(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t at = kFeatureHeaderBytes + i * rec;
    if (r.remaining() < rec)
      r.fail(at, "truncated payload: feature " + std::to_string(i) + " of " + std::to_string(count));
    Keypoint k;
    k.x = r.f32();
    k.y = r.f32();
    const std::uint64_t scale_at = r.offset();
    k.scale = r.f32();
    k.orientation = r.f32();
    for (auto& v : desc) v = r.f32();
    if (!(k.scale > 0.0f)) r.fail(scale_at, "non-positive scale");
    fs.add(k, desc);
  }
  if (r.remaining() != 0) r.fail(r.offset(), "trailing bytes after last feature");
  return fs;
}

FeatureSet load_features(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return decode_features(bytes, path.string());
}

void save_features(const FeatureSet& fs, const std::filesystem::path& path) {
  detail::write_file(path, encode_features(fs));
}

FeatureSet load_features_text(const std::filesystem::path& path) {
  const std::string text = detail::read_text(path);
  const auto lines = detail::split_lines(text);
  const std::string source = path.string();
  if (lines.empty()) throw FormatError(source, 0, "empty file");

  const auto header = detail::split_ws(lines[0].text);
  std::uint32_t version = 0, dim = 0;
  std::uint64_t count = 0;
  if (header.size() != 4 || header[0] != "BOFT" || !detail::parse_number(header[1], version) ||
      !detail::parse_number(header[2], dim) || !detail::parse_number(header[3], count))
    throw FormatError(source, 0, "malformed header, expected \"BOFT 1 D count\"");
  if (version != kFormatVersion) throw FormatError(source, 0, "unsupported version");
  if (dim == 0) throw FormatError(source, 0, "dimensionality 0");
  if (lines.size() - 1 != count)
    throw FormatError(source, text.size(),
                      "declared " + std::to_string(count) + " features, found " +
                          std::to_string(lines.size() - 1));

  FeatureSet fs(path.stem().string(), dim);
  std::vector<float> desc(dim);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = detail::split_ws(lines[i].text);
    if (fields.size() != 4 + dim)
      throw FormatError(source, lines[i].offset, "expected " + std::to_string(4 + dim) + " fields");
    float head[4];
    bool ok = true;
    for (int j = 0; j < 4; ++j) ok = ok && detail::parse_number(fields[j], head[j]);
    for (std::uint32_t j = 0; j < dim; ++j) ok = ok && detail::parse_number(fields[4 + j], desc[j]);
    if (!ok) throw FormatError(source, lines[i].offset, "unparsable number");
    if (!(head[2] > 0.0f)) throw FormatError(source, lines[i].offset, "non-positive scale");
    fs.add(Keypoint{head[0], head[1], head[2], head[3]}, desc);
  }
  return fs;
}

void save_features_text(const FeatureSet& fs, const std::filesystem::path& path) {
  std::string out = "BOFT 1 " + std::to_string(fs.dimensionality()) + " " + std::to_string(fs.size()) + "\n";
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const Keypoint& k = fs.keypoint(i);
    for (float v : {k.x, k.y, k.scale, k.orientation}) {
      detail::append_number(out, v);
      out += ' ';
    }
    const auto d = fs.descriptor(i);
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (j) out += ' ';
      detail::append_number(out, d[j]);
    }
    out += '\n';
  }
  detail::write_text(path, out);
}

FeatureSet prune_by_scale(const FeatureSet& fs, const RetentionSpec& keep) {
  const std::size_t m = fs.size();
  const std::size_t n = keep.keep_count(m);
  if (n == m) return fs;
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Total order: scale descending, then position ascending.
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      const float sa = fs.keypoint(a).scale, sb = fs.keypoint(b).scale;
                      return sa != sb ? sa > sb : a < b;
                    });
  order.resize(n);
  std::sort(order.begin(), order.end());
  return fs.subset(order);
}

FeatureSet prune_random_features(const FeatureSet& fs, const RetentionSpec& keep, std::uint64_t seed) {
  const std::size_t n = keep.keep_count(fs.size());
  if (n == fs.size()) return fs;
  Rng rng(seed);
  const auto picked = sample_indices(fs.size(), n, rng);
  return fs.subset(picked);
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  const std::string text = detail::read_text(path);
  const auto base = path.parent_path();
  std::vector<ManifestEntry> entries;
  for (const auto& line : detail::split_lines(text)) {
    if (line.text.empty() || line.text.front() == '#') continue;
    const auto parts = detail::split(line.text, '\t');
    if (parts.size() != 2 || parts[0].empty() || parts[1].empty())
      throw FormatError(path.string(), line.offset, "expected image_id<TAB>path");
    std::filesystem::path p(parts[1]);
    if (p.is_relative()) p = base / p;
    entries.push_back({std::string(parts[0]), p});
  }
  return entries;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path) {
  std::string out;
  for (const auto& e : entries) out += e.image_id + "\t" + e.path.string() + "\n";
  detail::write_text(path, out);
}

std::vector<FeatureSet> load_corpus(const std::filesystem::path& manifest) {
  std::vector<FeatureSet> corpus;
  for (const auto& e : read_manifest(manifest)) {
    FeatureSet fs = load_features(e.path);
    fs.set_image_id(e.image_id);
    corpus.push_back(std::move(fs));
  }
  return corpus;
}

LabelMap read_labels(const std::filesystem::path& path) {
  const std::string text = detail::read_text(path);
  LabelMap labels;
  for (const auto& line : detail::split_lines(text)) {
    if (line.text.empty() || line.text.front() == '#') continue;
    const auto parts = detail::split(line.text, '\t');
    if (parts.size() != 2 || parts[0].empty())
      throw FormatError(path.string(), line.offset, "expected image_id<TAB>class_label");
    if (!labels.emplace(std::string(parts[0]), std::string(parts[1])).second)
      throw FormatError(path.string(), line.offset, "duplicate image id " + std::string(parts[0]));
  }
  return labels;
}

void write_labels(const LabelMap& labels, const std::filesystem::path& path) {
  std::string out;
  for (const auto& [id, label] : labels) out += id + "\t" + label + "\n";
  detail::write_text(path, out);
}

}  // namespace bof
