#include "bof/vocabulary.hpp"

#include <algorithm>
#include <limits>

#include "bof/errors.hpp"
#include "bof/kernels.hpp"
#include "bof/rng.hpp"
#include "detail/io.hpp"

namespace bof {

namespace {

constexpr std::uint32_t kFormatVersion = 1;

struct Nearest {
  std::uint32_t index;
  double distance;
};

double dist(const float* a, const float* b, std::uint32_t dim) {
  static const kernels::SquaredL2Fn fn = kernels::squared_l2_for(kernels::active_level());
  return fn(a, b, dim);
}

Nearest nearest_centroid(const float* point, std::span<const float> centroids, std::uint32_t k,
                         std::uint32_t dim) {
  Nearest best{0, dist(point, centroids.data(), dim)};
  for (std::uint32_t c = 1; c < k; ++c) {
    const double d = dist(point, centroids.data() + std::size_t{c} * dim, dim);
    if (d < best.distance) best = {c, d};
  }
  return best;
}

class Lloyd {
 public:
  Lloyd(std::span<const float> points, std::size_t n, std::uint32_t dim, std::uint32_t k)
      : points_(points), n_(n), dim_(dim), k_(k), labels_(n), dists_(n) {}

  const float* point(std::size_t i) const { return points_.data() + i * dim_; }

  std::vector<float> seed_plus_plus(Rng& rng) const {
    std::vector<float> centroids;
    centroids.reserve(std::size_t{k_} * dim_);
    std::vector<bool> chosen(n_, false);
    auto take = [&](std::size_t i) {
      chosen[i] = true;
      centroids.insert(centroids.end(), point(i), point(i) + dim_);
    };
    take(static_cast<std::size_t>(rng.uniform_below(n_)));
    std::vector<double> mind(n_);
    for (std::size_t i = 0; i < n_; ++i)
      mind[i] = dist(point(i), centroids.data(), dim_);

    for (std::uint32_t c = 1; c < k_; ++c) {
      double total = 0.0;
      for (double d : mind) total += d;
      std::size_t pick = n_;
      if (total > 0.0) {
        const double target = rng.uniform01() * total;
        double cum = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
          if (mind[i] <= 0.0) continue;
          cum += mind[i];
          pick = i;
          if (cum > target) break;
        }
      } else {
        // Every point coincides with a center: take the first unused one.
        pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
      }
      take(pick);
      const float* center = centroids.data() + std::size_t{c} * dim_;
      for (std::size_t i = 0; i < n_; ++i)
        mind[i] = std::min(mind[i], dist(point(i), center, dim_));
    }
    return centroids;
  }

  // Returns (inertia, number of labels changed).
  std::pair<double, std::size_t> assign(std::span<const float> centroids) {
    double inertia = 0.0;
    std::size_t changed = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      const Nearest nn = nearest_centroid(point(i), centroids, k_, dim_);
      if (nn.index != labels_[i]) ++changed;
      labels_[i] = nn.index;
      dists_[i] = nn.distance;
      inertia += nn.distance;
    }
    return {inertia, changed};
  }

  std::vector<float> update() const {
    std::vector<double> sums(std::size_t{k_} * dim_, 0.0);
    std::vector<std::size_t> counts(k_, 0);
    for (std::size_t i = 0; i < n_; ++i) {
      double* s = sums.data() + std::size_t{labels_[i]} * dim_;
      const float* p = point(i);
      for (std::uint32_t d = 0; d < dim_; ++d) s[d] += p[d];
      ++counts[labels_[i]];
    }
    std::vector<float> centroids(sums.size());
    std::vector<double> spare = dists_;
    for (std::uint32_t c = 0; c < k_; ++c) {
      float* out = centroids.data() + std::size_t{c} * dim_;
      if (counts[c] > 0) {
        const double* s = sums.data() + std::size_t{c} * dim_;
        for (std::uint32_t d = 0; d < dim_; ++d)
          out[d] = static_cast<float>(s[d] / static_cast<double>(counts[c]));
        continue;
      }
      // Empty cluster: move it onto the point worst served by its centroid.
      const auto far = static_cast<std::size_t>(std::max_element(spare.begin(), spare.end(),
                                                                  [](double a, double b) { return a < b; }) -
                                                 spare.begin());
      spare[far] = -1.0;
      std::copy(point(far), point(far) + dim_, out);
    }
    return centroids;
  }

 private:
  std::span<const float> points_;
  std::size_t n_;
  std::uint32_t dim_;
  std::uint32_t k_;
  std::vector<std::uint32_t> labels_;
  std::vector<double> dists_;
};

}  // namespace

Vocabulary::Vocabulary(std::uint32_t dimensionality, std::vector<float> centroids)
    : dim_(dimensionality), centroids_(std::move(centroids)) {
  if (dim_ == 0) throw DataError("vocabulary dimensionality must be positive");
  if (centroids_.empty() || centroids_.size() % dim_ != 0)
    throw DataError("vocabulary payload must hold K >= 1 centroids of length D");
  k_ = static_cast<std::uint32_t>(centroids_.size() / dim_);
}

KMeansResult kmeans(std::span<const float> points, std::uint32_t dim, const KMeansConfig& cfg) {
  if (dim == 0) throw DataError("cannot cluster zero-dimensional descriptors");
  if (cfg.k == 0) throw ConfigError("k must be positive");
  if (cfg.max_iterations == 0) throw ConfigError("max_iterations must be positive");
  if (cfg.restarts == 0) throw ConfigError("restarts must be positive");
  if (!(cfg.tolerance >= 0.0)) throw ConfigError("tolerance must be non-negative");
  const std::size_t n = points.size() / dim;
  if (cfg.k > n)
    throw ConfigError("k = " + std::to_string(cfg.k) + " exceeds the " + std::to_string(n) +
                      " available descriptors");

  KMeansResult result;
  result.sample_size = n;
  result.inertia = std::numeric_limits<double>::infinity();
  std::vector<float> best;

  for (std::uint32_t r = 0; r < cfg.restarts; ++r) {
    Rng rng(mix64(cfg.seed + r));
    Lloyd lloyd(points, n, dim, cfg.k);
    std::vector<float> centroids = lloyd.seed_plus_plus(rng);
    KMeansRun run;
    double inertia = lloyd.assign(centroids).first;
    run.inertia.push_back(inertia);

    for (std::uint32_t it = 0; it < cfg.max_iterations; ++it) {
      std::vector<float> next = lloyd.update();
      Lloyd trial = lloyd;
      const auto [next_inertia, changed] = trial.assign(next);
      if (next_inertia > inertia) {
        run.converged = true;
        break;
      }
      const double improvement = inertia - next_inertia;
      lloyd = std::move(trial);
      centroids = std::move(next);
      run.inertia.push_back(next_inertia);
      const bool small = inertia == 0.0 || improvement < cfg.tolerance * inertia;
      inertia = next_inertia;
      if (changed == 0 || small) {
        run.converged = true;
        break;
      }
    }

    if (inertia < result.inertia) {
      result.inertia = inertia;
      result.best_run = r;
      best = std::move(centroids);
    }
    result.runs.push_back(std::move(run));
  }
  result.vocabulary = Vocabulary(dim, std::move(best));
  return result;
}

KMeansResult build_vocabulary_traced(std::span<const FeatureSet> corpus, const KMeansConfig& cfg) {
  if (corpus.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  const std::uint32_t dim = corpus.front().dimensionality();
  if (dim == 0) throw DataError("cannot cluster zero-dimensional descriptors");
  std::size_t total = 0;
  for (const auto& fs : corpus) {
    if (fs.dimensionality() != dim) throw DataError("corpus mixes descriptor dimensionalities");
    total += fs.size();
  }

  std::vector<float> points;
  if (cfg.sample_cap && *cfg.sample_cap < total) {
    Rng rng(cfg.seed);
    const auto picked = sample_indices(total, static_cast<std::size_t>(*cfg.sample_cap), rng);
    points.reserve(picked.size() * dim);
    std::size_t image = 0, base = 0;
    for (std::size_t g : picked) {
      while (g >= base + corpus[image].size()) base += corpus[image++].size();
      const auto d = corpus[image].descriptor(g - base);
      points.insert(points.end(), d.begin(), d.end());
    }
  } else {
    points.reserve(total * dim);
    for (const auto& fs : corpus) points.insert(points.end(), fs.descriptors().begin(), fs.descriptors().end());
  }
  return kmeans(points, dim, cfg);
}

Vocabulary build_vocabulary(std::span<const FeatureSet> corpus, const KMeansConfig& cfg) {
  return build_vocabulary_traced(corpus, cfg).vocabulary;
}

WordId nearest_word(std::span<const float> descriptor, const Vocabulary& vocab) {
  if (descriptor.size() != vocab.dimensionality())
    throw DataError("descriptor length " + std::to_string(descriptor.size()) +
                    " does not match vocabulary dimensionality " + std::to_string(vocab.dimensionality()));
  return nearest_centroid(descriptor.data(), vocab.data(), vocab.size(), vocab.dimensionality()).index;
}

BagOfWords assign_words(const FeatureSet& fs, const Vocabulary& vocab) {
  if (fs.dimensionality() != vocab.dimensionality())
    throw DataError("feature dimensionality " + std::to_string(fs.dimensionality()) +
                    " does not match vocabulary dimensionality " + std::to_string(vocab.dimensionality()));
  std::vector<WordId> tokens(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i)
    tokens[i] = nearest_centroid(fs.descriptor(i).data(), vocab.data(), vocab.size(), vocab.dimensionality()).index;
  return BagOfWords::from_tokens(fs.image_id(), tokens);
}

std::vector<BagOfWords> assign_corpus(std::span<const FeatureSet> corpus, const Vocabulary& vocab) {
  std::vector<BagOfWords> out;
  out.reserve(corpus.size());
  for (const auto& fs : corpus) out.push_back(assign_words(fs, vocab));
  return out;
}

std::vector<std::uint8_t> encode_vocabulary(const Vocabulary& vocab) {
  detail::ByteWriter w;
  w.bytes().reserve(kVocabularyHeaderBytes + vocab.data().size() * 4);
  w.magic("BOFV");
  w.u32(kFormatVersion);
  w.u32(vocab.size());
  w.u32(vocab.dimensionality());
  for (float v : vocab.data()) w.f32(v);
  return std::move(w.bytes());
}

Vocabulary decode_vocabulary(std::span<const std::uint8_t> bytes, const std::string& source) {
  detail::ByteReader r(bytes, source);
  r.expect_magic("BOFV");
  const std::uint64_t version_at = r.offset();
  if (r.u32() != kFormatVersion) r.fail(version_at, "unsupported version");
  const std::uint64_t k_at = r.offset();
  const std::uint32_t k = r.u32();
  if (k == 0) r.fail(k_at, "K = 0");
  const std::uint64_t dim_at = r.offset();
  const std::uint32_t dim = r.u32();
  if (dim == 0) r.fail(dim_at, "dimensionality 0");
  const std::uint64_t row = 4ull * dim;
  std::vector<float> centroids;
  centroids.reserve(std::min<std::uint64_t>(std::uint64_t{k} * dim, r.remaining() / 4));
  for (std::uint32_t c = 0; c < k; ++c) {
    if (r.remaining() < row)
      r.fail(kVocabularyHeaderBytes + c * row,
             "truncated centroid payload: centroid " + std::to_string(c) + " of " + std::to_string(k));
    for (std::uint32_t d = 0; d < dim; ++d) centroids.push_back(r.f32());
  }
  if (r.remaining() != 0) r.fail(r.offset(), "trailing bytes after last centroid");
  return Vocabulary(dim, std::move(centroids));
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return decode_vocabulary(bytes, path.string());
}

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  detail::write_file(path, encode_vocabulary(vocab));
}

}  // namespace bof
