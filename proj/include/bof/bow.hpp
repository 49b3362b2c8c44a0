#pragma once

// Bag-of-words images, corpus statistics, and word-level reduction.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bof/featureio.hpp"

namespace bof {

using WordId = std::uint32_t;

struct WordCount {
  WordId word = 0;
  std::uint32_t tf = 0;

  friend bool operator==(const WordCount&, const WordCount&) = default;
};

/// One image as visual-word counts, sorted by word id.
class BagOfWords {
 public:
  BagOfWords() = default;
  explicit BagOfWords(std::string image_id) : image_id_(std::move(image_id)) {}

  /// Throws DataError unless word ids strictly increase and every tf >= 1.
  static BagOfWords from_entries(std::string image_id, std::vector<WordCount> entries);
  /// Counts a token stream (any order).
  static BagOfWords from_tokens(std::string image_id, std::span<const WordId> tokens);

  const std::string& image_id() const { return image_id_; }
  void set_image_id(std::string id) { image_id_ = std::move(id); }
  std::span<const WordCount> entries() const { return entries_; }
  std::uint64_t total_tokens() const { return total_; }
  std::size_t distinct_words() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::uint32_t tf(WordId w) const;

  friend bool operator==(const BagOfWords&, const BagOfWords&) = default;

 private:
  std::string image_id_;
  std::vector<WordCount> entries_;
  std::uint64_t total_ = 0;
};

/// Document frequencies over a corpus of N images; idf(w) = ln(N / df(w)).
/// Words the corpus never saw have df 0 and idf 0.
class CorpusStats {
 public:
  CorpusStats() = default;
  /// `df_by_word[w]` is the df of word w (0 = absent). Throws DataError if
  /// N is 0 or some df exceeds N.
  CorpusStats(std::uint32_t num_documents, std::vector<std::uint32_t> df_by_word);

  std::uint32_t num_documents() const { return n_; }
  std::uint32_t df(WordId w) const { return w < df_.size() ? df_[w] : 0; }
  double idf(WordId w) const { return w < idf_.size() ? idf_[w] : 0.0; }
  std::size_t distinct_words() const;
  /// (word, df) for every word with df > 0, ascending.
  std::vector<std::pair<WordId, std::uint32_t>> entries() const;

  friend bool operator==(const CorpusStats& a, const CorpusStats& b) {
    return a.n_ == b.n_ && a.entries() == b.entries();
  }

 private:
  std::uint32_t n_ = 0;
  std::vector<std::uint32_t> df_;
  std::vector<double> idf_;
};

/// Throws DataError on an empty corpus.
CorpusStats compute_corpus_stats(std::span<const BagOfWords> corpus);

enum class WordCriterion { kRandom, kTf, kIdf, kTfIdf };
enum class TiePolicy { kKeepWholeTieGroup, kExactBudget };

std::string_view to_string(WordCriterion c);
std::string_view to_string(TiePolicy p);
WordCriterion parse_word_criterion(std::string_view s);  // random|tf|idf|tfidf
TiePolicy parse_tie_policy(std::string_view s);          // whole|exact

struct WordPruneConfig {
  WordCriterion criterion = WordCriterion::kTfIdf;
  RetentionSpec keep = RetentionSpec::fraction(1.0);  // in tokens
  TiePolicy tie_policy = TiePolicy::kKeepWholeTieGroup;
  std::uint64_t seed = 0;  // random criterion only
};

/// Importance of each entry of `bow`, aligned with bow.entries():
/// tf -> tf, idf -> idf, tfidf -> tf * idf, random -> uniform01 draws from
/// Rng(seed) in entry order.
std::vector<double> word_scores(const BagOfWords& bow, const CorpusStats& stats,
                                WordCriterion criterion, std::uint64_t seed = 0);

/// Keeps the most important words, whole. The token budget is
/// B = keep.keep_count(total_tokens); words are ranked by score descending,
/// then word id ascending, and the shortest prefix reaching B tokens is kept.
/// Under kKeepWholeTieGroup the prefix is extended to cover every word tied
/// with its last score.
BagOfWords prune_words(const BagOfWords& bow, const CorpusStats& stats, const WordPruneConfig& cfg);

/// prune_words over a corpus. For the random criterion each image draws from
/// derive_seed(cfg.seed, image_id).
std::vector<BagOfWords> prune_corpus(std::span<const BagOfWords> corpus, const CorpusStats& stats,
                                     const WordPruneConfig& cfg);

struct CorpusSize {
  double mean_tokens = 0.0;
  double mean_distinct = 0.0;
};

struct ReductionStats {
  CorpusSize before;
  CorpusSize after;
};

CorpusSize measure_corpus(std::span<const BagOfWords> corpus);

/// Throws DataError unless both corpora hold the same image ids.
ReductionStats corpus_reduction_report(std::span<const BagOfWords> before,
                                       std::span<const BagOfWords> after);

// BoW file: "BOFW 1" header line, then "image_id<TAB>w1:tf1 w2:tf2 ..." per
// image with ascending word ids.
std::vector<BagOfWords> load_bow(const std::filesystem::path& path);
void save_bow(std::span<const BagOfWords> corpus, const std::filesystem::path& path);
std::string encode_bow(std::span<const BagOfWords> corpus);
std::vector<BagOfWords> decode_bow(std::string_view text, const std::string& source);

// CorpusStats file: "N" on the first line, then "word_id<TAB>df" lines,
// ascending word ids.
CorpusStats load_corpus_stats(const std::filesystem::path& path);
void save_corpus_stats(const CorpusStats& stats, const std::filesystem::path& path);

}  // namespace bof
