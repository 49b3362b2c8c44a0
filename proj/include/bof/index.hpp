#pragma once

// Inverted file over bag-of-words images with tf-idf cosine ranking.
//
// Weights are raw tf times ln-idf for both documents and queries, and the
// idf always comes from the index's own statistics. A query walks only the
// posting lists of its own words.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bof/bow.hpp"
#include "bof/featureio.hpp"

namespace bof {

using DocId = std::uint32_t;

struct Posting {
  DocId doc = 0;
  std::uint32_t tf = 0;

  friend bool operator==(const Posting&, const Posting&) = default;
};

struct ScoredImage {
  std::string image_id;
  double score = 0.0;

  friend bool operator==(const ScoredImage&, const ScoredImage&) = default;
};

/// Descending score, ties by ascending image id.
struct RankedResult {
  std::vector<ScoredImage> hits;

  bool empty() const { return hits.empty(); }
  std::size_t size() const { return hits.size(); }
};

struct QueryCost {
  std::uint64_t postings_touched = 0;  // sum of posting-list lengths walked
  std::uint64_t lists_walked = 0;
};

class InvertedIndex {
 public:
  InvertedIndex() = default;

  /// Documents are renumbered in ascending image-id order, so doc ids and
  /// image ids sort the same way. Throws DataError on an empty corpus or a
  /// duplicate image id. With labels, every image must have one.
  static InvertedIndex build(std::span<const BagOfWords> corpus, const std::optional<LabelMap>& labels = std::nullopt);

  const CorpusStats& stats() const { return stats_; }
  std::uint32_t num_documents() const { return static_cast<std::uint32_t>(image_ids_.size()); }
  const std::string& image_id(DocId d) const { return image_ids_[d]; }
  std::optional<DocId> find(std::string_view image_id) const;
  double doc_norm(DocId d) const { return norms_[d]; }

  std::span<const Posting> postings(WordId w) const;
  /// Words with a non-empty posting list, ascending.
  std::span<const WordId> words() const { return words_; }

  bool has_labels() const { return !labels_.empty(); }
  const std::string& label(DocId d) const { return labels_.at(d); }

  friend bool operator==(const InvertedIndex&, const InvertedIndex&) = default;

 private:
  friend InvertedIndex decode_index(std::span<const std::uint8_t>, const std::string&);
  void finish_layout();

  CorpusStats stats_;
  std::vector<std::string> image_ids_;
  std::vector<double> norms_;
  std::vector<std::string> labels_;  // empty when unlabeled
  std::vector<WordId> words_;
  std::vector<std::uint64_t> offsets_;  // words_.size() + 1 entries into postings_
  std::vector<Posting> postings_;
  std::vector<std::uint32_t> slot_;  // word id -> index into words_, or kNoSlot
};

InvertedIndex build_index(std::span<const BagOfWords> corpus, const std::optional<LabelMap>& labels = std::nullopt);

/// Euclidean norm of the tf * idf vector of `bow` under `stats`, summed in
/// ascending word order.
double tfidf_norm(const BagOfWords& bow, const CorpusStats& stats);

/// Cosine ranking through the posting lists. Documents that share no
/// positive-idf word with the query are not returned.
RankedResult query(const InvertedIndex& ix, const BagOfWords& q, std::size_t k, QueryCost* cost = nullptr);

/// Same contract as query(), by scoring every document directly.
RankedResult linear_scan_query(std::span<const BagOfWords> corpus, const CorpusStats& stats,
                               const BagOfWords& q, std::size_t k);

struct Classification {
  std::optional<std::string> label;  // nullopt: nothing matched
  std::optional<ScoredImage> best;
};

/// Label of the top-ranked image. Throws DataError on an unlabeled index.
Classification classify_1nn(const InvertedIndex& ix, const BagOfWords& q);

struct IndexSizeReport {
  std::uint64_t documents = 0;
  std::uint64_t distinct_words = 0;
  std::uint64_t total_postings = 0;
  double mean_posting_length = 0.0;
};

IndexSizeReport index_size_report(const InvertedIndex& ix);

// Index file ("BOFI"), little-endian:
//   magic "BOFI" | version u32 = 1 | N u32 | W u32 (words with postings)
//   W times: word_id u32 | df u32 | length u32 | length x (doc u32, tf u32)
//   N times: image id (u32 byte length + bytes), in doc id order
//   N times: doc norm f64
//   labels flag u8; if 1, N times: label (u32 byte length + bytes)
std::vector<std::uint8_t> encode_index(const InvertedIndex& ix);
InvertedIndex decode_index(std::span<const std::uint8_t> bytes, const std::string& source);
InvertedIndex load_index(const std::filesystem::path& path);
void save_index(const InvertedIndex& ix, const std::filesystem::path& path);

}  // namespace bof
