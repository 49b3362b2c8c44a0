#include "bof/index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bof/errors.hpp"
#include "detail/io.hpp"

namespace bof {

namespace {

constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint32_t kNoSlot = std::numeric_limits<std::uint32_t>::max();

struct Candidate {
  DocId doc;
  double score;
};

}  // namespace

void InvertedIndex::finish_layout() {
  slot_.assign(words_.empty() ? 0 : std::size_t{words_.back()} + 1, kNoSlot);
  for (std::size_t i = 0; i < words_.size(); ++i) slot_[words_[i]] = static_cast<std::uint32_t>(i);
}

InvertedIndex InvertedIndex::build(std::span<const BagOfWords> corpus, const std::optional<LabelMap>& labels) {
  if (corpus.empty()) throw DataError("cannot index an empty corpus");
  if (corpus.size() > std::numeric_limits<DocId>::max()) throw DataError("corpus too large for 32-bit doc ids");

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return corpus[a].image_id() < corpus[b].image_id(); });
  for (std::size_t i = 1; i < order.size(); ++i)
    if (corpus[order[i]].image_id() == corpus[order[i - 1]].image_id())
      throw DataError("duplicate image id \"" + corpus[order[i]].image_id() + "\"");

  InvertedIndex ix;
  ix.stats_ = compute_corpus_stats(corpus);
  const auto stat_entries = ix.stats_.entries();
  ix.words_.reserve(stat_entries.size());
  ix.offsets_.reserve(stat_entries.size() + 1);
  ix.offsets_.push_back(0);
  for (const auto& [w, df] : stat_entries) {
    ix.words_.push_back(w);
    ix.offsets_.push_back(ix.offsets_.back() + df);
  }
  ix.finish_layout();

  ix.postings_.resize(ix.offsets_.back());
  std::vector<std::uint64_t> fill(ix.offsets_.begin(), ix.offsets_.end() - 1);
  ix.image_ids_.reserve(corpus.size());
  ix.norms_.reserve(corpus.size());
  for (DocId d = 0; d < order.size(); ++d) {
    const BagOfWords& bow = corpus[order[d]];
    ix.image_ids_.push_back(bow.image_id());
    ix.norms_.push_back(tfidf_norm(bow, ix.stats_));
    for (const auto& e : bow.entries()) ix.postings_[fill[ix.slot_[e.word]]++] = {d, e.tf};
  }

  if (labels) {
    ix.labels_.reserve(corpus.size());
    for (const auto& id : ix.image_ids_) {
      const auto it = labels->find(id);
      if (it == labels->end()) throw DataError("no label for image \"" + id + "\"");
      ix.labels_.push_back(it->second);
    }
  }
  return ix;
}

std::optional<DocId> InvertedIndex::find(std::string_view image_id) const {
  const auto it = std::lower_bound(image_ids_.begin(), image_ids_.end(), image_id);
  if (it == image_ids_.end() || *it != image_id) return std::nullopt;
  return static_cast<DocId>(it - image_ids_.begin());
}

std::span<const Posting> InvertedIndex::postings(WordId w) const {
  if (w >= slot_.size() || slot_[w] == kNoSlot) return {};
  const std::uint32_t s = slot_[w];
  return {postings_.data() + offsets_[s], static_cast<std::size_t>(offsets_[s + 1] - offsets_[s])};
}

InvertedIndex build_index(std::span<const BagOfWords> corpus, const std::optional<LabelMap>& labels) {
  return InvertedIndex::build(corpus, labels);
}

double tfidf_norm(const BagOfWords& bow, const CorpusStats& stats) {
  double sum = 0.0;
  for (const auto& e : bow.entries()) {
    const double w = e.tf * stats.idf(e.word);
    sum += w * w;
  }
  return std::sqrt(sum);
}

RankedResult query(const InvertedIndex& ix, const BagOfWords& q, std::size_t k, QueryCost* cost) {
  RankedResult result;
  if (q.empty() || k == 0) return result;
  const CorpusStats& stats = ix.stats();
  const double qnorm = tfidf_norm(q, stats);

  std::vector<double> acc(ix.num_documents(), 0.0);
  std::vector<std::uint8_t> seen(ix.num_documents(), 0);
  std::vector<DocId> touched;
  QueryCost local;
  for (const auto& e : q.entries()) {
    const auto list = ix.postings(e.word);
    if (list.empty()) continue;
    ++local.lists_walked;
    local.postings_touched += list.size();
    const double idf = stats.idf(e.word);
    const double wq = e.tf * idf;
    for (const Posting& p : list) {
      const double w = wq * (p.tf * idf);
      if (w > 0.0) {
        if (!seen[p.doc]) {
          seen[p.doc] = 1;
          touched.push_back(p.doc);
        }
        acc[p.doc] += w;
      }
    }
  }
  if (cost) *cost = local;

  std::vector<Candidate> cands;
  cands.reserve(touched.size());
  for (DocId d : touched) cands.push_back({d, acc[d] / (qnorm * ix.doc_norm(d))});
  const auto better = [](const Candidate& a, const Candidate& b) {
    return a.score != b.score ? a.score > b.score : a.doc < b.doc;
  };
  const std::size_t n = std::min(k, cands.size());
  std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(n), cands.end(), better);
  result.hits.reserve(n);
  for (std::size_t i = 0; i < n; ++i) result.hits.push_back({ix.image_id(cands[i].doc), cands[i].score});
  return result;
}

RankedResult linear_scan_query(std::span<const BagOfWords> corpus, const CorpusStats& stats, const BagOfWords& q,
                               std::size_t k) {
  RankedResult result;
  if (q.empty() || k == 0) return result;
  const double qnorm = tfidf_norm(q, stats);
  for (const BagOfWords& doc : corpus) {
    // Merge the two sorted entry lists.
    const auto qe = q.entries();
    const auto de = doc.entries();
    double dot = 0.0;
    bool shares_positive = false;
    for (std::size_t i = 0, j = 0; i < qe.size() && j < de.size();) {
      if (qe[i].word < de[j].word) {
        ++i;
      } else if (de[j].word < qe[i].word) {
        ++j;
      } else {
        const double idf = stats.idf(qe[i].word);
        if (idf > 0.0) shares_positive = true;
        dot += (qe[i].tf * idf) * (de[j].tf * idf);
        ++i;
        ++j;
      }
    }
    if (!shares_positive) continue;
    result.hits.push_back({doc.image_id(), dot / (qnorm * tfidf_norm(doc, stats))});
  }
  std::sort(result.hits.begin(), result.hits.end(), [](const ScoredImage& a, const ScoredImage& b) {
    return a.score != b.score ? a.score > b.score : a.image_id < b.image_id;
  });
  if (result.hits.size() > k) result.hits.resize(k);
  return result;
}

Classification classify_1nn(const InvertedIndex& ix, const BagOfWords& q) {
  if (!ix.has_labels()) throw DataError("classification needs a labeled index");
  Classification c;
  const RankedResult top = query(ix, q, 1);
  if (top.empty()) return c;
  c.best = top.hits.front();
  c.label = ix.label(*ix.find(c.best->image_id));
  return c;
}

IndexSizeReport index_size_report(const InvertedIndex& ix) {
  IndexSizeReport r;
  r.documents = ix.num_documents();
  r.distinct_words = ix.words().size();
  for (WordId w : ix.words()) r.total_postings += ix.postings(w).size();
  r.mean_posting_length =
      r.distinct_words ? static_cast<double>(r.total_postings) / static_cast<double>(r.distinct_words) : 0.0;
  return r;
}

std::vector<std::uint8_t> encode_index(const InvertedIndex& ix) {
  detail::ByteWriter w;
  w.magic("BOFI");
  w.u32(kFormatVersion);
  w.u32(ix.num_documents());
  w.u32(static_cast<std::uint32_t>(ix.words().size()));
  for (WordId word : ix.words()) {
    const auto list = ix.postings(word);
    w.u32(word);
    w.u32(ix.stats().df(word));
    w.u32(static_cast<std::uint32_t>(list.size()));
    for (const Posting& p : list) {
      w.u32(p.doc);
      w.u32(p.tf);
    }
  }
  for (DocId d = 0; d < ix.num_documents(); ++d) w.str(ix.image_id(d));
  for (DocId d = 0; d < ix.num_documents(); ++d) w.f64(ix.doc_norm(d));
  w.u8(ix.has_labels() ? 1 : 0);
  if (ix.has_labels())
    for (DocId d = 0; d < ix.num_documents(); ++d) w.str(ix.label(d));
  return std::move(w.bytes());
}

InvertedIndex decode_index(std::span<const std::uint8_t> bytes, const std::string& source) {
  detail::ByteReader r(bytes, source);
  r.expect_magic("BOFI");
  const std::uint64_t version_at = r.offset();
  if (r.u32() != kFormatVersion) r.fail(version_at, "unsupported version");
  const std::uint64_t n_at = r.offset();
  const std::uint32_t n = r.u32();
  if (n == 0) r.fail(n_at, "N = 0");
  const std::uint32_t num_words = r.u32();

  InvertedIndex ix;
  std::vector<std::uint32_t> df;
  ix.offsets_.push_back(0);
  for (std::uint32_t i = 0; i < num_words; ++i) {
    const std::uint64_t at = r.offset();
    const WordId word = r.u32();
    const std::uint32_t word_df = r.u32();
    const std::uint32_t length = r.u32();
    if (!ix.words_.empty() && word <= ix.words_.back()) r.fail(at, "word ids not strictly increasing");
    if (word_df != length || length == 0 || length > n) r.fail(at, "df must equal a posting length in [1, N]");
    if (r.remaining() / 8 < length) r.fail(r.offset(), "truncated posting list");
    for (std::uint32_t j = 0; j < length; ++j) {
      const std::uint64_t pat = r.offset();
      Posting p{r.u32(), r.u32()};
      if (p.doc >= n || p.tf == 0 || (j > 0 && p.doc <= ix.postings_.back().doc))
        r.fail(pat, "invalid posting");
      ix.postings_.push_back(p);
    }
    ix.words_.push_back(word);
    ix.offsets_.push_back(ix.postings_.size());
    df.resize(std::size_t{word} + 1, 0);
    df[word] = word_df;
  }
  ix.stats_ = CorpusStats(n, std::move(df));
  ix.finish_layout();

  ix.image_ids_.reserve(n);
  for (std::uint32_t d = 0; d < n; ++d) {
    const std::uint64_t at = r.offset();
    ix.image_ids_.push_back(r.str());
    if (d > 0 && ix.image_ids_[d] <= ix.image_ids_[d - 1]) r.fail(at, "image ids not strictly increasing");
  }
  ix.norms_.reserve(n);
  for (std::uint32_t d = 0; d < n; ++d) ix.norms_.push_back(r.f64());
  const std::uint64_t flag_at = r.offset();
  const std::uint8_t has_labels = r.u8();
  if (has_labels > 1) r.fail(flag_at, "invalid labels flag");
  if (has_labels)
    for (std::uint32_t d = 0; d < n; ++d) ix.labels_.push_back(r.str());
  if (r.remaining() != 0) r.fail(r.offset(), "trailing bytes");
  return ix;
}

InvertedIndex load_index(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return decode_index(bytes, path.string());
}

void save_index(const InvertedIndex& ix, const std::filesystem::path& path) {
  detail::write_file(path, encode_index(ix));
}

}  // namespace bof
