#include "bof/bow.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bof/errors.hpp"
#include "bof/rng.hpp"
#include "detail/io.hpp"

namespace bof {

BagOfWords BagOfWords::from_entries(std::string image_id, std::vector<WordCount> entries) {
  BagOfWords bow(std::move(image_id));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].tf == 0) throw DataError("bag " + bow.image_id_ + ": zero term frequency");
    if (i > 0 && entries[i].word <= entries[i - 1].word)
      throw DataError("bag " + bow.image_id_ + ": word ids not strictly increasing");
    bow.total_ += entries[i].tf;
  }
  bow.entries_ = std::move(entries);
  return bow;
}

BagOfWords BagOfWords::from_tokens(std::string image_id, std::span<const WordId> tokens) {
  std::vector<WordId> sorted(tokens.begin(), tokens.end());
  std::sort(sorted.begin(), sorted.end());
  BagOfWords bow(std::move(image_id));
  for (WordId w : sorted) {
    if (!bow.entries_.empty() && bow.entries_.back().word == w)
      ++bow.entries_.back().tf;
    else
      bow.entries_.push_back({w, 1});
  }
  bow.total_ = sorted.size();
  return bow;
}

std::uint32_t BagOfWords::tf(WordId w) const {
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), w,
                                   [](const WordCount& e, WordId x) { return e.word < x; });
  return it != entries_.end() && it->word == w ? it->tf : 0;
}

CorpusStats::CorpusStats(std::uint32_t num_documents, std::vector<std::uint32_t> df_by_word)
    : n_(num_documents), df_(std::move(df_by_word)), idf_(df_.size(), 0.0) {
  if (n_ == 0) throw DataError("corpus statistics need at least one document");
  for (std::size_t w = 0; w < df_.size(); ++w) {
    if (df_[w] > n_)
      throw DataError("df of word " + std::to_string(w) + " exceeds the document count");
    if (df_[w] > 0) idf_[w] = std::log(static_cast<double>(n_) / static_cast<double>(df_[w]));
  }
}

std::size_t CorpusStats::distinct_words() const {
  return static_cast<std::size_t>(std::count_if(df_.begin(), df_.end(), [](std::uint32_t d) { return d > 0; }));
}

std::vector<std::pair<WordId, std::uint32_t>> CorpusStats::entries() const {
  std::vector<std::pair<WordId, std::uint32_t>> out;
  for (std::size_t w = 0; w < df_.size(); ++w)
    if (df_[w] > 0) out.emplace_back(static_cast<WordId>(w), df_[w]);
  return out;
}

CorpusStats compute_corpus_stats(std::span<const BagOfWords> corpus) {
  if (corpus.empty()) throw DataError("cannot compute statistics of an empty corpus");
  std::vector<std::uint32_t> df;
  for (const auto& bow : corpus) {
    if (!bow.empty() && bow.entries().back().word >= df.size()) df.resize(bow.entries().back().word + std::size_t{1}, 0);
    for (const auto& e : bow.entries()) ++df[e.word];
  }
  return CorpusStats(static_cast<std::uint32_t>(corpus.size()), std::move(df));
}

std::string_view to_string(WordCriterion c) {
  switch (c) {
    case WordCriterion::kRandom: return "random";
    case WordCriterion::kTf: return "tf";
    case WordCriterion::kIdf: return "idf";
    case WordCriterion::kTfIdf: return "tfidf";
  }
  return "?";
}

std::string_view to_string(TiePolicy p) {
  return p == TiePolicy::kKeepWholeTieGroup ? "whole" : "exact";
}

WordCriterion parse_word_criterion(std::string_view s) {
  if (s == "random") return WordCriterion::kRandom;
  if (s == "tf") return WordCriterion::kTf;
  if (s == "idf") return WordCriterion::kIdf;
  if (s == "tfidf") return WordCriterion::kTfIdf;
  throw ConfigError("unknown word criterion \"" + std::string(s) + "\"");
}

TiePolicy parse_tie_policy(std::string_view s) {
  if (s == "whole") return TiePolicy::kKeepWholeTieGroup;
  if (s == "exact") return TiePolicy::kExactBudget;
  throw ConfigError("unknown tie policy \"" + std::string(s) + "\"");
}

std::vector<double> word_scores(const BagOfWords& bow, const CorpusStats& stats, WordCriterion criterion,
                                std::uint64_t seed) {
  const auto entries = bow.entries();
  std::vector<double> scores(entries.size());
  if (criterion == WordCriterion::kRandom) {
    Rng rng(seed);
    for (auto& s : scores) s = rng.uniform01();
    return scores;
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const double tf = entries[i].tf;
    switch (criterion) {
      case WordCriterion::kTf: scores[i] = tf; break;
      case WordCriterion::kIdf: scores[i] = stats.idf(entries[i].word); break;
      case WordCriterion::kTfIdf: scores[i] = tf * stats.idf(entries[i].word); break;
      case WordCriterion::kRandom: break;
    }
  }
  return scores;
}

BagOfWords prune_words(const BagOfWords& bow, const CorpusStats& stats, const WordPruneConfig& cfg) {
  const std::uint64_t budget = cfg.keep.keep_count(bow.total_tokens());
  if (budget >= bow.total_tokens()) return bow;

  const auto entries = bow.entries();
  const std::vector<double> scores = word_scores(bow, stats, cfg.criterion, cfg.seed);
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Entries are in ascending word order, so position breaks ties by word id.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::size_t kept = 0;
  std::uint64_t tokens = 0;
  while (kept < order.size() && tokens < budget) tokens += entries[order[kept++]].tf;
  if (cfg.tie_policy == TiePolicy::kKeepWholeTieGroup && kept > 0) {
    const double cut = scores[order[kept - 1]];
    while (kept < order.size() && scores[order[kept]] == cut) ++kept;
  }

  std::vector<std::size_t> survivors(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kept));
  std::sort(survivors.begin(), survivors.end());
  std::vector<WordCount> out;
  out.reserve(survivors.size());
  for (std::size_t i : survivors) out.push_back(entries[i]);
  return BagOfWords::from_entries(bow.image_id(), std::move(out));
}

std::vector<BagOfWords> prune_corpus(std::span<const BagOfWords> corpus, const CorpusStats& stats,
                                     const WordPruneConfig& cfg) {
  std::vector<BagOfWords> out;
  out.reserve(corpus.size());
  WordPruneConfig per_image = cfg;
  for (const auto& bow : corpus) {
    if (cfg.criterion == WordCriterion::kRandom) per_image.seed = derive_seed(cfg.seed, bow.image_id());
    out.push_back(prune_words(bow, stats, per_image));
  }
  return out;
}

CorpusSize measure_corpus(std::span<const BagOfWords> corpus) {
  if (corpus.empty()) return {};
  std::uint64_t tokens = 0, distinct = 0;
  for (const auto& bow : corpus) {
    tokens += bow.total_tokens();
    distinct += bow.distinct_words();
  }
  const double n = static_cast<double>(corpus.size());
  return {static_cast<double>(tokens) / n, static_cast<double>(distinct) / n};
}

ReductionStats corpus_reduction_report(std::span<const BagOfWords> before, std::span<const BagOfWords> after) {
  std::vector<std::string_view> a, b;
  for (const auto& bow : before) a.push_back(bow.image_id());
  for (const auto& bow : after) b.push_back(bow.image_id());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a != b) throw DataError("reduction report: corpora hold different image ids");
  return {measure_corpus(before), measure_corpus(after)};
}

std::string encode_bow(std::span<const BagOfWords> corpus) {
  std::string out = "BOFW 1\n";
  for (const auto& bow : corpus) {
    out += bow.image_id();
    out += '\t';
    bool first = true;
    for (const auto& e : bow.entries()) {
      if (!first) out += ' ';
      first = false;
      detail::append_number(out, e.word);
      out += ':';
      detail::append_number(out, e.tf);
    }
    out += '\n';
  }
  return out;
}

std::vector<BagOfWords> decode_bow(std::string_view text, const std::string& source) {
  const auto lines = detail::split_lines(text);
  if (lines.empty() || lines[0].text != "BOFW 1") throw FormatError(source, 0, "expected header \"BOFW 1\"");
  std::vector<BagOfWords> corpus;
  corpus.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    const std::size_t tab = line.text.find('\t');
    if (tab == std::string_view::npos || tab == 0)
      throw FormatError(source, line.offset, "expected image_id<TAB>entries");
    std::vector<WordCount> entries;
    for (const auto token : detail::split_ws(line.text.substr(tab + 1))) {
      const std::size_t colon = token.find(':');
      WordCount e;
      if (colon == std::string_view::npos || !detail::parse_number(token.substr(0, colon), e.word) ||
          !detail::parse_number(token.substr(colon + 1), e.tf))
        throw FormatError(source, line.offset, "malformed entry \"" + std::string(token) + "\"");
      if (e.tf == 0) throw FormatError(source, line.offset, "zero term frequency");
      if (!entries.empty() && e.word <= entries.back().word)
        throw FormatError(source, line.offset, "word ids not strictly increasing");
      entries.push_back(e);
    }
    corpus.push_back(BagOfWords::from_entries(std::string(line.text.substr(0, tab)), std::move(entries)));
  }
  return corpus;
}

std::vector<BagOfWords> load_bow(const std::filesystem::path& path) {
  return decode_bow(detail::read_text(path), path.string());
}

void save_bow(std::span<const BagOfWords> corpus, const std::filesystem::path& path) {
  detail::write_text(path, encode_bow(corpus));
}

CorpusStats load_corpus_stats(const std::filesystem::path& path) {
  const std::string text = detail::read_text(path);
  const std::string source = path.string();
  const auto lines = detail::split_lines(text);
  std::uint32_t n = 0;
  if (lines.empty() || !detail::parse_number(lines[0].text, n) || n == 0)
    throw FormatError(source, 0, "expected positive document count");
  std::vector<std::uint32_t> df;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto parts = detail::split(lines[i].text, '\t');
    WordId w = 0;
    std::uint32_t d = 0;
    if (parts.size() != 2 || !detail::parse_number(parts[0], w) || !detail::parse_number(parts[1], d))
      throw FormatError(source, lines[i].offset, "expected word_id<TAB>df");
    if (d == 0 || d > n) throw FormatError(source, lines[i].offset, "df outside [1, N]");
    if (w < df.size()) throw FormatError(source, lines[i].offset, "word ids not strictly increasing");
    df.resize(std::size_t{w} + 1, 0);
    df[w] = d;
  }
  return CorpusStats(n, std::move(df));
}

void save_corpus_stats(const CorpusStats& stats, const std::filesystem::path& path) {
  std::string out = std::to_string(stats.num_documents()) + "\n";
  for (const auto& [w, d] : stats.entries()) {
    detail::append_number(out, w);
    out += '\t';
    detail::append_number(out, d);
    out += '\n';
  }
  detail::write_text(path, out);
}

}  // namespace bof
