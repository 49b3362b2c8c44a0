#include "bof/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "bof/errors.hpp"
#include "bof/index.hpp"
#include "bof/rng.hpp"
#include "detail/io.hpp"

namespace bof {

std::string_view to_string(BenchSite s) { return s == BenchSite::kQueryOnly ? "query" : "both"; }

BenchSite parse_bench_site(std::string_view s) {
  if (s == "query") return BenchSite::kQueryOnly;
  if (s == "both") return BenchSite::kQueryAndDataset;
  throw ConfigError("bench site must be query or both, got \"" + std::string(s) + "\"");
}

std::vector<BagOfWords> generate_zipf_bags(std::uint32_t count, std::uint32_t vocabulary_size, std::uint32_t tokens,
                                           double exponent, std::uint64_t seed, std::string_view prefix) {
  if (vocabulary_size == 0) throw ConfigError("vocabulary_size must be positive");
  if (!(exponent >= 0.0)) throw ConfigError("zipf exponent must be non-negative");
  std::vector<double> cdf(vocabulary_size);
  double total = 0.0;
  for (std::uint32_t r = 0; r < vocabulary_size; ++r) {
    total += std::pow(static_cast<double>(r + 1), -exponent);
    cdf[r] = total;
  }
  Rng rng(seed);
  std::vector<BagOfWords> bags;
  bags.reserve(count);
  std::vector<WordId> stream(tokens);
  char id[32];
  for (std::uint32_t i = 0; i < count; ++i) {
    for (auto& w : stream) {
      const double u = rng.uniform01() * total;
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      w = static_cast<WordId>(std::min<std::ptrdiff_t>(it - cdf.begin(), vocabulary_size - 1));
    }
    std::snprintf(id, sizeof(id), "%08u", i);
    bags.push_back(BagOfWords::from_tokens(std::string(prefix) + id, stream));
  }
  return bags;
}

namespace {

double percentile(std::vector<double> sorted, double q) {
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[std::max<std::size_t>(rank, 1) - 1];
}

double mean_distinct(std::span<const BagOfWords> bags) {
  if (bags.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& b : bags) sum += static_cast<double>(b.distinct_words());
  return sum / static_cast<double>(bags.size());
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchConfig& cfg, std::span<const BagOfWords> dataset,
                                std::span<const BagOfWords> queries) {
  using Clock = std::chrono::steady_clock;
  if (cfg.repetitions < 1) throw ConfigError("repetitions must be at least 1");
  for (double p : cfg.retention) RetentionSpec::fraction(p);
  std::vector<BenchRow> rows;
  if (queries.empty()) return rows;
  if (dataset.empty()) throw DataError("bench needs a non-empty dataset");

  const CorpusStats stats = compute_corpus_stats(dataset);
  std::optional<InvertedIndex> full_index;
  if (cfg.site == BenchSite::kQueryOnly) full_index = build_index(dataset);

  for (double p : cfg.retention) {
    WordPruneConfig wc;
    wc.criterion = cfg.criterion;
    wc.keep = RetentionSpec::fraction(p);
    wc.tie_policy = cfg.tie_policy;
    wc.seed = cfg.seed;

    std::vector<BagOfWords> pruned_dataset;
    std::optional<InvertedIndex> pruned_index;
    if (cfg.site == BenchSite::kQueryAndDataset) {
      pruned_dataset = prune_corpus(dataset, stats, wc);
      pruned_index = build_index(pruned_dataset);
    }
    const InvertedIndex& ix = pruned_index ? *pruned_index : *full_index;
    const std::vector<BagOfWords> pruned_queries = prune_corpus(queries, stats, wc);

    BenchRow row;
    row.retention = p;
    row.site = cfg.site;
    row.mean_distinct_query = mean_distinct(pruned_queries);
    row.mean_distinct_doc = mean_distinct(pruned_index ? std::span<const BagOfWords>(pruned_dataset) : dataset);

    std::vector<double> latency;
    latency.reserve(pruned_queries.size());
    for (const auto& q : pruned_queries) {
      QueryCost cost;
      for (std::uint32_t w = 0; w < cfg.warmup; ++w) query(ix, q, cfg.k);
      double us = 0.0;
      for (std::uint32_t r = 0; r < cfg.repetitions; ++r) {
        const auto start = Clock::now();
        const RankedResult result = query(ix, q, cfg.k, &cost);
        us += std::chrono::duration<double, std::micro>(Clock::now() - start).count();
        if (result.size() > cfg.k) throw InvariantError("query returned more than k results");
      }
      latency.push_back(us / cfg.repetitions);
      row.postings_touched += cost.postings_touched;
    }
    double sum = 0.0;
    for (double l : latency) sum += l;
    row.mean_us = sum / static_cast<double>(latency.size());
    row.median_us = percentile(latency, 0.5);
    row.p95_us = percentile(latency, 0.95);
    rows.push_back(row);
  }
  return rows;
}

std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
  const auto dataset = generate_zipf_bags(cfg.corpus_size, cfg.vocabulary_size, cfg.tokens_per_image,
                                          cfg.zipf_exponent, cfg.seed, "d");
  const auto queries = generate_zipf_bags(cfg.query_count, cfg.vocabulary_size, cfg.tokens_per_image,
                                          cfg.zipf_exponent, mix64(cfg.seed), "q");
  return run_bench(cfg, dataset, queries);
}

std::string bench_csv(std::span<const BenchRow> rows) {
  std::string out = "retention,site,mean_distinct_query,mean_distinct_doc,mean_us,median_us,p95_us,postings_touched\n";
  for (const auto& r : rows) {
    detail::append_number(out, r.retention);
    out += ',';
    out += to_string(r.site);
    for (double v : {r.mean_distinct_query, r.mean_distinct_doc, r.mean_us, r.median_us, r.p95_us}) {
      out += ',';
      detail::append_number(out, v);
    }
    out += ',';
    detail::append_number(out, r.postings_touched);
    out += '\n';
  }
  return out;
}

}  // namespace bof
