#pragma once

// Query latency versus distinct words per image, on query-only or
// query-and-dataset reduction.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bof/bow.hpp"

namespace bof {

enum class BenchSite { kQueryOnly, kQueryAndDataset };

std::string_view to_string(BenchSite s);
BenchSite parse_bench_site(std::string_view s);  // query|both

struct BenchConfig {
  std::uint32_t corpus_size = 50000;
  std::uint32_t query_count = 200;
  std::uint32_t repetitions = 3;
  std::uint32_t warmup = 1;
  BenchSite site = BenchSite::kQueryAndDataset;
  std::vector<double> retention{1.0, 0.5, 0.25, 0.1};
  std::uint64_t seed = 0;
  std::uint32_t vocabulary_size = 10000;
  std::uint32_t tokens_per_image = 300;
  double zipf_exponent = 1.0;
  WordCriterion criterion = WordCriterion::kTfIdf;
  TiePolicy tie_policy = TiePolicy::kExactBudget;
  std::size_t k = 100;
};

struct BenchRow {
  double retention = 1.0;
  BenchSite site = BenchSite::kQueryAndDataset;
  double mean_distinct_query = 0.0;
  double mean_distinct_doc = 0.0;
  double mean_us = 0.0;
  double median_us = 0.0;
  double p95_us = 0.0;
  std::uint64_t postings_touched = 0;  // summed over all queries, one run each
};

/// `count` bags of `tokens` tokens each, word ids drawn from a Zipf law with
/// the given exponent over [0, vocabulary_size): rank r has weight r^-s and
/// word id r - 1. Image ids are prefix + zero-padded ordinal.
std::vector<BagOfWords> generate_zipf_bags(std::uint32_t count, std::uint32_t vocabulary_size, std::uint32_t tokens,
                                           double exponent, std::uint64_t seed, std::string_view prefix);

/// Times every query against an index of the (possibly pruned) dataset.
/// Index construction and pruning are outside the timed region. Each query
/// runs `warmup` discarded times and `repetitions` timed times; its latency
/// is the mean of the timed runs. Pruning uses statistics of the unpruned
/// dataset so successive retentions nest.
std::vector<BenchRow> run_bench(const BenchConfig& cfg, std::span<const BagOfWords> dataset,
                                std::span<const BagOfWords> queries);

/// Same, on Zipf bags generated from cfg (dataset seed = cfg.seed, query
/// seed = mix64(cfg.seed)).
std::vector<BenchRow> run_bench(const BenchConfig& cfg);

// Columns: retention,site,mean_distinct_query,mean_distinct_doc,mean_us,
// median_us,p95_us,postings_touched.
std::string bench_csv(std::span<const BenchRow> rows);

}  // namespace bof
