#include "bof/sweep.hpp"

#include <chrono>
#include <map>

#include "bof/errors.hpp"
#include "bof/eval.hpp"
#include "bof/index.hpp"
#include "bof/rng.hpp"
#include "detail/io.hpp"

namespace bof {

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::kRandom: return "random";
    case Criterion::kScale: return "scale";
    case Criterion::kTf: return "tf";
    case Criterion::kIdf: return "idf";
    case Criterion::kTfIdf: return "tfidf";
    case Criterion::kRandomWords: return "random-words";
  }
  return "?";
}

std::string_view to_string(Site s) {
  switch (s) {
    case Site::kDataset: return "dataset";
    case Site::kQuery: return "query";
    case Site::kBoth: return "both";
  }
  return "?";
}

std::string_view to_string(Task t) { return t == Task::kRetrieval ? "retrieval" : "recognition"; }

Criterion parse_criterion(std::string_view s) {
  if (s == "random") return Criterion::kRandom;
  if (s == "scale") return Criterion::kScale;
  if (s == "tf") return Criterion::kTf;
  if (s == "idf") return Criterion::kIdf;
  if (s == "tfidf") return Criterion::kTfIdf;
  if (s == "random-words") return Criterion::kRandomWords;
  throw ConfigError("unknown criterion \"" + std::string(s) + "\"");
}

Site parse_site(std::string_view s) {
  if (s == "dataset") return Site::kDataset;
  if (s == "query") return Site::kQuery;
  if (s == "both") return Site::kBoth;
  throw ConfigError("unknown site \"" + std::string(s) + "\"");
}

Task parse_task(std::string_view s) {
  if (s == "retrieval") return Task::kRetrieval;
  if (s == "recognition") return Task::kRecognition;
  throw ConfigError("unknown task \"" + std::string(s) + "\"");
}

bool acts_on_features(Criterion c) { return c == Criterion::kRandom || c == Criterion::kScale; }

EvalData make_eval_data(std::vector<FeatureSet> dataset, std::vector<FeatureSet> queries, const Vocabulary& vocab,
                        LabelMap labels, std::vector<RetrievalGroundTruth> ground_truth) {
  EvalData data;
  data.dataset_bags = assign_corpus(dataset, vocab);
  data.query_bags = assign_corpus(queries, vocab);
  data.dataset_features = std::move(dataset);
  data.query_features = std::move(queries);
  data.labels = std::move(labels);
  data.ground_truth = std::move(ground_truth);
  return data;
}

namespace {

WordCriterion word_criterion(Criterion c) {
  switch (c) {
    case Criterion::kTf: return WordCriterion::kTf;
    case Criterion::kIdf: return WordCriterion::kIdf;
    case Criterion::kTfIdf: return WordCriterion::kTfIdf;
    case Criterion::kRandomWords: return WordCriterion::kRandom;
    default: throw InvariantError("not a word-level criterion");
  }
}

std::vector<BagOfWords> reduce(Criterion criterion, double retention, std::span<const FeatureSet> features,
                               std::span<const BagOfWords> bags, const CorpusStats& stats, const Vocabulary* vocab,
                               const SweepConfig& cfg) {
  const RetentionSpec keep = RetentionSpec::fraction(retention);
  if (!acts_on_features(criterion)) {
    WordPruneConfig wc;
    wc.criterion = word_criterion(criterion);
    wc.keep = keep;
    wc.tie_policy = cfg.tie_policy;
    wc.seed = cfg.seed;
    return prune_corpus(bags, stats, wc);
  }
  if (!vocab) throw ConfigError("criterion " + std::string(to_string(criterion)) + " needs features and a vocabulary");
  if (features.size() != bags.size())
    throw ConfigError("criterion " + std::string(to_string(criterion)) + " needs the features of every image");
  std::vector<BagOfWords> out;
  out.reserve(features.size());
  for (const FeatureSet& fs : features) {
    const FeatureSet kept = criterion == Criterion::kScale
                                ? prune_by_scale(fs, keep)
                                : prune_random_features(fs, keep, derive_seed(cfg.seed, fs.image_id()));
    out.push_back(assign_words(kept, *vocab));
  }
  return out;
}

}  // namespace

TaskScores evaluate_task(const InvertedIndex& ix, std::span<const BagOfWords> queries, Task task,
                         const LabelMap& labels, std::span<const RetrievalGroundTruth> ground_truth, std::size_t k,
                         bool timing) {
  using Clock = std::chrono::steady_clock;
  TaskScores scores;
  double total_us = 0.0;
  std::size_t timed = 0;
  auto timed_query = [&](const BagOfWords& q, std::size_t depth) {
    const auto start = Clock::now();
    RankedResult r = query(ix, q, depth);
    if (timing) {
      total_us += std::chrono::duration<double, std::micro>(Clock::now() - start).count();
      ++timed;
    }
    return r;
  };

  if (task == Task::kRetrieval) {
    std::map<std::string_view, const RetrievalGroundTruth*> by_query;
    for (const auto& gt : ground_truth) by_query.emplace(gt.query_id, &gt);
    std::vector<double> aps;
    for (const auto& q : queries) {
      const auto it = by_query.find(q.image_id());
      if (it == by_query.end()) continue;
      aps.push_back(average_precision(timed_query(q, k), *it->second));
    }
    if (aps.empty()) throw DataError("no query has retrieval ground truth");
    scores.metrics.emplace_back("map", mean_average_precision(aps));
  } else {
    if (!ix.has_labels()) throw DataError("recognition needs dataset labels");
    Predictions predictions;
    LabelMap truth;
    for (const auto& q : queries) {
      const auto it = labels.find(q.image_id());
      if (it == labels.end()) throw DataError("no label for query \"" + q.image_id() + "\"");
      truth.emplace(q.image_id(), it->second);
      const RankedResult top = timed_query(q, 1);
      predictions[q.image_id()] =
          top.empty() ? std::nullopt : std::optional<std::string>(ix.label(*ix.find(top.hits.front().image_id)));
    }
    scores.metrics.emplace_back("accuracy", accuracy(predictions, truth));
    scores.metrics.emplace_back("macro_f1", macro_f1(predictions, truth).macro_f1);
  }
  if (timed) scores.mean_query_us = total_us / static_cast<double>(timed);
  return scores;
}

std::vector<SweepPoint> run_sweep(const EvalData& data, const Vocabulary* vocab, const SweepConfig& cfg) {
  if (data.dataset_bags.empty()) throw DataError("sweep needs a non-empty dataset");
  if (data.query_bags.empty()) throw DataError("sweep needs queries");
  for (double p : cfg.retention) RetentionSpec::fraction(p);

  const CorpusStats stats = compute_corpus_stats(data.dataset_bags);
  const bool prune_dataset = cfg.site != Site::kQuery;
  const bool prune_queries = cfg.site != Site::kDataset;
  const std::optional<LabelMap> labels =
      cfg.task == Task::kRecognition ? std::optional<LabelMap>(data.labels) : std::nullopt;
  const InvertedIndex full_index = prune_dataset ? InvertedIndex{} : build_index(data.dataset_bags, labels);

  std::vector<SweepPoint> points;
  for (Criterion criterion : cfg.criteria) {
    for (double p : cfg.retention) {
      std::vector<BagOfWords> dataset, queries;
      if (prune_dataset)
        dataset = reduce(criterion, p, data.dataset_features, data.dataset_bags, stats, vocab, cfg);
      if (prune_queries)
        queries = reduce(criterion, p, data.query_features, data.query_bags, stats, vocab, cfg);

      const InvertedIndex pruned_index = prune_dataset ? build_index(dataset, labels) : InvertedIndex{};
      const InvertedIndex& ix = prune_dataset ? pruned_index : full_index;
      const std::span<const BagOfWords> qs = prune_queries ? std::span<const BagOfWords>(queries)
                                                          : std::span<const BagOfWords>(data.query_bags);
      const TaskScores scores =
          evaluate_task(ix, qs, cfg.task, data.labels, data.ground_truth, cfg.k, cfg.timing);

      std::vector<BagOfWords> reduced;
      if (prune_dataset) reduced.insert(reduced.end(), dataset.begin(), dataset.end());
      if (prune_queries) reduced.insert(reduced.end(), queries.begin(), queries.end());
      const CorpusSize size = measure_corpus(reduced);

      for (const auto& [name, value] : scores.metrics) {
        SweepPoint pt;
        pt.criterion = criterion;
        pt.site = cfg.site;
        pt.retention = p;
        pt.mean_tokens = size.mean_tokens;
        pt.mean_distinct = size.mean_distinct;
        pt.metric_name = name;
        pt.metric_value = value;
        if (cfg.timing) pt.mean_query_us = scores.mean_query_us;
        pt.seed = cfg.seed;
        points.push_back(std::move(pt));
      }
    }
  }
  return points;
}

std::string sweep_csv(std::span<const SweepPoint> points) {
  std::string out = "criterion,site,retention,mean_tokens,mean_distinct,metric_name,metric_value,mean_query_us,seed\n";
  for (const auto& p : points) {
    out += to_string(p.criterion);
    out += ',';
    out += to_string(p.site);
    out += ',';
    detail::append_number(out, p.retention);
    out += ',';
    detail::append_number(out, p.mean_tokens);
    out += ',';
    detail::append_number(out, p.mean_distinct);
    out += ',';
    out += p.metric_name;
    out += ',';
    detail::append_number(out, p.metric_value);
    out += ',';
    if (p.mean_query_us) detail::append_number(out, *p.mean_query_us);
    out += ',';
    detail::append_number(out, p.seed);
    out += '\n';
  }
  return out;
}

}  // namespace bof
