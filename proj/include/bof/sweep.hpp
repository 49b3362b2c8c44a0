#pragma once

// Effectiveness sweeps: metric versus retained words for each reduction
// criterion, written as CSV for external plotting.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bof/bow.hpp"
#include "bof/featureio.hpp"
#include "bof/ground_truth.hpp"
#include "bof/index.hpp"
#include "bof/vocabulary.hpp"

namespace bof {

// random and scale act on features before assignment; the rest act on
// words. random-words is the word-level random baseline.
enum class Criterion { kRandom, kScale, kTf, kIdf, kTfIdf, kRandomWords };
enum class Site { kDataset, kQuery, kBoth };
enum class Task { kRetrieval, kRecognition };

std::string_view to_string(Criterion c);
std::string_view to_string(Site s);
std::string_view to_string(Task t);
Criterion parse_criterion(std::string_view s);  // random|scale|tf|idf|tfidf|random-words
Site parse_site(std::string_view s);            // dataset|query|both
Task parse_task(std::string_view s);            // retrieval|recognition
bool acts_on_features(Criterion c);

struct SweepConfig {
  std::vector<Criterion> criteria{Criterion::kRandom, Criterion::kScale, Criterion::kTf, Criterion::kIdf,
                                  Criterion::kTfIdf};
  std::vector<double> retention{1.0, 0.5, 0.25, 0.1};
  Site site = Site::kBoth;
  Task task = Task::kRecognition;
  TiePolicy tie_policy = TiePolicy::kKeepWholeTieGroup;
  std::uint64_t seed = 0;
  std::size_t k = 100;  // retrieval depth
  bool timing = false;  // wall-clock per query; makes output machine-dependent
};

/// Dataset and query images for a sweep. Features are needed only for the
/// feature-level criteria; bags are the unpruned assignments.
struct EvalData {
  std::vector<FeatureSet> dataset_features;
  std::vector<FeatureSet> query_features;
  std::vector<BagOfWords> dataset_bags;
  std::vector<BagOfWords> query_bags;
  LabelMap labels;
  std::vector<RetrievalGroundTruth> ground_truth;
};

/// Fills the bags by assigning the features against `vocab`.
EvalData make_eval_data(std::vector<FeatureSet> dataset, std::vector<FeatureSet> queries, const Vocabulary& vocab,
                        LabelMap labels, std::vector<RetrievalGroundTruth> ground_truth);

struct SweepPoint {
  Criterion criterion = Criterion::kTfIdf;
  Site site = Site::kBoth;
  double retention = 1.0;
  double mean_tokens = 0.0;    // per pruned image, after reduction
  double mean_distinct = 0.0;
  std::string metric_name;     // map | accuracy | macro_f1
  double metric_value = 0.0;
  std::optional<double> mean_query_us;
  std::uint64_t seed = 0;
};

struct TaskScores {
  std::vector<std::pair<std::string, double>> metrics;
  double mean_query_us = 0.0;
};

/// Retrieval: mAP over queries with ground truth (queries without it are
/// skipped; none at all is a DataError). Recognition: accuracy and macro-F1
/// of 1-NN labels against `labels`.
TaskScores evaluate_task(const InvertedIndex& ix, std::span<const BagOfWords> queries, Task task,
                         const LabelMap& labels, std::span<const RetrievalGroundTruth> ground_truth, std::size_t k,
                         bool timing);

/// For each criterion and retention: prune on the configured site(s), index
/// the (possibly pruned) dataset, run the task. Pruning statistics always
/// come from the unpruned dataset bags. Random draws per image use
/// derive_seed(seed, image_id). Rows come out in criterion order, then
/// retention order, then metric.
std::vector<SweepPoint> run_sweep(const EvalData& data, const Vocabulary* vocab, const SweepConfig& cfg);

// Columns: criterion,site,retention,mean_tokens,mean_distinct,metric_name,
// metric_value,mean_query_us,seed. mean_query_us is empty without timing.
std::string sweep_csv(std::span<const SweepPoint> points);

}  // namespace bof
