#pragma once

// Retrieval and recognition effectiveness measures.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bof/featureio.hpp"
#include "bof/ground_truth.hpp"
#include "bof/index.hpp"

namespace bof {

/// Non-interpolated average precision. Ignored ids are dropped from the
/// ranking first; then AP = (1/|positives|) * sum of precision@r over the
/// ranks r holding a positive. Throws ConfigError on empty positives or a
/// ranking with repeated ids.
double average_precision(const RankedResult& ranked, const RetrievalGroundTruth& gt);
double average_precision(std::span<const std::string> ranked_ids, const RetrievalGroundTruth& gt);

/// Arithmetic mean; throws ConfigError when empty.
double mean_average_precision(std::span<const double> aps);

// Recognition outcome per test image; nullopt means no match.
using Predictions = std::map<std::string, std::optional<std::string>>;

/// Fraction of truth items predicted correctly; "no match" counts as wrong.
/// Throws DataError unless both maps hold the same ids.
double accuracy(const Predictions& predictions, const LabelMap& truth);

struct ClassScores {
  std::uint64_t true_positives = 0;
  std::uint64_t false_positives = 0;
  std::uint64_t false_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct F1Report {
  double macro_f1 = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  std::map<std::string, ClassScores> per_class;  // classes present in truth
};

/// Per-class precision, recall and F1 (0/0 taken as 0), averaged without
/// weights over the classes present in truth.
F1Report macro_f1(const Predictions& predictions, const LabelMap& truth);

struct MicroScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Pooled counts over every class. For single-label predictions where every
/// item receives a label, all three equal accuracy().
MicroScores micro_scores(const Predictions& predictions, const LabelMap& truth);

}  // namespace bof
