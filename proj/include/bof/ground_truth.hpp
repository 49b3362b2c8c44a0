#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace bof {

// Relevance judgments for one retrieval query. `positives` are the good and
// ok results; `ignored` (junk/ambiguous) are dropped from rankings before
// scoring.
struct RetrievalGroundTruth {
  std::string query_id;
  std::set<std::string> positives;
  std::set<std::string> ignored;

  friend bool operator==(const RetrievalGroundTruth&, const RetrievalGroundTruth&) = default;
};

// JSON: an array (or JSON Lines) of {"query_id", "positives", "ignored"}.
std::vector<RetrievalGroundTruth> load_ground_truth_json(const std::filesystem::path& path);
void save_ground_truth_json(const std::vector<RetrievalGroundTruth>& gt, const std::filesystem::path& path);

// Oxford Buildings layout: <name>_query.txt whose first token is the query
// image (an "oxc1_" prefix is stripped; the ROI is ignored), plus
// <name>_good.txt, <name>_ok.txt and <name>_junk.txt listing image names.
std::vector<RetrievalGroundTruth> load_ground_truth_oxford(const std::filesystem::path& dir);

// Picks the loader from the path: a directory is read as Oxford layout,
// anything else as JSON.
std::vector<RetrievalGroundTruth> load_ground_truth(const std::filesystem::path& path);

}  // namespace bof
