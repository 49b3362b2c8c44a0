#include "bof/eval.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"

#include "bof/errors.hpp"
#include "detail/io.hpp"

namespace bof {

namespace {

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

void check_same_ids(const Predictions& predictions, const LabelMap& truth) {
  if (predictions.size() != truth.size() ||
      !std::equal(predictions.begin(), predictions.end(), truth.begin(),
                  [](const auto& p, const auto& t) { return p.first == t.first; }))
    throw DataError("predictions and truth cover different image ids");
}

}  // namespace

double average_precision(std::span<const std::string> ranked_ids, const RetrievalGroundTruth& gt) {
  if (gt.positives.empty()) throw ConfigError("query " + gt.query_id + " has no positives");
  std::set<std::string_view> seen;
  std::size_t rank = 0, hits = 0;
  double sum = 0.0;
  for (const auto& id : ranked_ids) {
    if (!seen.insert(id).second) throw ConfigError("ranking repeats image id " + id);
    if (gt.ignored.contains(id)) continue;
    ++rank;
    if (gt.positives.contains(id)) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank);
    }
  }
  return sum / static_cast<double>(gt.positives.size());
}

double average_precision(const RankedResult& ranked, const RetrievalGroundTruth& gt) {
  std::vector<std::string> ids;
  ids.reserve(ranked.size());
  for (const auto& h : ranked.hits) ids.push_back(h.image_id);
  return average_precision(ids, gt);
}

double mean_average_precision(std::span<const double> aps) {
  if (aps.empty()) throw ConfigError("mAP of zero queries");
  double sum = 0.0;
  for (double ap : aps) sum += ap;
  return sum / static_cast<double>(aps.size());
}

double accuracy(const Predictions& predictions, const LabelMap& truth) {
  check_same_ids(predictions, truth);
  if (truth.empty()) throw ConfigError("accuracy of an empty test set");
  std::size_t correct = 0;
  for (const auto& [id, label] : truth) {
    const auto& p = predictions.at(id);
    if (p && *p == label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

F1Report macro_f1(const Predictions& predictions, const LabelMap& truth) {
  check_same_ids(predictions, truth);
  if (truth.empty()) throw ConfigError("macro-F1 of an empty test set");
  F1Report report;
  for (const auto& [id, label] : truth) report.per_class[label];
  for (const auto& [id, label] : truth) {
    const auto& p = predictions.at(id);
    if (p && *p == label) {
      ++report.per_class[label].true_positives;
      continue;
    }
    ++report.per_class[label].false_negatives;
    if (p) {
      const auto it = report.per_class.find(*p);
      if (it != report.per_class.end()) ++it->second.false_positives;
    }
  }
  for (auto& [cls, s] : report.per_class) {
    const double tp = static_cast<double>(s.true_positives);
    s.precision = safe_ratio(tp, tp + static_cast<double>(s.false_positives));
    s.recall = safe_ratio(tp, tp + static_cast<double>(s.false_negatives));
    s.f1 = safe_ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
    report.macro_f1 += s.f1;
    report.macro_precision += s.precision;
    report.macro_recall += s.recall;
  }
  const double classes = static_cast<double>(report.per_class.size());
  report.macro_f1 /= classes;
  report.macro_precision /= classes;
  report.macro_recall /= classes;
  return report;
}

MicroScores micro_scores(const Predictions& predictions, const LabelMap& truth) {
  check_same_ids(predictions, truth);
  std::uint64_t tp = 0, fp = 0, fn = 0;
  for (const auto& [id, label] : truth) {
    const auto& p = predictions.at(id);
    if (p && *p == label) {
      ++tp;
    } else {
      ++fn;
      if (p) ++fp;
    }
  }
  MicroScores m;
  m.precision = safe_ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
  m.recall = safe_ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
  m.f1 = safe_ratio(2.0 * static_cast<double>(tp), static_cast<double>(2 * tp + fp + fn));
  return m;
}

// Ground truth files.

namespace {

RetrievalGroundTruth gt_from_json(const nlohmann::json& j, const std::string& source) {
  if (!j.is_object() || !j.contains("query_id") || !j.contains("positives"))
    throw DataError(source + ": ground-truth record needs query_id and positives");
  RetrievalGroundTruth gt;
  gt.query_id = j.at("query_id").get<std::string>();
  for (const auto& p : j.at("positives")) gt.positives.insert(p.get<std::string>());
  if (j.contains("ignored"))
    for (const auto& p : j.at("ignored")) gt.ignored.insert(p.get<std::string>());
  for (const auto& p : gt.positives)
    if (gt.ignored.contains(p)) throw DataError(source + ": " + p + " is both positive and ignored");
  if (gt.positives.empty()) throw DataError(source + ": query " + gt.query_id + " has no positives");
  return gt;
}

std::vector<std::string> read_names(const std::filesystem::path& path) {
  std::vector<std::string> names;
  if (!std::filesystem::exists(path)) return names;
  const std::string text = detail::read_text(path);
  for (const auto& line : detail::split_lines(text)) {
    const auto fields = detail::split_ws(line.text);
    if (!fields.empty()) names.emplace_back(fields[0]);
  }
  return names;
}

}  // namespace

std::vector<RetrievalGroundTruth> load_ground_truth_json(const std::filesystem::path& path) {
  const std::string text = detail::read_text(path);
  const std::string source = path.string();
  std::vector<RetrievalGroundTruth> out;
  try {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
      for (const auto& rec : nlohmann::json::parse(text)) out.push_back(gt_from_json(rec, source));
    } else {
      for (const auto& line : detail::split_lines(text)) {
        if (line.text.find_first_not_of(" \t") == std::string_view::npos) continue;
        out.push_back(gt_from_json(nlohmann::json::parse(line.text), source));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(source + ": " + e.what());
  }
  return out;
}

void save_ground_truth_json(const std::vector<RetrievalGroundTruth>& gt, const std::filesystem::path& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& g : gt)
    arr.push_back({{"query_id", g.query_id}, {"positives", g.positives}, {"ignored", g.ignored}});
  detail::write_text(path, arr.dump(1) + "\n");
}

std::vector<RetrievalGroundTruth> load_ground_truth_oxford(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> queries;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 10 && name.ends_with("_query.txt")) queries.push_back(entry.path());
  }
  std::sort(queries.begin(), queries.end());
  std::vector<RetrievalGroundTruth> out;
  for (const auto& qpath : queries) {
    const std::string name = qpath.filename().string();
    const std::string stem = name.substr(0, name.size() - std::string("_query.txt").size());
    const auto qnames = read_names(qpath);
    if (qnames.empty()) throw DataError(qpath.string() + ": empty query file");
    RetrievalGroundTruth gt;
    gt.query_id = qnames.front();
    if (gt.query_id.starts_with("oxc1_")) gt.query_id.erase(0, 5);
    for (const char* suffix : {"_good.txt", "_ok.txt"})
      for (auto& n : read_names(dir / (stem + suffix))) gt.positives.insert(std::move(n));
    for (auto& n : read_names(dir / (stem + "_junk.txt"))) gt.ignored.insert(std::move(n));
    for (const auto& p : gt.positives) gt.ignored.erase(p);
    if (gt.positives.empty()) throw DataError(qpath.string() + ": query has no good/ok images");
    out.push_back(std::move(gt));
  }
  if (out.empty()) throw DataError(dir.string() + ": no *_query.txt files");
  return out;
}

std::vector<RetrievalGroundTruth> load_ground_truth(const std::filesystem::path& path) {
  return std::filesystem::is_directory(path) ? load_ground_truth_oxford(path) : load_ground_truth_json(path);
}

}  // namespace bof
