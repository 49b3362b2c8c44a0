#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bof/bench.hpp"
#include "bof/bow.hpp"
#include "bof/errors.hpp"
#include "bof/eval.hpp"
#include "bof/featureio.hpp"
#include "bof/ground_truth.hpp"
#include "bof/index.hpp"
#include "bof/kernels.hpp"
#include "bof/rng.hpp"
#include "bof/sweep.hpp"
#include "bof/synthetic.hpp"
#include "bof/vocabulary.hpp"
#include "json.hpp"

namespace bof::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

void write_string(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

RetentionSpec retention_from(const std::optional<double>& fraction, const std::optional<std::uint64_t>& count) {
  if (fraction && count) throw ConfigError("give either --retention or --keep-count, not both");
  if (count) return RetentionSpec::absolute(*count);
  return RetentionSpec::fraction(fraction.value_or(1.0));
}

LabelMap labels_for(const LabelMap& all, std::span<const BagOfWords> bags) {
  LabelMap out;
  for (const auto& b : bags) {
    const auto it = all.find(b.image_id());
    if (it == all.end()) throw DataError("no label for image \"" + b.image_id() + "\"");
    out.emplace(b.image_id(), it->second);
  }
  return out;
}

Json ranked_json(const RankedResult& r) {
  Json hits = Json::array();
  for (const auto& h : r.hits) hits.push_back({{"image_id", h.image_id}, {"score", h.score}});
  return hits;
}

Json size_json(const IndexSizeReport& r) {
  return {{"documents", r.documents},
          {"distinct_words", r.distinct_words},
          {"total_postings", r.total_postings},
          {"mean_posting_length", r.mean_posting_length}};
}

// ---------------------------------------------------------------------------
// Option sets, one per subcommand. Defaults mirror the library defaults.

struct GenSyntheticArgs {
  fs::path out;
  SyntheticConfig cfg;
};

struct BuildVocabArgs {
  fs::path manifest, out;
  KMeansConfig cfg;
  std::optional<std::uint64_t> sample_cap;
};

struct AssignArgs {
  fs::path manifest, vocab, out;
};

struct PruneFeaturesArgs {
  fs::path manifest, out_dir;
  std::string criterion = "scale";
  std::optional<double> retention;
  std::optional<std::uint64_t> keep_count;
  std::uint64_t seed = 0;
};

struct PruneWordsArgs {
  fs::path bow, out, stats;
  std::string criterion = "tfidf";
  std::optional<double> retention;
  std::optional<std::uint64_t> keep_count;
  std::string tie_policy = "whole";
  std::uint64_t seed = 0;
};

struct BuildIndexArgs {
  fs::path bow, out, labels, stats_out;
  bool stats = false;
};

struct QueryArgs {
  fs::path index, bow, out;
  std::size_t k = 100;
};

struct ClassifyArgs {
  fs::path index, bow, out;
};

struct EvalRetrievalArgs {
  fs::path index, queries, ground_truth, out;
  std::size_t k = 100;
};

struct EvalRecognitionArgs {
  fs::path index, queries, labels, out;
};

struct SweepArgs {
  fs::path dataset, queries, vocab, dataset_bow, query_bow, labels, ground_truth, out;
  std::vector<std::string> criteria{"random", "scale", "tf", "idf", "tfidf"};
  std::vector<double> retention{1.0, 0.5, 0.25, 0.1};
  std::string site = "both";
  std::string task = "recognition";
  std::string tie_policy = "whole";
  std::uint64_t seed = 0;
  std::size_t k = 100;
  bool timing = false;
};

struct BenchArgs {
  BenchConfig cfg;
  std::string site = "both";
  std::string criterion = "tfidf";
  std::string tie_policy = "exact";
  fs::path dataset_bow, query_bow, out;
};

struct IndexStatsArgs {
  fs::path index;
};

// ---------------------------------------------------------------------------
// Subcommand bodies. Each returns the JSON summary.

Json gen_synthetic(const GenSyntheticArgs& a) {
  const SyntheticCorpus corpus = generate_synthetic_corpus(a.cfg);
  const fs::path features = a.out / "features";
  fs::create_directories(features);
  auto save_all = [&](const std::vector<FeatureSet>& sets, const std::string& manifest) {
    std::vector<ManifestEntry> entries;
    for (const auto& f : sets) {
      const std::string rel = "features/" + f.image_id() + ".boff";
      save_features(f, a.out / rel);
      entries.push_back({f.image_id(), rel});
    }
    write_manifest(entries, a.out / manifest);
  };
  save_all(corpus.dataset, "dataset.tsv");
  save_all(corpus.queries, "queries.tsv");
  write_labels(corpus.labels, a.out / "labels.tsv");
  save_ground_truth_json(corpus.ground_truth, a.out / "ground_truth.json");
  return {{"dataset_images", corpus.dataset.size()},
          {"query_images", corpus.queries.size()},
          {"classes", a.cfg.num_classes},
          {"features_per_image", a.cfg.features_per_image},
          {"dimensionality", a.cfg.dimensionality},
          {"outputs",
           {{"dataset_manifest", (a.out / "dataset.tsv").string()},
            {"query_manifest", (a.out / "queries.tsv").string()},
            {"labels", (a.out / "labels.tsv").string()},
            {"ground_truth", (a.out / "ground_truth.json").string()}}}};
}

Json build_vocab(BuildVocabArgs a) {
  a.cfg.sample_cap = a.sample_cap;
  const auto corpus = load_corpus(a.manifest);
  const KMeansResult r = build_vocabulary_traced(corpus, a.cfg);
  ensure_parent(a.out);
  save_vocabulary(r.vocabulary, a.out);
  const auto& best = r.runs.at(r.best_run);
  return {{"images", corpus.size()},
          {"descriptors_used", r.sample_size},
          {"k", r.vocabulary.size()},
          {"dimensionality", r.vocabulary.dimensionality()},
          {"inertia", r.inertia},
          {"iterations", best.inertia.size() - 1},
          {"converged", best.converged},
          {"restarts", r.runs.size()},
          {"distance_kernel", std::string(kernels::level_name(kernels::active_level()))},
          {"outputs", {{"vocabulary", a.out.string()}}}};
}

Json assign(const AssignArgs& a) {
  const Vocabulary vocab = load_vocabulary(a.vocab);
  const auto corpus = load_corpus(a.manifest);
  const auto bags = assign_corpus(corpus, vocab);
  ensure_parent(a.out);
  save_bow(bags, a.out);
  const CorpusSize size = measure_corpus(bags);
  return {{"images", bags.size()},
          {"mean_tokens", size.mean_tokens},
          {"mean_distinct", size.mean_distinct},
          {"outputs", {{"bow", a.out.string()}}}};
}

Json prune_features(const PruneFeaturesArgs& a) {
  const Criterion criterion = parse_criterion(a.criterion);
  if (criterion != Criterion::kScale && criterion != Criterion::kRandom)
    throw ConfigError("prune-features criterion must be scale or random");
  const RetentionSpec keep = retention_from(a.retention, a.keep_count);
  const auto entries = read_manifest(a.manifest);
  fs::create_directories(a.out_dir / "features");
  std::vector<ManifestEntry> out_entries;
  std::uint64_t before = 0, after = 0;
  for (const auto& e : entries) {
    FeatureSet f = load_features(e.path);
    f.set_image_id(e.image_id);
    const FeatureSet kept = criterion == Criterion::kScale
                                ? prune_by_scale(f, keep)
                                : prune_random_features(f, keep, derive_seed(a.seed, e.image_id));
    before += f.size();
    after += kept.size();
    const std::string rel = "features/" + e.image_id + ".boff";
    save_features(kept, a.out_dir / rel);
    out_entries.push_back({e.image_id, rel});
  }
  write_manifest(out_entries, a.out_dir / "manifest.tsv");
  const double n = entries.empty() ? 1.0 : static_cast<double>(entries.size());
  return {{"images", entries.size()},
          {"criterion", a.criterion},
          {"mean_features_before", static_cast<double>(before) / n},
          {"mean_features_after", static_cast<double>(after) / n},
          {"outputs", {{"manifest", (a.out_dir / "manifest.tsv").string()}}}};
}

Json prune_words_cmd(const PruneWordsArgs& a) {
  WordPruneConfig cfg;
  cfg.criterion = parse_word_criterion(a.criterion);
  cfg.keep = retention_from(a.retention, a.keep_count);
  cfg.tie_policy = parse_tie_policy(a.tie_policy);
  cfg.seed = a.seed;
  const auto bags = load_bow(a.bow);
  if (bags.empty()) throw DataError(a.bow.string() + ": no images");
  const CorpusStats stats = a.stats.empty() ? compute_corpus_stats(bags) : load_corpus_stats(a.stats);
  const auto pruned = prune_corpus(bags, stats, cfg);
  ensure_parent(a.out);
  save_bow(pruned, a.out);
  const ReductionStats r = corpus_reduction_report(bags, pruned);
  return {{"images", bags.size()},
          {"criterion", a.criterion},
          {"tie_policy", a.tie_policy},
          {"stats_source", a.stats.empty() ? std::string("input") : a.stats.string()},
          {"before", {{"mean_tokens", r.before.mean_tokens}, {"mean_distinct", r.before.mean_distinct}}},
          {"after", {{"mean_tokens", r.after.mean_tokens}, {"mean_distinct", r.after.mean_distinct}}},
          {"outputs", {{"bow", a.out.string()}}}};
}

Json build_index_cmd(const BuildIndexArgs& a) {
  const auto bags = load_bow(a.bow);
  std::optional<LabelMap> labels;
  if (!a.labels.empty()) labels = labels_for(read_labels(a.labels), bags);
  const InvertedIndex ix = build_index(bags, labels);
  ensure_parent(a.out);
  save_index(ix, a.out);
  Json outputs = {{"index", a.out.string()}};
  if (!a.stats_out.empty()) {
    ensure_parent(a.stats_out);
    save_corpus_stats(ix.stats(), a.stats_out);
    outputs["corpus_stats"] = a.stats_out.string();
  }
  Json summary = {{"documents", ix.num_documents()}, {"labeled", ix.has_labels()}};
  if (a.stats) summary["stats"] = size_json(index_size_report(ix));
  summary["outputs"] = outputs;
  return summary;
}

Json query_cmd(const QueryArgs& a) {
  if (a.k == 0) throw ConfigError("--k must be positive");
  const InvertedIndex ix = load_index(a.index);
  const auto queries = load_bow(a.bow);
  Json results = Json::array();
  std::uint64_t touched = 0;
  for (const auto& q : queries) {
    QueryCost cost;
    const RankedResult r = query(ix, q, a.k, &cost);
    touched += cost.postings_touched;
    results.push_back({{"query_id", q.image_id()}, {"postings_touched", cost.postings_touched}, {"hits", ranked_json(r)}});
  }
  Json summary = {{"queries", queries.size()}, {"k", a.k}, {"postings_touched", touched}};
  if (a.out.empty()) {
    summary["results"] = std::move(results);
  } else {
    write_string(a.out, results.dump(2) + "\n");
    summary["outputs"] = {{"results", a.out.string()}};
  }
  return summary;
}

Json classify_cmd(const ClassifyArgs& a) {
  const InvertedIndex ix = load_index(a.index);
  const auto queries = load_bow(a.bow);
  Json predictions = Json::object();
  std::size_t no_match = 0;
  for (const auto& q : queries) {
    const Classification c = classify_1nn(ix, q);
    if (c.label) {
      predictions[q.image_id()] = {{"label", *c.label}, {"image_id", c.best->image_id}, {"score", c.best->score}};
    } else {
      predictions[q.image_id()] = {{"label", nullptr}};
      ++no_match;
    }
  }
  Json summary = {{"queries", queries.size()}, {"no_match", no_match}};
  if (a.out.empty()) {
    summary["predictions"] = std::move(predictions);
  } else {
    write_string(a.out, predictions.dump(2) + "\n");
    summary["outputs"] = {{"predictions", a.out.string()}};
  }
  return summary;
}

Json eval_retrieval(const EvalRetrievalArgs& a) {
  if (a.k == 0) throw ConfigError("--k must be positive");
  const InvertedIndex ix = load_index(a.index);
  const auto queries = load_bow(a.queries);
  const auto truth = load_ground_truth(a.ground_truth);
  std::map<std::string_view, const RetrievalGroundTruth*> by_query;
  for (const auto& g : truth) by_query.emplace(g.query_id, &g);
  std::vector<double> aps;
  Json per_query = Json::object();
  for (const auto& q : queries) {
    const auto it = by_query.find(q.image_id());
    if (it == by_query.end()) continue;
    aps.push_back(average_precision(query(ix, q, a.k), *it->second));
    per_query[q.image_id()] = aps.back();
  }
  if (aps.empty()) throw DataError("no query has retrieval ground truth");
  Json summary = {{"queries_evaluated", aps.size()},
                  {"queries_skipped", queries.size() - aps.size()},
                  {"k", a.k},
                  {"map", mean_average_precision(aps)}};
  if (a.out.empty()) {
    summary["average_precision"] = std::move(per_query);
  } else {
    write_string(a.out, per_query.dump(2) + "\n");
    summary["outputs"] = {{"average_precision", a.out.string()}};
  }
  return summary;
}

Json eval_recognition(const EvalRecognitionArgs& a) {
  const InvertedIndex ix = load_index(a.index);
  const auto queries = load_bow(a.queries);
  const LabelMap truth = labels_for(read_labels(a.labels), queries);
  Predictions predictions;
  for (const auto& q : queries) predictions[q.image_id()] = classify_1nn(ix, q).label;
  const F1Report f1 = macro_f1(predictions, truth);
  const MicroScores micro = micro_scores(predictions, truth);
  Json per_class = Json::object();
  for (const auto& [label, s] : f1.per_class)
    per_class[label] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
                        {"true_positives", s.true_positives}, {"false_positives", s.false_positives},
                        {"false_negatives", s.false_negatives}};
  const auto no_match = std::count_if(predictions.begin(), predictions.end(), [](const auto& p) { return !p.second; });
  Json summary = {{"queries", queries.size()},
                  {"no_match", no_match},
                  {"accuracy", accuracy(predictions, truth)},
                  {"macro_f1", f1.macro_f1},
                  {"macro_precision", f1.macro_precision},
                  {"macro_recall", f1.macro_recall},
                  {"micro", {{"precision", micro.precision}, {"recall", micro.recall}, {"f1", micro.f1}}}};
  if (a.out.empty()) {
    summary["per_class"] = std::move(per_class);
  } else {
    write_string(a.out, per_class.dump(2) + "\n");
    summary["outputs"] = {{"per_class", a.out.string()}};
  }
  return summary;
}

Json sweep_cmd(const SweepArgs& a) {
  SweepConfig cfg;
  cfg.criteria.clear();
  for (const auto& c : a.criteria) cfg.criteria.push_back(parse_criterion(c));
  cfg.retention = a.retention;
  for (double p : cfg.retention) RetentionSpec::fraction(p);  // validates
  cfg.site = parse_site(a.site);
  cfg.task = parse_task(a.task);
  cfg.tie_policy = parse_tie_policy(a.tie_policy);
  cfg.seed = a.seed;
  cfg.k = a.k;
  cfg.timing = a.timing;

  const bool from_features = !a.dataset.empty() || !a.queries.empty();
  const bool from_bags = !a.dataset_bow.empty() || !a.query_bow.empty();
  if (from_features == from_bags)
    throw ConfigError("sweep takes either --dataset/--queries/--vocab or --dataset-bow/--query-bow");
  EvalData data;
  std::optional<Vocabulary> vocab;
  LabelMap labels = a.labels.empty() ? LabelMap{} : read_labels(a.labels);
  std::vector<RetrievalGroundTruth> truth;
  if (!a.ground_truth.empty()) truth = load_ground_truth(a.ground_truth);
  if (from_features) {
    if (a.dataset.empty() || a.queries.empty() || a.vocab.empty())
      throw ConfigError("sweep over features needs --dataset, --queries and --vocab");
    vocab = load_vocabulary(a.vocab);
    data = make_eval_data(load_corpus(a.dataset), load_corpus(a.queries), *vocab, std::move(labels), std::move(truth));
  } else {
    if (a.dataset_bow.empty() || a.query_bow.empty())
      throw ConfigError("sweep over bags needs --dataset-bow and --query-bow");
    data.dataset_bags = load_bow(a.dataset_bow);
    data.query_bags = load_bow(a.query_bow);
    data.labels = std::move(labels);
    data.ground_truth = std::move(truth);
  }
  if (cfg.task == Task::kRecognition && a.labels.empty()) throw ConfigError("recognition sweep needs --labels");
  if (cfg.task == Task::kRetrieval && a.ground_truth.empty())
    throw ConfigError("retrieval sweep needs --ground-truth");

  const auto points = run_sweep(data, vocab ? &*vocab : nullptr, cfg);
  const std::string csv = sweep_csv(points);
  Json summary = {{"points", points.size()}, {"task", a.task}, {"site", a.site}};
  if (a.out.empty()) {
    summary["csv"] = csv;
  } else {
    write_string(a.out, csv);
    summary["outputs"] = {{"csv", a.out.string()}};
  }
  return summary;
}

Json bench_cmd(BenchArgs a) {
  a.cfg.site = parse_bench_site(a.site);
  a.cfg.criterion = parse_word_criterion(a.criterion);
  a.cfg.tie_policy = parse_tie_policy(a.tie_policy);
  for (double p : a.cfg.retention) RetentionSpec::fraction(p);
  std::vector<BenchRow> rows;
  if (a.dataset_bow.empty() != a.query_bow.empty())
    throw ConfigError("bench over files needs both --dataset-bow and --query-bow");
  if (a.dataset_bow.empty()) {
    rows = run_bench(a.cfg);
  } else {
    rows = run_bench(a.cfg, load_bow(a.dataset_bow), load_bow(a.query_bow));
  }
  const std::string csv = bench_csv(rows);
  Json summary = {{"rows", rows.size()}, {"site", a.site}};
  if (a.out.empty()) {
    summary["csv"] = csv;
  } else {
    write_string(a.out, csv);
    summary["outputs"] = {{"csv", a.out.string()}};
  }
  return summary;
}

Json index_stats(const IndexStatsArgs& a) {
  const InvertedIndex ix = load_index(a.index);
  Json summary = size_json(index_size_report(ix));
  summary["labeled"] = ix.has_labels();
  return summary;
}

// ---------------------------------------------------------------------------
// --config: a JSON object whose keys are long option names without the
// dashes. Top-level keys apply to any subcommand that has the option; an
// object under the subcommand's own name applies to it alone and must only
// name its options. Command-line flags win.

bool flag_given(const std::vector<std::string>& args, const std::string& name) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == name || a.rfind(name + "=", 0) == 0; });
}

std::string scalar_text(const Json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer() || v.is_number_unsigned() || v.is_number_float()) return v.dump();
  throw ConfigError("config key \"" + key + "\" must be a string or number");
}

std::vector<std::string> apply_config(std::vector<std::string> args, CLI::App* sub) {
  std::optional<std::string> config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (!config_path || !sub) return args;

  Json config;
  {
    std::ifstream in(*config_path);
    if (!in) throw ConfigError("cannot open config " + *config_path);
    try {
      config = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw ConfigError("config " + *config_path + ": " + e.what());
    }
  }
  if (!config.is_object()) throw ConfigError("config " + *config_path + " must hold a JSON object");

  auto apply = [&](const std::string& key, const Json& value, bool strict) {
    const std::string name = "--" + key;
    CLI::Option* opt = sub->get_option_no_throw(name);
    if (!opt || key == "config") {
      if (strict) throw ConfigError("config: " + sub->get_name() + " has no option " + name);
      return;
    }
    if (flag_given(args, name)) return;
    if (value.is_boolean()) {
      if (opt->get_expected_max() != 0) throw ConfigError("config key \"" + key + "\" is not a flag");
      if (value.get<bool>()) args.push_back(name);
    } else if (value.is_array()) {
      if (value.empty()) return;
      args.push_back(name);
      for (const auto& v : value) args.push_back(scalar_text(v, key));
    } else {
      args.push_back(name);
      args.push_back(scalar_text(value, key));
    }
  };
  for (const auto& [key, value] : config.items())
    if (!value.is_object()) apply(key, value, false);
  if (config.contains(sub->get_name())) {
    const Json& section = config.at(sub->get_name());
    if (!section.is_object()) throw ConfigError("config section \"" + sub->get_name() + "\" must be an object");
    for (const auto& [key, value] : section.items()) apply(key, value, true);
  }
  return args;
}

// ---------------------------------------------------------------------------

Json error_json(const std::string& kind, const std::string& message, int code) {
  return {{"error", kind}, {"message", message}, {"exit_code", code}};
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bag-of-features image retrieval with visual-word reduction", "bof"};
  app.require_subcommand(1);
  std::string config_path;
  auto add_config = [&](CLI::App* s) {
    s->add_option("--config", config_path, "JSON file with option defaults");
  };

  GenSyntheticArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "Write a planted synthetic corpus");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--classes", gen.cfg.num_classes)->capture_default_str();
  gen_cmd->add_option("--images-per-class", gen.cfg.images_per_class)->capture_default_str();
  gen_cmd->add_option("--train-per-class", gen.cfg.train_per_class, "Dataset images per class; the rest are queries")
      ->capture_default_str();
  gen_cmd->add_option("--features", gen.cfg.features_per_image)->capture_default_str();
  gen_cmd->add_option("--dim", gen.cfg.dimensionality)->capture_default_str();
  gen_cmd->add_option("--clusters", gen.cfg.clusters_per_class, "Planted clusters per class")->capture_default_str();
  gen_cmd->add_option("--noise", gen.cfg.noise_fraction, "Fraction of uniform noise features")->capture_default_str();
  gen_cmd->add_option("--jitter", gen.cfg.jitter_sigma)->capture_default_str();
  gen_cmd->add_option("--seed", gen.cfg.seed)->capture_default_str();
  add_config(gen_cmd);

  BuildVocabArgs vocab;
  vocab.cfg.seed = 0;
  auto* vocab_cmd = app.add_subcommand("build-vocab", "Cluster descriptors into a vocabulary");
  vocab_cmd->add_option("--manifest", vocab.manifest)->required();
  vocab_cmd->add_option("--out", vocab.out)->required();
  vocab_cmd->add_option("--k", vocab.cfg.k, "Vocabulary size")->capture_default_str();
  vocab_cmd->add_option("--max-iterations", vocab.cfg.max_iterations)->capture_default_str();
  vocab_cmd->add_option("--tolerance", vocab.cfg.tolerance)->capture_default_str();
  vocab_cmd->add_option("--restarts", vocab.cfg.restarts)->capture_default_str();
  vocab_cmd->add_option("--sample-cap", vocab.sample_cap, "Cluster a uniform sample of this many descriptors");
  vocab_cmd->add_option("--seed", vocab.cfg.seed)->capture_default_str();
  add_config(vocab_cmd);

  AssignArgs assign_args;
  auto* assign_cmd = app.add_subcommand("assign", "Quantize features into bags of words");
  assign_cmd->add_option("--manifest", assign_args.manifest)->required();
  assign_cmd->add_option("--vocab", assign_args.vocab)->required();
  assign_cmd->add_option("--out", assign_args.out)->required();
  add_config(assign_cmd);

  PruneFeaturesArgs pf;
  auto* pf_cmd = app.add_subcommand("prune-features", "Drop features before assignment");
  pf_cmd->add_option("--manifest", pf.manifest)->required();
  pf_cmd->add_option("--out-dir", pf.out_dir)->required();
  pf_cmd->add_option("--criterion", pf.criterion, "scale | random")->capture_default_str();
  pf_cmd->add_option("--retention", pf.retention, "Fraction of features to keep");
  pf_cmd->add_option("--keep-count", pf.keep_count, "Features to keep per image");
  pf_cmd->add_option("--seed", pf.seed)->capture_default_str();
  add_config(pf_cmd);

  PruneWordsArgs pw;
  auto* pw_cmd = app.add_subcommand("prune-words", "Drop whole visual words from bags");
  pw_cmd->add_option("--bow", pw.bow)->required();
  pw_cmd->add_option("--out", pw.out)->required();
  pw_cmd->add_option("--stats", pw.stats, "Corpus statistics file (default: computed from --bow)");
  pw_cmd->add_option("--criterion", pw.criterion, "random | tf | idf | tfidf")->capture_default_str();
  pw_cmd->add_option("--retention", pw.retention, "Fraction of tokens to keep");
  pw_cmd->add_option("--keep-count", pw.keep_count, "Tokens to keep per image");
  pw_cmd->add_option("--tie-policy", pw.tie_policy, "whole | exact")->capture_default_str();
  pw_cmd->add_option("--seed", pw.seed)->capture_default_str();
  add_config(pw_cmd);

  BuildIndexArgs bi;
  auto* bi_cmd = app.add_subcommand("build-index", "Build an inverted index");
  bi_cmd->add_option("--bow", bi.bow)->required();
  bi_cmd->add_option("--out", bi.out)->required();
  bi_cmd->add_option("--labels", bi.labels, "Label file for recognition");
  bi_cmd->add_flag("--stats", bi.stats, "Include index size statistics in the summary");
  bi_cmd->add_option("--stats-out", bi.stats_out, "Also write the corpus statistics file");
  add_config(bi_cmd);

  QueryArgs qa;
  auto* q_cmd = app.add_subcommand("query", "Rank indexed images for each query bag");
  q_cmd->add_option("--index", qa.index)->required();
  q_cmd->add_option("--bow", qa.bow)->required();
  q_cmd->add_option("--k", qa.k)->capture_default_str();
  q_cmd->add_option("--out", qa.out, "Write results here instead of the summary");
  add_config(q_cmd);

  ClassifyArgs ca;
  auto* c_cmd = app.add_subcommand("classify", "Label each query by its nearest indexed image");
  c_cmd->add_option("--index", ca.index)->required();
  c_cmd->add_option("--bow", ca.bow)->required();
  c_cmd->add_option("--out", ca.out, "Write predictions here instead of the summary");
  add_config(c_cmd);

  EvalRetrievalArgs er;
  auto* er_cmd = app.add_subcommand("eval-retrieval", "Mean average precision of an index");
  er_cmd->add_option("--index", er.index)->required();
  er_cmd->add_option("--queries", er.queries, "Query bags")->required();
  er_cmd->add_option("--ground-truth", er.ground_truth, "JSON file or Oxford ground-truth directory")->required();
  er_cmd->add_option("--k", er.k)->capture_default_str();
  er_cmd->add_option("--out", er.out, "Write per-query AP here instead of the summary");
  add_config(er_cmd);

  EvalRecognitionArgs ec;
  auto* ec_cmd = app.add_subcommand("eval-recognition", "Accuracy and macro-F1 of 1-NN labels");
  ec_cmd->add_option("--index", ec.index)->required();
  ec_cmd->add_option("--queries", ec.queries, "Query bags")->required();
  ec_cmd->add_option("--labels", ec.labels)->required();
  ec_cmd->add_option("--out", ec.out, "Write per-class scores here instead of the summary");
  add_config(ec_cmd);

  SweepArgs sw;
  auto* sw_cmd = app.add_subcommand("sweep", "Metric versus retention for each criterion, as CSV");
  sw_cmd->add_option("--dataset", sw.dataset, "Dataset feature manifest");
  sw_cmd->add_option("--queries", sw.queries, "Query feature manifest");
  sw_cmd->add_option("--vocab", sw.vocab);
  sw_cmd->add_option("--dataset-bow", sw.dataset_bow, "Dataset bags (word-level criteria only)");
  sw_cmd->add_option("--query-bow", sw.query_bow, "Query bags (word-level criteria only)");
  sw_cmd->add_option("--labels", sw.labels);
  sw_cmd->add_option("--ground-truth", sw.ground_truth);
  sw_cmd->add_option("--criterion", sw.criteria, "random | scale | tf | idf | tfidf | random-words")
      ->delimiter(',')
      ->capture_default_str();
  sw_cmd->add_option("--retention", sw.retention)->delimiter(',')->capture_default_str();
  sw_cmd->add_option("--site", sw.site, "dataset | query | both")->capture_default_str();
  sw_cmd->add_option("--task", sw.task, "retrieval | recognition")->capture_default_str();
  sw_cmd->add_option("--tie-policy", sw.tie_policy, "whole | exact")->capture_default_str();
  sw_cmd->add_option("--seed", sw.seed)->capture_default_str();
  sw_cmd->add_option("--k", sw.k, "Retrieval depth")->capture_default_str();
  sw_cmd->add_flag("--timing", sw.timing, "Fill mean_query_us (output becomes machine-dependent)");
  sw_cmd->add_option("--out", sw.out, "CSV path (default: in the summary)");
  add_config(sw_cmd);

  BenchArgs bn;
  auto* bn_cmd = app.add_subcommand("bench", "Query latency and postings touched versus retention");
  bn_cmd->add_option("--corpus-size", bn.cfg.corpus_size)->capture_default_str();
  bn_cmd->add_option("--queries", bn.cfg.query_count)->capture_default_str();
  bn_cmd->add_option("--repetitions", bn.cfg.repetitions)->capture_default_str();
  bn_cmd->add_option("--warmup", bn.cfg.warmup)->capture_default_str();
  bn_cmd->add_option("--vocabulary", bn.cfg.vocabulary_size)->capture_default_str();
  bn_cmd->add_option("--tokens", bn.cfg.tokens_per_image)->capture_default_str();
  bn_cmd->add_option("--zipf", bn.cfg.zipf_exponent)->capture_default_str();
  bn_cmd->add_option("--site", bn.site, "query | both")->capture_default_str();
  bn_cmd->add_option("--criterion", bn.criterion, "random | tf | idf | tfidf")->capture_default_str();
  bn_cmd->add_option("--tie-policy", bn.tie_policy, "whole | exact")->capture_default_str();
  bn_cmd->add_option("--retention", bn.cfg.retention)->delimiter(',')->capture_default_str();
  bn_cmd->add_option("--seed", bn.cfg.seed)->capture_default_str();
  bn_cmd->add_option("--k", bn.cfg.k)->capture_default_str();
  bn_cmd->add_option("--dataset-bow", bn.dataset_bow, "Use these bags instead of generated ones");
  bn_cmd->add_option("--query-bow", bn.query_bow);
  bn_cmd->add_option("--out", bn.out, "CSV path (default: in the summary)");
  add_config(bn_cmd);

  IndexStatsArgs is;
  auto* is_cmd = app.add_subcommand("index-stats", "Size statistics of an index");
  is_cmd->add_option("--index", is.index)->required();
  add_config(is_cmd);

  const std::map<CLI::App*, std::function<Json()>> bodies = {
      {gen_cmd, [&] { return gen_synthetic(gen); }},
      {vocab_cmd, [&] { return build_vocab(vocab); }},
      {assign_cmd, [&] { return assign(assign_args); }},
      {pf_cmd, [&] { return prune_features(pf); }},
      {pw_cmd, [&] { return prune_words_cmd(pw); }},
      {bi_cmd, [&] { return build_index_cmd(bi); }},
      {q_cmd, [&] { return query_cmd(qa); }},
      {c_cmd, [&] { return classify_cmd(ca); }},
      {er_cmd, [&] { return eval_retrieval(er); }},
      {ec_cmd, [&] { return eval_recognition(ec); }},
      {sw_cmd, [&] { return sweep_cmd(sw); }},
      {bn_cmd, [&] { return bench_cmd(bn); }},
      {is_cmd, [&] { return index_stats(is); }},
  };

  try {
    CLI::App* chosen = nullptr;
    if (!raw_args.empty()) chosen = app.get_subcommand_no_throw(raw_args.front());
    std::vector<std::string> args = apply_config(raw_args, chosen);
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      throw ConfigError(e.what());
    }
    for (const auto& [cmd, body] : bodies) {
      if (!cmd->parsed()) continue;
      const auto start = std::chrono::steady_clock::now();
      Json summary = {{"command", cmd->get_name()}};
      summary.update(body());
      summary["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      out << summary.dump() << '\n';
      return 0;
    }
    throw InvariantError("no subcommand ran");
  } catch (const ConfigError& e) {
    err << error_json("config", e.what(), kExitConfig).dump() << '\n';
    return kExitConfig;
  } catch (const FormatError& e) {
    Json j = error_json("format", e.what(), kExitData);
    j["offset"] = e.offset();
    err << j.dump() << '\n';
    return kExitData;
  } catch (const DataError& e) {
    err << error_json("data", e.what(), kExitData).dump() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << error_json("data", e.what(), kExitData).dump() << '\n';
    return kExitData;
  } catch (const InvariantError& e) {
    err << error_json("invariant", e.what(), kExitInternal).dump() << '\n';
    return kExitInternal;
  } catch (const std::exception& e) {
    err << error_json("internal", e.what(), kExitInternal).dump() << '\n';
    return kExitInternal;
  }
}

}  // namespace bof::cli
