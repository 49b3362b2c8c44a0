#include <doctest.h>

#include <sstream>

#include "bof/bow.hpp"
#include "bof/featureio.hpp"
#include "bof/index.hpp"
#include "bof/rng.hpp"
#include "bof/synthetic.hpp"
#include "bof/vocabulary.hpp"
#include "cli.hpp"
#include "detail/io.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace bof;
using namespace bof::testing;
using nlohmann::json;

namespace {

struct Outcome {
  int code;
  json summary;
  json error;
};

Outcome bof_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  Outcome o{code, nullptr, nullptr};
  if (!out.str().empty() && out.str().front() == '{') o.summary = json::parse(out.str());
  if (!err.str().empty()) o.error = json::parse(err.str());
  return o;
}

json ok(std::vector<std::string> args) {
  const Outcome o = bof_run(args);
  INFO(args.front() << ": " << o.error.dump());
  REQUIRE(o.code == 0);
  return o.summary;
}

// Small planted corpus and its pipeline artifacts under `dir`.
struct Pipeline {
  const TempDir& dir;
  std::string s(const char* name) const { return (dir / name).string(); }

  explicit Pipeline(const TempDir& d, double noise = 0.0) : dir(d) {
    ok({"gen-synthetic", "--out", s("syn"), "--classes", "4", "--images-per-class", "6", "--train-per-class", "2",
        "--features", "40", "--dim", "16", "--clusters", "4", "--noise", std::to_string(noise), "--seed", "5"});
    ok({"build-vocab", "--manifest", s("syn/dataset.tsv"), "--out", s("v.bofv"), "--k", "40", "--seed", "5"});
    ok({"assign", "--manifest", s("syn/dataset.tsv"), "--vocab", s("v.bofv"), "--out", s("d.bofw")});
    ok({"assign", "--manifest", s("syn/queries.tsv"), "--vocab", s("v.bofv"), "--out", s("q.bofw")});
    ok({"build-index", "--bow", s("d.bofw"), "--labels", s("syn/labels.tsv"), "--out", s("i.bofi")});
  }
};

double csv_metric(const std::string& csv, const std::string& criterion, const std::string& metric) {
  for (const auto& line : detail::split_lines(csv)) {
    const auto f = detail::split(line.text, ',');
    if (f.size() > 6 && f[0] == criterion && f[5] == metric) return std::stod(std::string(f[6]));
  }
  FAIL("metric not found");
  return -1;
}

}  // namespace

TEST_CASE("noise-free pipeline recognises every query") {
  TempDir dir("cli_pipeline");
  Pipeline p(dir);
  const json rec = ok({"eval-recognition", "--index", p.s("i.bofi"), "--queries", p.s("q.bofw"), "--labels",
                       p.s("syn/labels.tsv")});
  CHECK(rec["accuracy"] == 1.0);
  CHECK(rec["macro_f1"] == 1.0);
  CHECK(rec["queries"] == 16);
  const json ret = ok({"eval-retrieval", "--index", p.s("i.bofi"), "--queries", p.s("q.bofw"), "--ground-truth",
                       p.s("syn/ground_truth.json")});
  CHECK(ret["map"] == 1.0);
}

TEST_CASE("chained subcommands equal the in-process pipeline") {
  TempDir dir("cli_chain");
  Pipeline p(dir, 0.3);
  SyntheticConfig cfg;
  cfg.num_classes = 4;
  cfg.images_per_class = 6;
  cfg.train_per_class = 2;
  cfg.features_per_image = 40;
  cfg.dimensionality = 16;
  cfg.clusters_per_class = 4;
  cfg.noise_fraction = 0.3;
  cfg.seed = 5;
  const SyntheticCorpus c = generate_synthetic_corpus(cfg);
  CHECK(load_corpus(dir / "syn/dataset.tsv") == c.dataset);
  KMeansConfig km;
  km.k = 40;
  km.seed = 5;
  const Vocabulary v = build_vocabulary(c.dataset, km);
  CHECK(load_vocabulary(dir / "v.bofv") == v);
  const auto bags = assign_corpus(c.dataset, v);
  const auto queries = assign_corpus(c.queries, v);
  CHECK(load_bow(dir / "d.bofw") == bags);
  CHECK(load_index(dir / "i.bofi") == build_index(bags, c.labels));

  const json miss = bof_run({"prune-words", "--bow", p.s("q.bofw"), "--stats", p.s("s.tsv"), "--out",
                             p.s("x.bofw")}).error;
  CHECK(miss["exit_code"] == 3);  // stats file not written yet
  ok({"build-index", "--bow", p.s("d.bofw"), "--out", p.s("i2.bofi"), "--stats-out", p.s("s.tsv")});
  ok({"prune-words", "--bow", p.s("q.bofw"), "--stats", p.s("s.tsv"), "--out", p.s("q25.bofw"), "--retention",
      "0.25", "--criterion", "idf", "--tie-policy", "exact"});
  WordPruneConfig wp;
  wp.criterion = WordCriterion::kIdf;
  wp.keep = RetentionSpec::fraction(0.25);
  wp.tie_policy = TiePolicy::kExactBudget;
  CHECK(load_bow(dir / "q25.bofw") == prune_corpus(queries, compute_corpus_stats(bags), wp));

  ok({"prune-features", "--manifest", p.s("syn/queries.tsv"), "--criterion", "random", "--retention", "0.5",
      "--seed", "9", "--out-dir", p.s("pf")});
  const auto pruned = load_corpus(dir / "pf/manifest.tsv");
  REQUIRE(pruned.size() == c.queries.size());
  for (std::size_t i = 0; i < pruned.size(); ++i)
    CHECK(pruned[i] == prune_random_features(c.queries[i], RetentionSpec::fraction(0.5),
                                             derive_seed(9, c.queries[i].image_id())));

  const json q = ok({"query", "--index", p.s("i.bofi"), "--bow", p.s("q.bofw"), "--k", "3"});
  const InvertedIndex ix = build_index(bags, c.labels);
  REQUIRE(q["results"].size() == queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const RankedResult r = query(ix, queries[i], 3);
    REQUIRE(q["results"][i]["hits"].size() == r.size());
    for (std::size_t j = 0; j < r.size(); ++j) {
      CHECK(q["results"][i]["hits"][j]["image_id"] == r.hits[j].image_id);
      CHECK(q["results"][i]["hits"][j]["score"].get<double>() == r.hits[j].score);
    }
  }
}

TEST_CASE("a full-retention sweep matches standalone evaluation") {
  TempDir dir("cli_sweep");
  Pipeline p(dir, 0.5);
  const json rec = ok({"eval-recognition", "--index", p.s("i.bofi"), "--queries", p.s("q.bofw"), "--labels",
                       p.s("syn/labels.tsv")});
  const json ret = ok({"eval-retrieval", "--index", p.s("i.bofi"), "--queries", p.s("q.bofw"), "--ground-truth",
                       p.s("syn/ground_truth.json")});
  const std::vector<std::string> common = {"--dataset", p.s("syn/dataset.tsv"), "--queries", p.s("syn/queries.tsv"),
                                           "--vocab", p.s("v.bofv"), "--labels", p.s("syn/labels.tsv"),
                                           "--ground-truth", p.s("syn/ground_truth.json"), "--retention", "1.0"};
  auto sweep = [&](const std::string& task) {
    std::vector<std::string> args = {"sweep", "--task", task};
    args.insert(args.end(), common.begin(), common.end());
    return ok(args)["csv"].get<std::string>();
  };
  const std::string rec_csv = sweep("recognition"), ret_csv = sweep("retrieval");
  for (const char* c : {"random", "scale", "tf", "idf", "tfidf"}) {
    CHECK(csv_metric(rec_csv, c, "accuracy") == rec["accuracy"].get<double>());
    CHECK(csv_metric(rec_csv, c, "macro_f1") == rec["macro_f1"].get<double>());
    CHECK(csv_metric(ret_csv, c, "map") == ret["map"].get<double>());
  }
  CHECK(sweep("recognition") == rec_csv);

  const json from_bags = ok({"sweep", "--dataset-bow", p.s("d.bofw"), "--query-bow", p.s("q.bofw"), "--labels",
                             p.s("syn/labels.tsv"), "--criterion", "tf,idf", "--retention", "1"});
  CHECK(csv_metric(from_bags["csv"], "idf", "accuracy") == rec["accuracy"].get<double>());
  const Outcome needs_features = bof_run({"sweep", "--dataset-bow", p.s("d.bofw"), "--query-bow", p.s("q.bofw"),
                                          "--labels", p.s("syn/labels.tsv"), "--criterion", "scale"});
  CHECK(needs_features.code == 2);
}

TEST_CASE("vocabulary builds are byte-identical for a seed") {
  TempDir dir("cli_vocab");
  Pipeline p(dir);
  ok({"build-vocab", "--manifest", p.s("syn/dataset.tsv"), "--out", p.s("v2.bofv"), "--k", "40", "--seed", "5"});
  CHECK(detail::read_file(dir / "v.bofv") == detail::read_file(dir / "v2.bofv"));
  ok({"build-vocab", "--manifest", p.s("syn/dataset.tsv"), "--out", p.s("v3.bofv"), "--k", "40", "--seed", "6"});
  CHECK(detail::read_file(dir / "v.bofv") != detail::read_file(dir / "v3.bofv"));
}

TEST_CASE("config files supply defaults that flags override") {
  TempDir dir("cli_config");
  Pipeline p(dir);
  detail::write_text(dir / "cfg.json", R"({"seed": 5, "unused-elsewhere": 1, "build-vocab": {"k": 40}})");
  ok({"build-vocab", "--config", p.s("cfg.json"), "--manifest", p.s("syn/dataset.tsv"), "--out", p.s("vc.bofv")});
  CHECK(detail::read_file(dir / "v.bofv") == detail::read_file(dir / "vc.bofv"));
  const json overridden = ok({"build-vocab", "--config", p.s("cfg.json"), "--manifest", p.s("syn/dataset.tsv"),
                              "--out", p.s("vk.bofv"), "--k", "12"});
  CHECK(overridden["k"] == 12);

  detail::write_text(dir / "lists.json", R"({"sweep": {"retention": [1.0, 0.5], "criterion": ["tf"], "timing": false}})");
  const json sw = ok({"sweep", "--config", p.s("lists.json"), "--dataset-bow", p.s("d.bofw"), "--query-bow",
                      p.s("q.bofw"), "--labels", p.s("syn/labels.tsv")});
  CHECK(sw["points"] == 4);

  detail::write_text(dir / "bad.json", R"({"build-vocab": {"kk": 3}})");
  CHECK(bof_run({"build-vocab", "--config", p.s("bad.json"), "--manifest", p.s("syn/dataset.tsv"), "--out",
                 p.s("x.bofv")}).code == 2);
  detail::write_text(dir / "broken.json", "{");
  CHECK(bof_run({"index-stats", "--config", p.s("broken.json"), "--index", p.s("i.bofi")}).code == 2);
}

TEST_CASE("failures exit with a machine-readable error line") {
  TempDir dir("cli_errors");
  Pipeline p(dir);
  const Outcome unknown = bof_run({"prune-words", "--bow", p.s("q.bofw"), "--out", p.s("x"), "--criterion", "scale"});
  CHECK(unknown.code == 2);
  CHECK(unknown.error["error"] == "config");
  CHECK(bof_run({}).code == 2);
  CHECK(bof_run({"query", "--index", p.s("i.bofi")}).code == 2);  // missing --bow
  CHECK(bof_run({"prune-features", "--manifest", p.s("syn/queries.tsv"), "--out-dir", p.s("o"), "--retention", "0.5",
                 "--keep-count", "3"}).code == 2);

  auto bytes = detail::read_file(dir / "v.bofv");
  bytes.resize(bytes.size() - 1);
  detail::write_file(dir / "cut.bofv", bytes);
  const Outcome cut = bof_run({"assign", "--manifest", p.s("syn/queries.tsv"), "--vocab", p.s("cut.bofv"), "--out",
                               p.s("x.bofw")});
  CHECK(cut.code == 3);
  CHECK(cut.error["error"] == "format");
  CHECK(cut.error["offset"] == 16 + 39 * 16 * 4);

  const Outcome missing = bof_run({"index-stats", "--index", p.s("none.bofi")});
  CHECK(missing.code == 3);
  CHECK(missing.error["error"] == "data");

  const Outcome unlabeled_index = [&] {
    ok({"build-index", "--bow", p.s("d.bofw"), "--out", p.s("u.bofi")});
    return bof_run({"classify", "--index", p.s("u.bofi"), "--bow", p.s("q.bofw")});
  }();
  CHECK(unlabeled_index.code == 3);

  const json help = bof_run({"--help"}).summary;
  CHECK(help.is_null());
  CHECK(bof_run({"--help"}).code == 0);
}

TEST_CASE("index statistics and bench") {
  TempDir dir("cli_misc");
  Pipeline p(dir);
  const json built = ok({"build-index", "--bow", p.s("d.bofw"), "--out", p.s("j.bofi"), "--stats"});
  const json stats = ok({"index-stats", "--index", p.s("j.bofi")});
  CHECK(built["stats"]["total_postings"] == stats["total_postings"]);
  const IndexSizeReport r = index_size_report(load_index(dir / "j.bofi"));
  CHECK(stats["distinct_words"] == r.distinct_words);
  CHECK(stats["mean_posting_length"].get<double>() == r.mean_posting_length);

  const json bench = ok({"bench", "--corpus-size", "500", "--queries", "10", "--vocabulary", "300", "--tokens", "50",
                         "--repetitions", "1", "--warmup", "0", "--retention", "1,0.1", "--out", p.s("b.csv")});
  CHECK(bench["rows"] == 2);
  CHECK(std::filesystem::exists(dir / "b.csv"));
}
