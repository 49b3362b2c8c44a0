#include <doctest.h>

#include <algorithm>
#include <map>

#include "bof/errors.hpp"
#include "bof/vocabulary.hpp"
#include "detail/io.hpp"
#include "support.hpp"

using namespace bof;
using namespace bof::testing;

namespace {

std::vector<float> flat(const std::vector<std::vector<double>>& pts) {
  std::vector<float> out;
  for (const auto& p : pts)
    for (double v : p) out.push_back(static_cast<float>(v));
  return out;
}

Vocabulary random_vocabulary(Gen& g, std::uint32_t k, std::uint32_t dim) {
  std::vector<float> c(std::size_t{k} * dim);
  for (auto& v : c) v = static_cast<float>(real(g, -50, 50));
  return Vocabulary(dim, c);
}

std::uint64_t vocab_error_offset(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_vocabulary(bytes, "mem");
  } catch (const FormatError& e) {
    return e.offset();
  }
  FAIL("expected a FormatError");
  return 0;
}

}  // namespace

TEST_CASE("k-means with one centroid per distinct point fits exactly") {
  const std::vector<std::vector<double>> pts = {{0, 0}, {10, 0}, {0, 10}, {10, 10}, {5, 5}};
  KMeansConfig cfg;
  cfg.k = 5;
  cfg.seed = 3;
  const auto result = kmeans(flat(pts), 2, cfg);
  CHECK(result.inertia == 0.0);
  std::vector<std::vector<float>> got, want;
  for (WordId w = 0; w < 5; ++w) got.emplace_back(result.vocabulary.centroid(w).begin(), result.vocabulary.centroid(w).end());
  for (const auto& p : pts) want.push_back({static_cast<float>(p[0]), static_cast<float>(p[1])});
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  CHECK(got == want);
}

TEST_CASE("k-means with one centroid lands on the mean") {
  Gen g(21);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 37; ++i) pts.push_back({real(g, -5, 5), real(g, 0, 100), real(g, -1, 1)});
  const auto points = flat(pts);
  KMeansConfig cfg;
  cfg.k = 1;
  const auto result = kmeans(points, 3, cfg);
  for (std::uint32_t d = 0; d < 3; ++d) {
    double mean = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) mean += points[i * 3 + d];
    mean /= static_cast<double>(pts.size());
    CHECK(result.vocabulary.centroid(0)[d] == static_cast<float>(mean));
  }
}

TEST_CASE("small k-means instance reaches the restart oracle optimum") {
  // 12 points in 3 loose groups, chosen so that poor local optima exist.
  const std::vector<std::vector<double>> pts = {{0, 0},   {1, 0},   {0, 1},   {1.5, 1.2}, {8, 8},   {9, 8},
                                                {8, 9.5}, {9.2, 9}, {0, 9},   {1, 10},    {0.5, 8}, {4, 5}};
  // The oracle sees the same float32-rounded coordinates the engine clusters.
  std::vector<std::vector<double>> rounded = pts;
  for (auto& p : rounded)
    for (auto& v : p) v = static_cast<float>(v);
  const double oracle = lloyd_oracle_inertia(rounded, 3, 50, 77);
  KMeansConfig cfg;
  cfg.k = 3;
  cfg.restarts = 50;
  cfg.tolerance = 0.0;
  cfg.max_iterations = 1000;
  cfg.seed = 5;
  const auto result = kmeans(flat(pts), 2, cfg);
  CHECK(std::abs(result.inertia - oracle) <= 1e-9 * std::max(1.0, oracle));
}

TEST_CASE("k-means inertia never increases and runs are deterministic") {
  Gen g(22);
  for (int trial = 0; trial < 20; ++trial) {
    const std::uint32_t dim = static_cast<std::uint32_t>(pick(g, 1, 16));
    const std::size_t n = pick(g, 20, 300);
    std::vector<float> pts(n * dim);
    for (auto& v : pts) v = static_cast<float>(real(g, -10, 10));
    KMeansConfig cfg;
    cfg.k = static_cast<std::uint32_t>(pick(g, 1, 20));
    cfg.seed = g();
    cfg.restarts = 2;
    const auto a = kmeans(pts, dim, cfg);
    for (const auto& run : a.runs)
      for (std::size_t i = 1; i < run.inertia.size(); ++i) REQUIRE(run.inertia[i] <= run.inertia[i - 1]);
    const auto b = kmeans(pts, dim, cfg);
    REQUIRE(a.vocabulary == b.vocabulary);
    REQUIRE(a.inertia == b.inertia);
  }
}

TEST_CASE("k-means rejects impossible configurations") {
  const std::vector<float> pts = {1, 2, 3, 4};
  KMeansConfig cfg;
  cfg.k = 3;
  CHECK_THROWS_AS(kmeans(pts, 2, cfg), ConfigError);
  cfg.k = 0;
  CHECK_THROWS_AS(kmeans(pts, 2, cfg), ConfigError);
  cfg.k = 1;
  CHECK_THROWS_AS(kmeans(pts, 0, cfg), DataError);
}

TEST_CASE("vocabulary from a corpus honours the sample cap") {
  Gen g(23);
  std::vector<FeatureSet> corpus;
  for (int i = 0; i < 4; ++i) corpus.push_back(random_feature_set(g, 50, 8, id_for(i)));
  KMeansConfig cfg;
  cfg.k = 10;
  cfg.seed = 9;
  cfg.sample_cap = 60;
  const auto traced = build_vocabulary_traced(corpus, cfg);
  CHECK(traced.sample_size == 60);
  CHECK(traced.vocabulary == build_vocabulary(corpus, cfg));
  cfg.sample_cap.reset();
  CHECK(build_vocabulary_traced(corpus, cfg).sample_size == 200);
}

TEST_CASE("nearest word examples") {
  Gen g(24);
  const Vocabulary v = random_vocabulary(g, 10, 4);
  const auto c7 = v.centroid(7);
  CHECK(nearest_word(c7, v) == 7);

  // Centroids 2 and 5 mirror each other around the query; the rest are far.
  std::vector<float> c(10 * 2, 1000.0f);
  c[2 * 2] = -1; c[2 * 2 + 1] = 0;
  c[5 * 2] = 1;  c[5 * 2 + 1] = 0;
  const Vocabulary tie(2, c);
  const std::vector<float> origin = {0, 0};
  CHECK(nearest_word(origin, tie) == 2);

  const std::vector<float> wrong(3, 0.0f);
  CHECK_THROWS_AS(nearest_word(wrong, v), DataError);
}

TEST_CASE("nearest word matches the exhaustive oracle") {
  Gen g(25);
  for (int trial = 0; trial < 10; ++trial) {
    const auto dim = static_cast<std::uint32_t>(pick(g, 1, 140));
    const Vocabulary v = random_vocabulary(g, 100, dim);
    std::vector<float> x(dim);
    for (int q = 0; q < 100; ++q) {
      for (auto& e : x) e = static_cast<float>(real(g, -50, 50));
      REQUIRE(nearest_word(x, v) == nearest_oracle(x, v.data(), dim));
    }
  }
}

TEST_CASE("nearest word takes the minimum of every equidistant set") {
  // Integer lattice centroids make exact ties frequent.
  Gen g(26);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<float> c(30 * 2);
    for (auto& e : c) e = static_cast<float>(pick(g, 0, 4));
    const Vocabulary v(2, c);
    const std::vector<float> x = {static_cast<float>(pick(g, 0, 4)), static_cast<float>(pick(g, 0, 4))};
    REQUIRE(nearest_word(x, v) == nearest_oracle(x, c, 2));
  }
}

TEST_CASE("assignment preserves mass") {
  Gen g(27);
  const Vocabulary v = random_vocabulary(g, 8, 3);
  CHECK(assign_words(FeatureSet("e", 3), v).total_tokens() == 0);

  FeatureSet same("s", 3);
  for (int i = 0; i < 3; ++i) same.add(Keypoint{0, 0, 1, 0}, std::vector<float>{1, 2, 3});
  const BagOfWords b = assign_words(same, v);
  REQUIRE(b.distinct_words() == 1);
  CHECK(b.entries()[0].tf == 3);

  const Vocabulary big = random_vocabulary(g, 256, 128);
  FeatureSet fs("f", 128);
  std::vector<float> d(128);
  for (int i = 0; i < 1000; ++i) {
    for (auto& e : d) e = static_cast<float>(real(g, -50, 50));
    fs.add(Keypoint{0, 0, 1, 0}, d);
  }
  const BagOfWords bag = assign_words(fs, big);
  CHECK(bag.total_tokens() == 1000);
  std::map<WordId, std::uint32_t> oracle;
  for (std::size_t i = 0; i < fs.size(); ++i) ++oracle[nearest_oracle(fs.descriptor(i), big.data(), 128)];
  std::map<WordId, std::uint32_t> got;
  for (const auto& e : bag.entries()) got[e.word] = e.tf;
  CHECK(got == oracle);

  CHECK_THROWS_AS(assign_words(FeatureSet("x", 4), big), DataError);
}

TEST_CASE("vocabulary file round trip and errors") {
  TempDir dir("vocab_file");
  Gen g(28);
  const Vocabulary v = random_vocabulary(g, 3, 4);
  save_vocabulary(v, dir / "v.bofv");
  CHECK(std::filesystem::file_size(dir / "v.bofv") == 16 + 3 * 4 * 4);
  CHECK(load_vocabulary(dir / "v.bofv") == v);

  auto bytes = encode_vocabulary(v);
  SUBCASE("truncated payload: third row starts at 16 + 2 * 16") {
    bytes.resize(bytes.size() - 5);
    CHECK(vocab_error_offset(bytes) == 48);
  }
  SUBCASE("K = 0") {
    bytes[8] = 0;
    CHECK(vocab_error_offset(bytes) == 8);
  }
  SUBCASE("D = 0") {
    bytes[12] = 0;
    CHECK(vocab_error_offset(bytes) == 12);
  }
  SUBCASE("bad magic") {
    bytes[3] = 'X';
    CHECK(vocab_error_offset(bytes) == 0);
  }
  SUBCASE("trailing bytes") {
    bytes.push_back(1);
    CHECK(vocab_error_offset(bytes) == 64);
  }
}
