#include <cmath>
#include <random>

#include "doctest.h"
#include "oracle.hpp"
#include "test_util.hpp"

#include "sgusm/encoder.hpp"
#include "sgusm/error.hpp"
#include "sgusm/importance.hpp"
#include "sgusm/numeric.hpp"

using namespace sgusm;

namespace {

std::vector<int> as_vector(const Eigen::VectorXd& v) {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(static_cast<int>(v[i]));
  return out;
}

// Attribute embeddings with some duplicated rows so that ties occur.
oracle::Mat attributes_with_ties(int m, int h, std::mt19937_64& rng) {
  auto t = oracle::random_matrix(static_cast<std::size_t>(m), static_cast<std::size_t>(h), rng);
  std::uniform_int_distribution<int> pick(0, m - 1);
  if (m > 2 && rng() % 2) t[static_cast<std::size_t>(pick(rng))] = t[static_cast<std::size_t>(pick(rng))];
  return t;
}

}  // namespace

TEST_CASE("top_k = M selects every attribute for any lambda") {
  std::mt19937_64 rng(5);
  const auto t = oracle::to_eigen(oracle::random_matrix(4, 3, rng));
  const auto d = oracle::to_eigen(oracle::random_matrix(1, 3, rng)[0]);
  for (double lambda : {0.0, 0.3, 1.0}) {
    auto sel = mmr_select(d, t, {4, lambda});
    std::sort(sel.begin(), sel.end());
    CHECK(sel == std::vector<int>{0, 1, 2, 3});
    CHECK(mmr_select(d, t, {9, lambda}).size() == 4);
  }
}

TEST_CASE("lambda = 1 picks the most similar attributes in similarity order") {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 50; ++rep) {
    const auto t = oracle::random_matrix(6, 4, rng);
    const auto d = oracle::random_matrix(1, 4, rng)[0];
    std::vector<int> order{0, 1, 2, 3, 4, 5};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return oracle::cosine(t[a], d) > oracle::cosine(t[b], d); });
    order.resize(3);
    CHECK(mmr_select(oracle::to_eigen(d), oracle::to_eigen(t), {3, 1.0}) == order);
  }
}

TEST_CASE("M=4, H=3, lambda=0.5, top_k=2 against the brute-force rule") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    const auto t = oracle::random_matrix(4, 3, rng);
    const auto d = oracle::random_matrix(1, 3, rng)[0];
    CHECK(mmr_select(oracle::to_eigen(d), oracle::to_eigen(t), {2, 0.5}) == oracle::mmr(d, t, 2, 0.5));
  }
}

TEST_CASE("ties go to the lowest attribute index") {
  Eigen::MatrixXd t(3, 2);
  t << 1, 0, 0, 1, 0, 1;
  Eigen::VectorXd d(2);
  d << 0, 1;
  CHECK(mmr_select(d, t, {1, 0.5}) == std::vector<int>{1});
  // lambda = 0: every first-step score is 0
  CHECK(mmr_select(d, t, {1, 0.0}) == std::vector<int>{0});
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 200; ++rep) {
    const auto tt = attributes_with_ties(5, 3, rng);
    const auto dd = oracle::random_matrix(1, 3, rng)[0];
    CHECK(mmr_select(oracle::to_eigen(dd), oracle::to_eigen(tt), {3, 0.5}) == oracle::mmr(dd, tt, 3, 0.5));
  }
}

TEST_CASE("zero-norm embeddings are rejected with the offending row") {
  Eigen::MatrixXd t = Eigen::MatrixXd::Ones(3, 2);
  t.row(1).setZero();
  Eigen::VectorXd d = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_WITH_AS(mmr_select(d, t, {1, 0.5}), doctest::Contains("attribute 2"), ValidationError);
  CHECK_THROWS_AS(mmr_select(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Ones(2, 2), {1, 0.5}), ValidationError);
}

TEST_CASE("mmr config validation") {
  CHECK_THROWS_AS((MmrConfig{0, 0.5}.validate()), ConfigError);
  CHECK_THROWS_AS((MmrConfig{1, 1.5}.validate()), ConfigError);
  CHECK_THROWS_AS((MmrConfig{1, -0.1}.validate()), ConfigError);
  CHECK_NOTHROW((MmrConfig{1, 0.0}.validate()));
}

TEST_CASE("presence vectors") {
  const std::vector<int> r{0, 2};
  CHECK(as_vector(presence_vector(r, 4)) == std::vector<int>{1, 0, 1, 0});
  const std::vector<int> all{0, 1, 2};
  CHECK(as_vector(presence_vector(all, 3)) == std::vector<int>{1, 1, 1});
  CHECK_THROWS_AS(presence_vector(std::vector<int>{}, 3), Error);
  CHECK_THROWS_AS(presence_vector(std::vector<int>{3}, 3), Error);
}

TEST_CASE("discount divides by ln(j+1)") {
  Eigen::VectorXd f(2);
  f << 1, 0;
  const auto g = discount(f, 1);
  CHECK(g[0] == doctest::Approx(1.0 / std::log(2.0)).epsilon(1e-15));
  CHECK(g[0] == doctest::Approx(1.4427).epsilon(1e-4));
  CHECK(g[1] == 0.0);
  double prev = g[0];
  for (int j = 2; j < 50; ++j) {
    const double v = discount(f, j)[0];
    CHECK(v < prev);
    prev = v;
  }
  CHECK(discount(Eigen::VectorXd::Zero(3), 7).isZero());
  CHECK_THROWS_AS(discount(f, 0), Error);
}

TEST_CASE("one dialogue, one turn, R_1 = {2}, M = 3") {
  // Attribute 2 (index 1) is the only one aligned with the turn.
  Eigen::MatrixXd t(3, 3);
  t << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  Eigen::MatrixXd d(1, 3);
  d << 0.1, 1.0, 0.0;
  const std::vector<Eigen::MatrixXd> c{d};
  const auto s = importance_scores(c, t, {1, 0.5});
  const double x = 1.0 / std::log(2.0);
  const double z = 2.0 + std::exp(x);
  CHECK(s.scores[0] == doctest::Approx(1.0 / z).epsilon(1e-12));
  CHECK(s.scores[1] == doctest::Approx(std::exp(x) / z).epsilon(1e-12));
  CHECK(s.scores[2] == doctest::Approx(1.0 / z).epsilon(1e-12));
  CHECK(s.raw_sums[1] == doctest::Approx(x).epsilon(1e-15));
}

TEST_CASE("oracle equivalence on small random corpora") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> small(1, 5), turns(1, 4), k(1, 3);
  std::uniform_real_distribution<double> lam(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const int m = small(rng), h = small(rng), z = small(rng), top_k = k(rng);
    const double lambda = lam(rng);
    const auto t = oracle::random_matrix(m, h, rng);
    std::vector<oracle::Mat> dialogues;
    std::vector<Eigen::MatrixXd> eig;
    for (int l = 0; l < z; ++l) {
      dialogues.push_back(oracle::random_matrix(turns(rng), h, rng));
      eig.push_back(oracle::to_eigen(dialogues.back()));
    }
    for (const auto& dm : dialogues) {
      for (const auto& row : dm) CHECK(mmr_select(oracle::to_eigen(row), oracle::to_eigen(t), {top_k, lambda}) == oracle::mmr(row, t, top_k, lambda));
    }
    const auto want = oracle::importance(dialogues, t, top_k, lambda);
    const auto got = importance_scores(eig, oracle::to_eigen(t), {top_k, lambda});
    REQUIRE(is_distribution(got.scores));
    for (int i = 0; i < m; ++i) CHECK(std::abs(got.scores[i] - want[static_cast<std::size_t>(i)]) <= 1e-9);
  }
}

TEST_CASE("S is bitwise independent of dialogue order") {
  std::mt19937_64 rng(14);
  const auto t = oracle::to_eigen(oracle::random_matrix(5, 4, rng));
  std::vector<Eigen::MatrixXd> c;
  for (int l = 0; l < 40; ++l) c.push_back(oracle::to_eigen(oracle::random_matrix(1 + l % 6, 4, rng)));
  const auto a = importance_scores(c, t, {2, 0.5});
  std::shuffle(c.begin(), c.end(), rng);
  const auto b = importance_scores(c, t, {2, 0.5});
  CHECK(a.scores == b.scores);
  CHECK(a.raw_sums == b.raw_sums);
}

TEST_CASE("duplicating the corpus doubles the raw sums and keeps the argmax") {
  std::mt19937_64 rng(15);
  const auto t = oracle::to_eigen(oracle::random_matrix(4, 3, rng));
  std::vector<Eigen::MatrixXd> c;
  for (int l = 0; l < 7; ++l) c.push_back(oracle::to_eigen(oracle::random_matrix(3, 3, rng)));
  const auto once = importance_scores(c, t, {1, 0.5});
  auto twice_corpus = c;
  twice_corpus.insert(twice_corpus.end(), c.begin(), c.end());
  const auto twice = importance_scores(twice_corpus, t, {1, 0.5});
  CHECK(((twice.raw_sums - 2.0 * once.raw_sums).cwiseAbs().maxCoeff()) < 1e-12);
  CHECK(argmax_lowest(twice.scores) == argmax_lowest(once.scores));
}

TEST_CASE("an attribute selected in every turn gets the largest S") {
  Eigen::MatrixXd t(3, 3);
  t << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  std::vector<Eigen::MatrixXd> c;
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> small(0.0, 0.3);
  for (int l = 0; l < 6; ++l) {
    Eigen::MatrixXd d(2 + l % 3, 3);
    for (Eigen::Index j = 0; j < d.rows(); ++j) d.row(j) << small(rng), small(rng), 1.0;
    c.push_back(d);
  }
  const auto s = importance_scores(c, t, {1, 0.5});
  CHECK(argmax_lowest(s.scores) == 2);
  CHECK(s.raw_sums[0] == 0.0);
  CHECK(s.raw_sums[1] == 0.0);
}

TEST_CASE("a mirrored unlabeled pool keeps the argmax") {
  std::mt19937_64 rng(17);
  const auto t = oracle::to_eigen(oracle::random_matrix(4, 5, rng));
  std::vector<Eigen::MatrixXd> labeled;
  for (int l = 0; l < 9; ++l) labeled.push_back(oracle::to_eigen(oracle::random_matrix(4, 5, rng)));
  auto with_pool = labeled;
  with_pool.insert(with_pool.end(), labeled.begin(), labeled.end());
  CHECK(argmax_lowest(importance_scores(labeled, t, {2, 0.5}).scores) ==
        argmax_lowest(importance_scores(with_pool, t, {2, 0.5}).scores));
}

TEST_CASE("selection counts") {
  SelectionCounts c(3);
  c.add_dialogue({{0}, {2, 1}});
  c.add_dialogue({{0}});
  CHECK(c.count(0, 1) == 2);
  CHECK(c.count(1, 2) == 1);
  CHECK(c.count(2, 2) == 1);
  CHECK(c.count(2, 9) == 0);
  CHECK(c.num_dialogues() == 2);
  SelectionCounts other(3);
  other.add_dialogue({{1}, {1}, {1}});
  c.merge(other);
  CHECK(c.max_position() == 3);
  CHECK(c.discounted_sums()[1] == doctest::Approx(1 / std::log(2.0) + 2 / std::log(3.0) + 1 / std::log(4.0)));
  CHECK_THROWS_AS(c.add_dialogue({{3}}), Error);
  CHECK_THROWS_AS(ImportanceVector::from_counts(SelectionCounts(3)), Error);
}

TEST_CASE("corpus-level importance: train only vs with the unlabeled pool") {
  Corpus corpus;
  corpus.schema = {"s", {{"price", "price cost"}, {"area", "area district"}}};
  corpus.labeled.train.push_back(testutil::make_dialogue("a", {{"price cost please", "ok"}}, 4));
  corpus.unlabeled.push_back(testutil::make_dialogue("u1", {{"area district", "ok"}}));
  corpus.unlabeled.push_back(testutil::make_dialogue("u2", {{"area district now", "ok"}}));
  EncoderConfig cfg;
  cfg.hidden_size = 64;
  const Encoder enc(cfg);
  const auto only_train = importance_scores(corpus, false, enc, enc, {1, 0.5});
  CHECK(only_train.num_dialogues == 1);
  CHECK(argmax_lowest(only_train.scores) == 0);
  const auto with_pool = importance_scores(corpus, true, enc, enc, {1, 0.5});
  CHECK(with_pool.num_dialogues == 3);
  CHECK(argmax_lowest(with_pool.scores) == 1);
  Corpus empty;
  empty.schema = corpus.schema;
  CHECK_THROWS_AS(importance_scores(empty, true, enc, enc, {1, 0.5}), Error);
}
