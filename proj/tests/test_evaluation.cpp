#include "doctest.h"

#include "sgusm/checkpoint.hpp"
#include "sgusm/error.hpp"
#include "sgusm/evaluation.hpp"
#include "sgusm/synthetic.hpp"
#include "sgusm/trainer.hpp"

using namespace sgusm;

namespace {

RunConfig small_config(synthetic::Task task, std::uint64_t seed, int epochs = 3) {
  RunConfig cfg = synthetic::synthetic_config(task, seed);
  cfg.encoder.hidden_size = 16;
  cfg.train.epochs = epochs;
  return cfg;
}

const Checkpoint& trained_source() {
  static const Checkpoint ck = [] {
    const auto pair = synthetic::transfer_pair(61);
    return train(pair.source, small_config(synthetic::Task::kTransfer, 1));
  }();
  return ck;
}

}  // namespace

TEST_CASE("evaluate uses argmax with the stored importance") {
  const auto pair = synthetic::transfer_pair(61);
  const Checkpoint& ck = trained_source();
  const auto m = evaluate(ck, pair.source.labeled.valid);
  CHECK(m.n_examples == pair.source.labeled.valid.size());
  CHECK(m.macro_f1 == doctest::Approx(ck.valid_metrics.macro_f1).epsilon(1e-12));
  const auto records = infer(ck, ck.schema, pair.source.labeled.valid);
  int correct = 0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    CHECK(records[k].importance == ck.importance.scores);
    correct += records[k].predicted == static_cast<int>(*pair.source.labeled.valid[k].label);
  }
  CHECK(m.accuracy == doctest::Approx(correct / static_cast<double>(records.size())));
  CHECK_THROWS_AS(evaluate(ck, {}), Error);
}

TEST_CASE("transfer to the training schema equals evaluate") {
  const auto pair = synthetic::transfer_pair(61);
  const Checkpoint& ck = trained_source();
  const auto a = evaluate(ck, pair.source.labeled.test);
  const auto b = transfer_evaluate(ck, ck.schema, pair.source.labeled.test);
  CHECK(a.macro_f1 == b.macro_f1);
  CHECK(a.confusion == b.confusion);
}

TEST_CASE("transfer to a schema with a different attribute count leaves the weights alone") {
  const auto pair = synthetic::transfer_pair(61);
  const Checkpoint& ck = trained_source();
  const std::string before = weights_digest(ck.params);
  const TaskSchema five = synthetic::make_schema("restaurant", 5);
  REQUIRE(five.size() != ck.schema.size());
  auto target = synthetic::generate(five, 0, {}, 12, true, "r5-", 3);
  const auto m = transfer_evaluate(ck, five, target);
  CHECK(m.n_examples == 12);
  const auto full = transfer_evaluate(ck, pair.target.schema, pair.target.labeled.test);
  CHECK(full.n_examples == pair.target.labeled.test.size());
  CHECK(weights_digest(ck.params) == before);
  const auto rec = infer(ck, five, target);
  REQUIRE(rec.size() == 12);
  CHECK(rec[0].importance.size() == 5);
  CHECK(rec[0].attention.cols() == 5);
  CHECK(rec[0].attention.rows() == static_cast<Eigen::Index>(target[0].turns.size()));
}

TEST_CASE("unlabeled records cannot be scored") {
  const Checkpoint& ck = trained_source();
  auto unl = synthetic::generate(ck.schema, 0, {}, 3, false, "u-", 4);
  CHECK_THROWS_AS(evaluate(ck, unl), ValidationError);
  CHECK(infer(ck, ck.schema, unl).size() == 3);
}

TEST_CASE("unlabeled scaling: pool limits and determinism") {
  const Corpus corpus = synthetic::semi_supervised_corpus(62);
  const RunConfig cfg = small_config(synthetic::Task::kSemiSupervised, 1, 2);
  const std::vector<std::uint64_t> seeds{1, 2};
  const std::vector<std::size_t> too_big{corpus.unlabeled.size() + 1};
  CHECK_THROWS_AS(unlabeled_scaling(corpus, cfg, too_big, seeds), ConfigError);
  CHECK_THROWS_AS(unlabeled_scaling(corpus, cfg, std::vector<std::size_t>{0}, std::vector<std::uint64_t>{}), ConfigError);

  const std::vector<std::size_t> pools{0, 50};
  const auto a = unlabeled_scaling(corpus, cfg, pools, seeds);
  const auto b = unlabeled_scaling(corpus, cfg, pools, seeds);
  REQUIRE(a.size() == 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].pool_size == pools[i]);
    CHECK(a[i].reports.size() == 2);
    CHECK(a[i].median_macro_f1 == b[i].median_macro_f1);
    CHECK(to_json(a[i]) == to_json(b[i]));
  }
}

TEST_CASE("importance report ranks by score, ties in schema order") {
  const TaskSchema s = synthetic::make_schema("hotel", 4);
  ImportanceVector v;
  v.scores = Eigen::Vector4d(0.2, 0.4, 0.2, 0.2);
  const auto r = importance_report(s, v);
  REQUIRE(r.size() == 4);
  CHECK(r[0]["attribute_id"] == s.attributes[1].id);
  CHECK(r[0]["rank"] == 1);
  CHECK(r[1]["attribute_id"] == s.attributes[0].id);
  CHECK(r[2]["attribute_id"] == s.attributes[2].id);
  CHECK(r[3]["rank"] == 4);
  v.scores = Eigen::Vector3d(1, 0, 0);
  CHECK_THROWS_AS(importance_report(s, v), Error);
}
