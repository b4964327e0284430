#include "sgusm/evaluation.hpp"

#include <algorithm>

#include "sgusm/encoder.hpp"
#include "sgusm/error.hpp"
#include "sgusm/kernels.hpp"
#include "sgusm/numeric.hpp"
#include "sgusm/trainer.hpp"

namespace sgusm {

using nlohmann::json;

namespace {

std::vector<const Dialogue*> pointers(const std::vector<Dialogue>& split) {
  std::vector<const Dialogue*> out;
  out.reserve(split.size());
  for (const auto& d : split) out.push_back(&d);
  return out;
}

struct Inputs {
  std::vector<Eigen::MatrixXd> features;
  Eigen::MatrixXd attribute_features;
  Eigen::VectorXd importance;
};

// Features for `split` under `schema`; importance from the checkpoint when the
// schema is the training one, else re-estimated from the split's text.
Inputs prepare_inputs(const Checkpoint& ckpt, const TaskSchema& schema, const std::vector<Dialogue>& split) {
  validate_schema(schema);
  const Encoder encoder(ckpt.config.encoder);
  Inputs in;
  in.features = kernels::parallel::turn_features(encoder, pointers(split));
  in.attribute_features = encoder.attribute_features(schema);
  if (schema.fingerprint() == ckpt.schema.fingerprint()) {
    in.importance = ckpt.importance.scores;
  } else {
    const ModelSettings settings = ckpt.config.model_settings();
    const auto turns = kernels::parallel::project_turns(ckpt.params, in.features);
    const Eigen::MatrixXd attributes = project_attributes(ckpt.params, settings, in.attribute_features);
    in.importance = importance_scores(turns, attributes, ckpt.config.mmr).scores;
  }
  return in;
}

MetricsReport score(const Checkpoint& ckpt, const Inputs& in, const std::vector<Dialogue>& split) {
  const auto traces = kernels::parallel::forward_all(ckpt.params, ckpt.config.model_settings(), in.features,
                                                     in.attribute_features, in.importance);
  std::vector<int> labels, predictions;
  labels.reserve(split.size());
  predictions.reserve(split.size());
  for (std::size_t k = 0; k < split.size(); ++k) {
    if (!split[k].label) throw ValidationError("dialogue '" + split[k].id + "' has no label");
    labels.push_back(static_cast<int>(*split[k].label));
    predictions.push_back(static_cast<int>(argmax_lowest(traces[k].classifier.probs)));
  }
  return compute_metrics(labels, predictions);
}

}  // namespace

MetricsReport evaluate(const Checkpoint& ckpt, const std::vector<Dialogue>& split) {
  if (split.empty()) throw Error("evaluate: split is empty");
  return score(ckpt, prepare_inputs(ckpt, ckpt.schema, split), split);
}

MetricsReport transfer_evaluate(const Checkpoint& ckpt, const TaskSchema& target_schema,
                                const std::vector<Dialogue>& split) {
  if (split.empty()) throw Error("transfer_evaluate: split is empty");
  return score(ckpt, prepare_inputs(ckpt, target_schema, split), split);
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<ScalingPoint> unlabeled_scaling(const Corpus& corpus, const RunConfig& config,
                                            std::span<const std::size_t> pool_sizes,
                                            std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw ConfigError("unlabeled_scaling: no seeds given");
  for (std::size_t n : pool_sizes) {
    if (n > corpus.unlabeled.size()) {
      throw ConfigError("pool size " + std::to_string(n) + " exceeds the " + std::to_string(corpus.unlabeled.size()) +
                        " available unlabeled dialogues");
    }
  }
  if (corpus.labeled.test.empty()) throw Error("unlabeled_scaling: the test split is empty");

  std::vector<ScalingPoint> out;
  for (std::size_t n : pool_sizes) {
    Corpus sub;
    sub.schema = corpus.schema;
    sub.labeled = corpus.labeled;
    sub.unlabeled.assign(corpus.unlabeled.begin(), corpus.unlabeled.begin() + static_cast<std::ptrdiff_t>(n));
    RunConfig cfg = config;
    cfg.train.use_unlabeled = n > 0;

    ScalingPoint point;
    point.pool_size = n;
    std::vector<double> f1s;
    for (std::uint64_t seed : seeds) {
      cfg.train.seed = seed;
      const Checkpoint ckpt = train(sub, cfg);
      point.seeds.push_back(seed);
      point.reports.push_back(evaluate(ckpt, sub.labeled.test));
      f1s.push_back(point.reports.back().macro_f1);
    }
    point.median_macro_f1 = median(f1s);
    out.push_back(std::move(point));
  }
  return out;
}

json to_json(const ScalingPoint& point) {
  json reports = json::array();
  for (const auto& r : point.reports) reports.push_back(to_json(r));
  return {{"pool_size", point.pool_size},
          {"seeds", point.seeds},
          {"median_macro_f1", point.median_macro_f1},
          {"reports", reports}};
}

std::vector<InferenceRecord> infer(const Checkpoint& ckpt, const TaskSchema& schema,
                                   const std::vector<Dialogue>& dialogues) {
  if (dialogues.empty()) return {};
  const Inputs in = prepare_inputs(ckpt, schema, dialogues);
  const auto traces = kernels::parallel::forward_all(ckpt.params, ckpt.config.model_settings(), in.features,
                                                     in.attribute_features, in.importance);
  std::vector<InferenceRecord> out;
  out.reserve(dialogues.size());
  std::vector<std::string> ids;
  for (const auto& a : schema.attributes) ids.push_back(a.id);
  for (std::size_t k = 0; k < dialogues.size(); ++k) {
    InferenceRecord r;
    r.dialogue_id = dialogues[k].id;
    r.probs = traces[k].classifier.probs;
    r.predicted = static_cast<int>(argmax_lowest(r.probs));
    r.attribute_ids = ids;
    r.attention = traces[k].fulfillment.attention;
    r.importance = traces[k].importance;
    out.push_back(std::move(r));
  }
  return out;
}

json to_json(const InferenceRecord& r) {
  json probs = json::object();
  for (int c = 0; c < kNumClasses; ++c) probs[label_name(static_cast<SatisfactionLabel>(c))] = r.probs[c];
  json attributes = json::array();
  for (std::size_t i = 0; i < r.attribute_ids.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    json entry = {{"attribute_id", r.attribute_ids[i]}, {"importance", r.importance[col]}};
    if (r.attention.size()) {
      std::vector<double> weights(static_cast<std::size_t>(r.attention.rows()));
      for (Eigen::Index j = 0; j < r.attention.rows(); ++j) weights[static_cast<std::size_t>(j)] = r.attention(j, col);
      entry["attention"] = weights;
    }
    attributes.push_back(std::move(entry));
  }
  return {{"dialogue_id", r.dialogue_id},
          {"probabilities", probs},
          {"predicted", label_name(static_cast<SatisfactionLabel>(r.predicted))},
          {"attributes", attributes}};
}

json importance_report(const TaskSchema& schema, const ImportanceVector& importance) {
  const auto& s = importance.scores;
  if (static_cast<std::size_t>(s.size()) != schema.size()) throw Error("importance_report: size mismatch");
  std::vector<std::size_t> order(schema.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return s[static_cast<Eigen::Index>(a)] > s[static_cast<Eigen::Index>(b)];
  });
  json out = json::array();
  for (std::size_t r = 0; r < order.size(); ++r) {
    out.push_back({{"attribute_id", schema.attributes[order[r]].id},
                   {"score", s[static_cast<Eigen::Index>(order[r])]},
                   {"rank", r + 1}});
  }
  return out;
}

}  // namespace sgusm
