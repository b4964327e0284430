#include "sgusm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "sgusm/encoder.hpp"
#include "sgusm/error.hpp"
#include "sgusm/hash.hpp"
#include "sgusm/numeric.hpp"

namespace sgusm {

double loss(const Eigen::VectorXd& probs, SatisfactionLabel label) {
  return cross_entropy(probs, static_cast<int>(label));
}

double batch_loss(std::span<const Eigen::VectorXd> probs, std::span<const SatisfactionLabel> labels) {
  if (probs.size() != labels.size() || probs.empty()) throw Error("batch_loss: size mismatch or empty batch");
  double total = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) total += loss(probs[k], labels[k]);
  return total / static_cast<double>(probs.size());
}

Adam::Adam(const ModelParams& like, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(ModelParams::zeros_like(like)), v_(ModelParams::zeros_like(like)) {}

void Adam::step(ModelParams& params, const ModelParams& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  ModelParams::zip(m_, grad, [this](auto& m, const auto& g) { m = beta1_ * m + (1.0 - beta1_) * g; });
  ModelParams::zip(v_, grad, [this](auto& v, const auto& g) {
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
  });
  ModelParams::zip3(params, m_, v_, [this, c1, c2](auto& p, const auto& m, const auto& v) {
    p.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  });
}

double clip_global_norm(ModelParams& grad, double max_norm) {
  const double norm = std::sqrt(grad.squared_norm());
  if (max_norm > 0.0 && norm > max_norm) grad.scale(max_norm / norm);
  return norm;
}

namespace {

struct PreparedSplit {
  std::vector<Eigen::MatrixXd> features;
  std::vector<int> labels;
};

PreparedSplit prepare(const Encoder& encoder, const std::vector<Dialogue>& split) {
  std::vector<const Dialogue*> ptrs;
  ptrs.reserve(split.size());
  for (const auto& d : split) ptrs.push_back(&d);
  PreparedSplit out;
  out.features = kernels::parallel::turn_features(encoder, ptrs);
  for (const auto& d : split) out.labels.push_back(d.label ? static_cast<int>(*d.label) : -1);
  return out;
}

struct EvalResult {
  MetricsReport metrics;
  double mean_loss = 0.0;
};

EvalResult evaluate_prepared(const ModelParams& params, const ModelSettings& settings, const PreparedSplit& split,
                             const Eigen::MatrixXd& attribute_features, const Eigen::VectorXd& importance) {
  const auto traces =
      kernels::parallel::forward_all(params, settings, split.features, attribute_features, importance);
  std::vector<int> predictions;
  predictions.reserve(traces.size());
  EvalResult r;
  for (std::size_t k = 0; k < traces.size(); ++k) {
    predictions.push_back(static_cast<int>(argmax_lowest(traces[k].classifier.probs)));
    r.mean_loss += cross_entropy(traces[k].classifier.probs, split.labels[k]);
  }
  r.mean_loss /= static_cast<double>(traces.size());
  r.metrics = compute_metrics(split.labels, predictions);
  return r;
}

ImportanceVector current_importance(const ModelParams& params, const ModelSettings& settings,
                                    const std::vector<Eigen::MatrixXd>& pool_features,
                                    const Eigen::MatrixXd& attribute_features, const MmrConfig& mmr) {
  const auto turns = kernels::parallel::project_turns(params, pool_features);
  const Eigen::MatrixXd attributes = project_attributes(params, settings, attribute_features);
  return importance_scores(turns, attributes, mmr);
}

}  // namespace

Checkpoint train(const Corpus& corpus, const RunConfig& config, const TrainObserver* observer) {
  config.validate();
  if (corpus.labeled.train.empty()) throw Error("train: the train split is empty");
  if (corpus.labeled.valid.empty()) throw Error("train: the valid split is empty");
  validate_schema(corpus.schema);

  const TrainConfig& tc = config.train;
  const ModelSettings settings = config.model_settings();
  const Encoder encoder(config.encoder);

  const PreparedSplit train_split = prepare(encoder, corpus.labeled.train);
  const PreparedSplit valid_split = prepare(encoder, corpus.labeled.valid);
  const Eigen::MatrixXd attribute_features = encoder.attribute_features(corpus.schema);
  std::vector<Eigen::MatrixXd> pool_features = train_split.features;
  if (tc.use_unlabeled && !corpus.unlabeled.empty()) {
    PreparedSplit extra = prepare(encoder, corpus.unlabeled);
    for (auto& f : extra.features) pool_features.push_back(std::move(f));
  }

  ModelParams params = ModelParams::init(config.encoder.hidden_size, tc.seed);
  Adam adam(params, tc.learning_rate, tc.adam_beta1, tc.adam_beta2, tc.adam_epsilon);

  Checkpoint best;
  best.config = config;
  best.schema = corpus.schema;

  ImportanceVector importance = current_importance(params, settings, pool_features, attribute_features, config.mmr);
  best.initial_train_loss =
      evaluate_prepared(params, settings, train_split, attribute_features, importance.scores).mean_loss;

  auto snapshot = [&](int epoch, const ImportanceVector& s, const MetricsReport& valid) {
    best.params = params;
    best.importance = s;
    best.valid_metrics = valid;
    best.epoch = epoch;
  };

  if (tc.epochs == 0) {
    snapshot(0, importance, evaluate_prepared(params, settings, valid_split, attribute_features, importance.scores).metrics);
    return best;
  }

  std::vector<kernels::Example> examples(train_split.features.size());
  for (std::size_t k = 0; k < examples.size(); ++k) {
    examples[k] = {&train_split.features[k], train_split.labels[k]};
  }
  std::vector<std::size_t> order(examples.size());
  std::vector<kernels::Example> batch;
  double best_f1 = -std::numeric_limits<double>::infinity();
  const bool keep_traces = observer && observer->on_batch;

  for (int epoch = 1; epoch <= tc.epochs && !best.diverged; ++epoch) {
    try {
      if (epoch > 1) importance = current_importance(params, settings, pool_features, attribute_features, config.mmr);
      if (observer && observer->on_importance) observer->on_importance(epoch, importance);

      const std::uint64_t epoch_seed = mix_seed(tc.seed, static_cast<std::uint64_t>(epoch));
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::mt19937_64 shuffle_rng(epoch_seed);
      std::shuffle(order.begin(), order.end(), shuffle_rng);

      double loss_total = 0.0;
      int steps = 0;
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tc.batch_size)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(tc.batch_size));
        batch.clear();
        for (std::size_t k = start; k < end; ++k) batch.push_back(examples[order[k]]);

        kernels::BatchInputs in;
        in.params = &params;
        in.settings = &settings;
        in.attribute_features = &attribute_features;
        in.importance = &importance.scores;
        in.dropout_seed = mix_seed(epoch_seed, static_cast<std::uint64_t>(steps));
        in.keep_traces = keep_traces;
        kernels::BatchResult result = kernels::parallel::batch_gradients(in, batch);

        const double n = static_cast<double>(batch.size());
        const double step_loss = result.loss_sum / n;
        if (!std::isfinite(step_loss)) {
          best.diverged = true;
          break;
        }
        result.grad_sum.scale(1.0 / n);
        clip_global_norm(result.grad_sum, tc.grad_clip);
        adam.step(params, result.grad_sum);
        if (!params.all_finite()) {
          best.diverged = true;
          break;
        }
        loss_total += step_loss;
        ++steps;
        if (keep_traces) observer->on_batch(epoch, steps, importance.scores, result);
      }
      if (best.diverged) break;

      EpochLog log;
      log.epoch = epoch;
      log.train_loss = loss_total / std::max(steps, 1);
      const EvalResult on_train = evaluate_prepared(params, settings, train_split, attribute_features, importance.scores);
      log.eval_train_loss = on_train.mean_loss;
      log.train_accuracy = on_train.metrics.accuracy;
      log.valid = evaluate_prepared(params, settings, valid_split, attribute_features, importance.scores).metrics;
      log.importance = importance.scores;
      if (!std::isfinite(log.eval_train_loss)) {
        best.diverged = true;
        break;
      }
      best.history.push_back(log);
      if (observer && observer->on_epoch) observer->on_epoch(log);

      if (log.valid.macro_f1 > best_f1) {
        best_f1 = log.valid.macro_f1;
        snapshot(epoch, importance, log.valid);
      }
    } catch (const NumericError&) {
      // overflow inside a forward pass
      best.diverged = true;
    }
  }

  if (best.epoch == 0 && best.params.turn_projection.size() == 0) {
    // Diverged before the first epoch finished: keep the initialization.
    params = ModelParams::init(config.encoder.hidden_size, tc.seed);
    importance = current_importance(params, settings, pool_features, attribute_features, config.mmr);
    snapshot(0, importance, evaluate_prepared(params, settings, valid_split, attribute_features, importance.scores).metrics);
  }
  return best;
}

Checkpoint ablate(const Corpus& corpus, RunConfig config, Variant variant, const TrainObserver* observer) {
  config.train.variant = variant;
  return train(corpus, config, observer);
}

}  // namespace sgusm
