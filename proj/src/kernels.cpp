#include "sgusm/kernels.hpp"

#include <exception>
#include <random>

#include <omp.h>

#include "sgusm/encoder.hpp"
#include "sgusm/error.hpp"
#include "sgusm/hash.hpp"

namespace sgusm::kernels {

namespace {

// Per-item bodies shared by the serial and parallel loops.

void run_example(const BatchInputs& in, const Example& ex, std::size_t k, ModelParams& grad, double& loss,
                 BatchResult& result) {
  const ModelParams& params = *in.params;
  const ModelSettings& settings = *in.settings;
  DropoutMasks masks;
  const DropoutMasks* mask_ptr = nullptr;
  if (settings.dropout > 0.0) {
    std::mt19937_64 rng(mix_seed(in.dropout_seed, k));
    masks = DropoutMasks::sample(params.hidden(), settings.dropout, rng);
    mask_ptr = &masks;
  }
  const ForwardTrace trace =
      forward(params, settings, *ex.turn_features, *in.attribute_features, *in.importance, mask_ptr);
  loss = cross_entropy(trace.classifier.probs, ex.label);
  grad = backward(params, settings, *ex.turn_features, *in.attribute_features, trace, ex.label);
  if (in.keep_traces) {
    result.attention[k] = trace.fulfillment.attention;
    result.probs[k] = trace.classifier.probs;
  }
}

void select_or_locate(const Eigen::MatrixXd& turns, const Eigen::MatrixXd& attributes,
                                  const MmrConfig& cfg, std::size_t l, std::vector<std::vector<int>>& out) {
  try {
    out = select_dialogue(turns, attributes, cfg);
  } catch (const ValidationError& e) {
    throw ValidationError("importance dialogue #" + std::to_string(l + 1) + ": " + e.what());
  }
}

BatchResult make_batch_result(const BatchInputs& in, std::size_t n) {
  BatchResult r;
  if (in.keep_traces) {
    r.attention.resize(n);
    r.probs.resize(n);
  }
  return r;
}

// Fixed-order reduction of per-example gradients.
void reduce_batch(const ModelParams& params, const std::vector<ModelParams>& grads, const std::vector<double>& losses,
                  BatchResult& r) {
  r.grad_sum = ModelParams::zeros_like(params);
  for (std::size_t k = 0; k < grads.size(); ++k) {
    r.grad_sum.add(grads[k]);
    r.loss_sum += losses[k];
  }
}

SelectionCounts reduce_selections(const std::vector<std::vector<std::vector<int>>>& selections,
                                  std::size_t num_attributes) {
  SelectionCounts counts(num_attributes);
  for (const auto& s : selections) counts.add_dialogue(s);
  return counts;
}

// Exceptions must not cross an OpenMP region: capture per index, rethrow the
// lowest failing one afterwards.
class ErrorSlots {
 public:
  explicit ErrorSlots(std::size_t n) : errors_(n) {}
  template <class F>
  void guard(std::size_t i, F&& f) {
    try {
      f();
    } catch (...) {
      errors_[i] = std::current_exception();
    }
  }
  void rethrow() const {
    for (const auto& e : errors_) {
      if (e) std::rethrow_exception(e);
    }
  }

 private:
  std::vector<std::exception_ptr> errors_;
};

}  // namespace

namespace serial {

std::vector<Eigen::MatrixXd> turn_features(const Encoder& encoder, std::span<const Dialogue* const> dialogues) {
  std::vector<Eigen::MatrixXd> out(dialogues.size());
  for (std::size_t i = 0; i < dialogues.size(); ++i) out[i] = encoder.turn_features(*dialogues[i]);
  return out;
}

std::vector<Eigen::MatrixXd> encode_dialogues(const Encoder& encoder, std::span<const Dialogue* const> dialogues) {
  std::vector<Eigen::MatrixXd> out(dialogues.size());
  for (std::size_t i = 0; i < dialogues.size(); ++i) out[i] = encoder.encode_dialogue(*dialogues[i]);
  return out;
}

std::vector<Eigen::MatrixXd> project_turns(const ModelParams& params, std::span<const Eigen::MatrixXd> features) {
  std::vector<Eigen::MatrixXd> out(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) out[i] = sgusm::project_turns(params, features[i]);
  return out;
}

SelectionCounts selection_counts(std::span<const Eigen::MatrixXd> dialogue_turns, const Eigen::MatrixXd& attributes,
                                 const MmrConfig& cfg) {
  std::vector<std::vector<std::vector<int>>> selections(dialogue_turns.size());
  for (std::size_t l = 0; l < dialogue_turns.size(); ++l) {
    select_or_locate(dialogue_turns[l], attributes, cfg, l, selections[l]);
  }
  return reduce_selections(selections, static_cast<std::size_t>(attributes.rows()));
}

BatchResult batch_gradients(const BatchInputs& in, std::span<const Example> batch) {
  std::vector<ModelParams> grads(batch.size());
  std::vector<double> losses(batch.size(), 0.0);
  BatchResult result = make_batch_result(in, batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) run_example(in, batch[k], k, grads[k], losses[k], result);
  reduce_batch(*in.params, grads, losses, result);
  return result;
}

std::vector<ForwardTrace> forward_all(const ModelParams& params, const ModelSettings& settings,
                                      std::span<const Eigen::MatrixXd> turn_features,
                                      const Eigen::MatrixXd& attribute_features, const Eigen::VectorXd& importance) {
  std::vector<ForwardTrace> out(turn_features.size());
  for (std::size_t i = 0; i < turn_features.size(); ++i) {
    out[i] = forward(params, settings, turn_features[i], attribute_features, importance);
  }
  return out;
}

}  // namespace serial

namespace parallel {

int max_threads() { return omp_get_max_threads(); }

std::vector<Eigen::MatrixXd> turn_features(const Encoder& encoder, std::span<const Dialogue* const> dialogues) {
  const auto n = static_cast<std::int64_t>(dialogues.size());
  std::vector<Eigen::MatrixXd> out(dialogues.size());
  ErrorSlots errors(dialogues.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    errors.guard(u, [&] { out[u] = encoder.turn_features(*dialogues[u]); });
  }
  errors.rethrow();
  return out;
}

std::vector<Eigen::MatrixXd> encode_dialogues(const Encoder& encoder, std::span<const Dialogue* const> dialogues) {
  const auto n = static_cast<std::int64_t>(dialogues.size());
  std::vector<Eigen::MatrixXd> out(dialogues.size());
  ErrorSlots errors(dialogues.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    errors.guard(u, [&] { out[u] = encoder.encode_dialogue(*dialogues[u]); });
  }
  errors.rethrow();
  return out;
}

std::vector<Eigen::MatrixXd> project_turns(const ModelParams& params, std::span<const Eigen::MatrixXd> features) {
  const auto n = static_cast<std::int64_t>(features.size());
  std::vector<Eigen::MatrixXd> out(features.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    out[u] = sgusm::project_turns(params, features[u]);
  }
  return out;
}

SelectionCounts selection_counts(std::span<const Eigen::MatrixXd> dialogue_turns, const Eigen::MatrixXd& attributes,
                                 const MmrConfig& cfg) {
  const auto n = static_cast<std::int64_t>(dialogue_turns.size());
  std::vector<std::vector<std::vector<int>>> selections(dialogue_turns.size());
  ErrorSlots errors(dialogue_turns.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t l = 0; l < n; ++l) {
    const auto u = static_cast<std::size_t>(l);
    errors.guard(u, [&] { select_or_locate(dialogue_turns[u], attributes, cfg, u, selections[u]); });
  }
  errors.rethrow();
  return reduce_selections(selections, static_cast<std::size_t>(attributes.rows()));
}

BatchResult batch_gradients(const BatchInputs& in, std::span<const Example> batch) {
  const auto n = static_cast<std::int64_t>(batch.size());
  std::vector<ModelParams> grads(batch.size());
  std::vector<double> losses(batch.size(), 0.0);
  BatchResult result = make_batch_result(in, batch.size());
  ErrorSlots errors(batch.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t k = 0; k < n; ++k) {
    const auto u = static_cast<std::size_t>(k);
    errors.guard(u, [&] { run_example(in, batch[u], u, grads[u], losses[u], result); });
  }
  errors.rethrow();
  reduce_batch(*in.params, grads, losses, result);
  return result;
}

std::vector<ForwardTrace> forward_all(const ModelParams& params, const ModelSettings& settings,
                                      std::span<const Eigen::MatrixXd> turn_features,
                                      const Eigen::MatrixXd& attribute_features, const Eigen::VectorXd& importance) {
  const auto n = static_cast<std::int64_t>(turn_features.size());
  std::vector<ForwardTrace> out(turn_features.size());
  ErrorSlots errors(turn_features.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    errors.guard(u, [&] { out[u] = forward(params, settings, turn_features[u], attribute_features, importance); });
  }
  errors.rethrow();
  return out;
}

}  // namespace parallel

}  // namespace sgusm::kernels
