#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sgusm/checkpoint.hpp"
#include "sgusm/config.hpp"
#include "sgusm/corpus.hpp"
#include "sgusm/kernels.hpp"

namespace sgusm {

// Negative log-probability of the true class (p[y] clamped at 1e-12).
double loss(const Eigen::VectorXd& probs, SatisfactionLabel label);
// Mean of `loss` over a batch.
double batch_loss(std::span<const Eigen::VectorXd> probs, std::span<const SatisfactionLabel> labels);

// Adam with bias correction and a constant learning rate.
class Adam {
 public:
  Adam(const ModelParams& like, double lr, double beta1, double beta2, double eps);
  void step(ModelParams& params, const ModelParams& grad);
  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  ModelParams m_, v_;
};

// Scales `grad` so its global L2 norm is at most `max_norm`; returns the norm
// before clipping.
double clip_global_norm(ModelParams& grad, double max_norm);

// Optional hooks, all called on the training thread.
struct TrainObserver {
  // Start of each epoch with the importance vector used for every batch of it.
  std::function<void(int epoch, const ImportanceVector&)> on_importance;
  // After each optimizer step. `batch` carries attention and class
  // probabilities of every example in the step.
  std::function<void(int epoch, int step, const Eigen::VectorXd& importance, const kernels::BatchResult& batch)>
      on_batch;
  std::function<void(const EpochLog&)> on_epoch;
};

// End-to-end training. Importance is recomputed at the start of every epoch
// with the current encoder projections and held fixed for that epoch. Returns
// the parameters with the best validation macro-F1 (earliest epoch on ties).
// On a non-finite loss, training stops and the best checkpoint so far is
// returned with `diverged` set.
Checkpoint train(const Corpus& corpus, const RunConfig& config, const TrainObserver* observer = nullptr);

// train() with the model variant overridden.
Checkpoint ablate(const Corpus& corpus, RunConfig config, Variant variant, const TrainObserver* observer = nullptr);

}  // namespace sgusm
