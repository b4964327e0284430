#pragma once

// Data-parallel loops of the pipeline. Each kernel has a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::parallel`; the two
// return bitwise-identical results. Per-item work is independent and results
// are reduced in index order, so thread count never changes the output.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sgusm/corpus.hpp"
#include "sgusm/importance.hpp"
#include "sgusm/model.hpp"

namespace sgusm {

class Encoder;

namespace kernels {

struct Example {
  const Eigen::MatrixXd* turn_features = nullptr;  // pooled, N x H
  int label = 0;
};

struct BatchResult {
  ModelParams grad_sum;  // summed over the batch
  double loss_sum = 0.0;
  // Filled when requested: per example, the attention matrix and class
  // probabilities of the training-mode forward pass.
  std::vector<Eigen::MatrixXd> attention;
  std::vector<Eigen::VectorXd> probs;
};

struct BatchInputs {
  const ModelParams* params = nullptr;
  const ModelSettings* settings = nullptr;
  const Eigen::MatrixXd* attribute_features = nullptr;  // pooled, M x H
  const Eigen::VectorXd* importance = nullptr;
  std::uint64_t dropout_seed = 0;  // example k uses mix_seed(dropout_seed, k)
  bool keep_traces = false;
};

namespace serial {
std::vector<Eigen::MatrixXd> turn_features(const Encoder& encoder, std::span<const Dialogue* const> dialogues);
std::vector<Eigen::MatrixXd> encode_dialogues(const Encoder& encoder, std::span<const Dialogue* const> dialogues);
std::vector<Eigen::MatrixXd> project_turns(const ModelParams& params, std::span<const Eigen::MatrixXd> features);
SelectionCounts selection_counts(std::span<const Eigen::MatrixXd> dialogue_turns, const Eigen::MatrixXd& attributes,
                                 const MmrConfig& cfg);
BatchResult batch_gradients(const BatchInputs& in, std::span<const Example> batch);
// Evaluation-mode forward pass over many dialogues.
std::vector<ForwardTrace> forward_all(const ModelParams& params, const ModelSettings& settings,
                                      std::span<const Eigen::MatrixXd> turn_features,
                                      const Eigen::MatrixXd& attribute_features, const Eigen::VectorXd& importance);
}  // namespace serial

namespace parallel {
std::vector<Eigen::MatrixXd> turn_features(const Encoder& encoder, std::span<const Dialogue* const> dialogues);
std::vector<Eigen::MatrixXd> encode_dialogues(const Encoder& encoder, std::span<const Dialogue* const> dialogues);
std::vector<Eigen::MatrixXd> project_turns(const ModelParams& params, std::span<const Eigen::MatrixXd> features);
SelectionCounts selection_counts(std::span<const Eigen::MatrixXd> dialogue_turns, const Eigen::MatrixXd& attributes,
                                 const MmrConfig& cfg);
BatchResult batch_gradients(const BatchInputs& in, std::span<const Example> batch);
// Evaluation-mode forward pass over many dialogues.
std::vector<ForwardTrace> forward_all(const ModelParams& params, const ModelSettings& settings,
                                      std::span<const Eigen::MatrixXd> turn_features,
                                      const Eigen::MatrixXd& attribute_features, const Eigen::VectorXd& importance);
// Threads OpenMP will use for the parallel kernels.
int max_threads();
}  // namespace parallel

}  // namespace kernels
}  // namespace sgusm
