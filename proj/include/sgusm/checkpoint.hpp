#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgusm/config.hpp"
#include "sgusm/corpus.hpp"
#include "sgusm/importance.hpp"
#include "sgusm/metrics.hpp"
#include "sgusm/model.hpp"

namespace sgusm {

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;      // mean mini-batch loss, training mode
  double eval_train_loss = 0.0; // mean loss over the train split, eval mode
  double train_accuracy = 0.0;  // eval mode
  MetricsReport valid;
  Eigen::VectorXd importance;   // S used throughout the epoch
};

nlohmann::json to_json(const EpochLog& log);
EpochLog epoch_log_from_json(const nlohmann::json& j);

struct Checkpoint {
  RunConfig config;
  TaskSchema schema;
  ModelParams params;
  ImportanceVector importance;  // S snapshot of the selected epoch
  MetricsReport valid_metrics;
  int epoch = 0;                // selected epoch; 0 means the initialization
  double initial_train_loss = 0.0;
  std::vector<EpochLog> history;
  bool diverged = false;
};

// Directory layout:
//   config.json    resolved run config
//   metrics.json   selected epoch, validation metrics, per-epoch history
//   schema.json    task schema the model was trained on
//   manifest.json  tensor names, shapes and byte offsets, schema fingerprint,
//                  weights digest
//   weights.bin    "SGUSMW01" magic, then raw little-endian float64 tensors
//                  (column-major) in manifest order
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

// FNV-1a digest over all parameter bytes; changes iff some weight changes.
std::string weights_digest(const ModelParams& params);

}  // namespace sgusm
