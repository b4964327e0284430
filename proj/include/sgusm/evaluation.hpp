#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "sgusm/checkpoint.hpp"
#include "sgusm/config.hpp"
#include "sgusm/corpus.hpp"
#include "sgusm/metrics.hpp"

namespace sgusm {

// Argmax predictions (lowest class wins ties) of a checkpoint on a labeled
// split, scored against the labels. Uses the checkpoint's importance snapshot.
MetricsReport evaluate(const Checkpoint& ckpt, const std::vector<Dialogue>& split);

// Zero-shot evaluation on another task schema. The target attribute
// descriptions are encoded with the checkpoint's encoders and the importance
// vector is re-estimated from the text of the target dialogues (labels are not
// read for it). No parameter is modified. A target schema identical to the
// training schema takes the evaluate() path.
MetricsReport transfer_evaluate(const Checkpoint& ckpt, const TaskSchema& target_schema,
                                const std::vector<Dialogue>& split);

struct ScalingPoint {
  std::size_t pool_size = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<MetricsReport> reports;  // test metrics, one per seed
  double median_macro_f1 = 0.0;
};

// One training run per (pool size, seed), using the first `pool_size`
// unlabeled dialogues (nested pools) for importance estimation; pool size 0
// trains on labeled dialogues only. Reports test metrics.
std::vector<ScalingPoint> unlabeled_scaling(const Corpus& corpus, const RunConfig& config,
                                            std::span<const std::size_t> pool_sizes,
                                            std::span<const std::uint64_t> seeds);

nlohmann::json to_json(const ScalingPoint& point);

double median(std::vector<double> values);

// Per-dialogue inference output: class distribution, attention of every
// attribute over the turns, and the importance vector used.
struct InferenceRecord {
  std::string dialogue_id;
  Eigen::VectorXd probs;
  int predicted = 0;
  std::vector<std::string> attribute_ids;
  Eigen::MatrixXd attention;  // N x M; empty for the w/oFul variant
  Eigen::VectorXd importance;
};

// Inference with `schema` (the training schema, or another one for transfer).
std::vector<InferenceRecord> infer(const Checkpoint& ckpt, const TaskSchema& schema,
                                   const std::vector<Dialogue>& dialogues);

nlohmann::json to_json(const InferenceRecord& record);

// [{"attribute_id", "score", "rank"}] sorted by rank; rank 1 is the highest
// score, equal scores rank in schema order.
nlohmann::json importance_report(const TaskSchema& schema, const ImportanceVector& importance);

}  // namespace sgusm
