#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "sgusm/corpus.hpp"
#include "sgusm/encoder.hpp"
#include "sgusm/importance.hpp"
#include "sgusm/model.hpp"

namespace sgusm {

// Version tag written into every artifact.
inline constexpr int kFormatVersion = 1;

struct TrainConfig {
  double learning_rate = 1e-4;
  int epochs = 20;
  int batch_size = 16;
  std::uint64_t seed = 42;
  std::string optimizer = "adam";
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::string selection_metric = "macro_f1";
  std::string importance_refresh = "per_epoch";
  AttentionMode attention_mode = AttentionMode::kStandard;
  bool use_unlabeled = true;
  double grad_clip = 1.0;  // global-norm clip; <= 0 disables
  double dropout = 0.1;
  Variant variant = Variant::kFull;

  void validate() const;
};

struct PathConfig {
  std::string schema;
  std::string train;
  std::string valid;
  std::string test;
  std::optional<std::string> unlabeled;

  CorpusPaths to_corpus_paths() const;
};

struct RunConfig {
  PathConfig paths;
  EncoderConfig encoder;
  MmrConfig mmr;
  TrainConfig train;
  std::string output_dir = "runs/sgusm";

  void validate() const;
  ModelSettings model_settings() const;
};

nlohmann::json to_json(const EncoderConfig& cfg);
nlohmann::json to_json(const MmrConfig& cfg);
nlohmann::json to_json(const TrainConfig& cfg);
nlohmann::json to_json(const RunConfig& cfg);

// Parses a run config. The "mmr" block and its fields are mandatory; other
// fields fall back to defaults. Relative paths resolve against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// {"format_version", "kind", "config", <payload fields>}: the envelope of every
// JSON artifact written by the command-line tool. `payload` must be an object.
nlohmann::json artifact(const RunConfig& config, const std::string& kind, nlohmann::json payload);

}  // namespace sgusm
