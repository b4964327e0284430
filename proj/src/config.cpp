#include "sgusm/config.hpp"

#include <fstream>

#include "sgusm/error.hpp"

namespace sgusm {

using nlohmann::json;

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (batch_size <= 0) throw ConfigError("train.batch_size must be positive");
  if (optimizer != "adam") throw ConfigError("train.optimizer must be \"adam\"");
  if (selection_metric != "macro_f1") throw ConfigError("train.selection_metric must be \"macro_f1\"");
  if (importance_refresh != "per_epoch") throw ConfigError("train.importance_refresh must be \"per_epoch\"");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("train.dropout must lie in [0, 1)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("train.adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ConfigError("train.adam_epsilon must be positive");
}

CorpusPaths PathConfig::to_corpus_paths() const {
  if (schema.empty() || train.empty() || valid.empty() || test.empty()) {
    throw ConfigError("paths.schema, paths.train, paths.valid and paths.test are required");
  }
  CorpusPaths p{schema, train, valid, test, std::nullopt};
  if (unlabeled) p.unlabeled = *unlabeled;
  return p;
}

void RunConfig::validate() const {
  encoder.validate();
  mmr.validate();
  train.validate();
}

ModelSettings RunConfig::model_settings() const {
  ModelSettings s;
  s.attention_mode = train.attention_mode;
  s.variant = train.variant;
  s.fine_tune = encoder.fine_tune;
  s.share_encoders = encoder.share_encoders;
  s.dropout = train.dropout;
  return s;
}

json to_json(const EncoderConfig& c) {
  return {{"backend", c.backend == EncoderBackend::kMock ? "mock" : "pretrained"},
          {"model_name", c.model_name},
          {"hidden_size", c.hidden_size},
          {"max_tokens", c.max_tokens},
          {"fine_tune", c.fine_tune},
          {"share_encoders", c.share_encoders},
          {"hash_seed", c.hash_seed}};
}

json to_json(const MmrConfig& c) { return {{"top_k", c.top_k}, {"lambda", c.lambda}}; }

json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"optimizer", c.optimizer},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_epsilon", c.adam_epsilon},
          {"selection_metric", c.selection_metric},
          {"importance_refresh", c.importance_refresh},
          {"attention_mode", to_string(c.attention_mode)},
          {"use_unlabeled", c.use_unlabeled},
          {"grad_clip", c.grad_clip},
          {"dropout", c.dropout},
          {"variant", to_string(c.variant)}};
}

json to_json(const RunConfig& c) {
  json paths = {{"schema", c.paths.schema}, {"train", c.paths.train}, {"valid", c.paths.valid}, {"test", c.paths.test}};
  paths["unlabeled"] = c.paths.unlabeled ? json(*c.paths.unlabeled) : json(nullptr);
  return {{"format_version", kFormatVersion},
          {"paths", paths},
          {"encoder", to_json(c.encoder)},
          {"mmr", to_json(c.mmr)},
          {"train", to_json(c.train)},
          {"output_dir", c.output_dir}};
}

namespace {

template <class T>
void read_opt(const json& j, const char* key, T& out, const char* section) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(section) + "." + key + " has the wrong type");
  }
}

std::string resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty() || base.empty()) return p;
  std::filesystem::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

}  // namespace

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig c;
  if (auto it = j.find("format_version"); it != j.end() && it->get<int>() != kFormatVersion) {
    throw ConfigError("unsupported config format_version " + it->dump());
  }

  if (auto it = j.find("paths"); it != j.end()) {
    const json& p = *it;
    read_opt(p, "schema", c.paths.schema, "paths");
    read_opt(p, "train", c.paths.train, "paths");
    read_opt(p, "valid", c.paths.valid, "paths");
    read_opt(p, "test", c.paths.test, "paths");
    if (auto u = p.find("unlabeled"); u != p.end() && !u->is_null()) c.paths.unlabeled = u->get<std::string>();
    c.paths.schema = resolve(c.paths.schema, base_dir);
    c.paths.train = resolve(c.paths.train, base_dir);
    c.paths.valid = resolve(c.paths.valid, base_dir);
    c.paths.test = resolve(c.paths.test, base_dir);
    if (c.paths.unlabeled) c.paths.unlabeled = resolve(*c.paths.unlabeled, base_dir);
  }

  if (auto it = j.find("encoder"); it != j.end()) {
    const json& e = *it;
    std::string backend = "mock";
    read_opt(e, "backend", backend, "encoder");
    if (backend == "mock") {
      c.encoder.backend = EncoderBackend::kMock;
    } else if (backend == "pretrained") {
      c.encoder.backend = EncoderBackend::kPretrained;
    } else {
      throw ConfigError("encoder.backend must be mock|pretrained");
    }
    read_opt(e, "model_name", c.encoder.model_name, "encoder");
    read_opt(e, "hidden_size", c.encoder.hidden_size, "encoder");
    read_opt(e, "max_tokens", c.encoder.max_tokens, "encoder");
    read_opt(e, "fine_tune", c.encoder.fine_tune, "encoder");
    read_opt(e, "share_encoders", c.encoder.share_encoders, "encoder");
    read_opt(e, "hash_seed", c.encoder.hash_seed, "encoder");
    if (c.encoder.backend == EncoderBackend::kPretrained) c.encoder.model_name = resolve(c.encoder.model_name, base_dir);
  }

  auto mmr = j.find("mmr");
  if (mmr == j.end() || !mmr->contains("top_k") || !mmr->contains("lambda")) {
    throw ConfigError("run config must set mmr.top_k and mmr.lambda");
  }
  read_opt(*mmr, "top_k", c.mmr.top_k, "mmr");
  read_opt(*mmr, "lambda", c.mmr.lambda, "mmr");

  if (auto it = j.find("train"); it != j.end()) {
    const json& t = *it;
    read_opt(t, "learning_rate", c.train.learning_rate, "train");
    read_opt(t, "epochs", c.train.epochs, "train");
    read_opt(t, "batch_size", c.train.batch_size, "train");
    read_opt(t, "seed", c.train.seed, "train");
    read_opt(t, "optimizer", c.train.optimizer, "train");
    read_opt(t, "adam_beta1", c.train.adam_beta1, "train");
    read_opt(t, "adam_beta2", c.train.adam_beta2, "train");
    read_opt(t, "adam_epsilon", c.train.adam_epsilon, "train");
    read_opt(t, "selection_metric", c.train.selection_metric, "train");
    read_opt(t, "importance_refresh", c.train.importance_refresh, "train");
    std::string mode = to_string(c.train.attention_mode);
    read_opt(t, "attention_mode", mode, "train");
    c.train.attention_mode = attention_mode_from_string(mode);
    read_opt(t, "use_unlabeled", c.train.use_unlabeled, "train");
    read_opt(t, "grad_clip", c.train.grad_clip, "train");
    read_opt(t, "dropout", c.train.dropout, "train");
    std::string variant = to_string(c.train.variant);
    read_opt(t, "variant", variant, "train");
    c.train.variant = variant_from_string(variant);
  }

  read_opt(j, "output_dir", c.output_dir, "run");
  c.output_dir = resolve(c.output_dir, base_dir);
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": malformed JSON: " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

json artifact(const RunConfig& config, const std::string& kind, json payload) {
  if (!payload.is_object()) throw Error("artifact payload must be a JSON object");
  json out = {{"format_version", kFormatVersion}, {"kind", kind}, {"config", to_json(config)}};
  for (auto& [key, value] : payload.items()) out[key] = std::move(value);
  return out;
}

}  // namespace sgusm
