#include "sgusm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string_view>

#include "sgusm/error.hpp"
#include "sgusm/hash.hpp"

namespace sgusm {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "weights.bin is written in native little-endian order");

namespace {

constexpr std::string_view kMagic = "SGUSMW01";

json vector_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what(), path.string());
  }
}

template <class Tensor>
std::string_view tensor_bytes(const Tensor& t) {
  return {reinterpret_cast<const char*>(t.data()), static_cast<std::size_t>(t.size()) * sizeof(double)};
}

}  // namespace

json to_json(const EpochLog& log) {
  return {{"epoch", log.epoch},
          {"train_loss", log.train_loss},
          {"eval_train_loss", log.eval_train_loss},
          {"train_accuracy", log.train_accuracy},
          {"valid", to_json(log.valid)},
          {"importance", vector_to_json(log.importance)}};
}

EpochLog epoch_log_from_json(const json& j) {
  EpochLog log;
  log.epoch = j.at("epoch").get<int>();
  log.train_loss = j.at("train_loss").get<double>();
  log.eval_train_loss = j.at("eval_train_loss").get<double>();
  log.train_accuracy = j.at("train_accuracy").get<double>();
  log.valid = metrics_from_json(j.at("valid"));
  log.importance = vector_from_json(j.at("importance"));
  return log;
}

std::string weights_digest(const ModelParams& params) {
  std::uint64_t h = kFnvOffset;
  params.for_each([&h](const char*, const auto& t) { h = fnv1a64(tensor_bytes(t), h); });
  return to_hex(h);
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  write_json(dir / "config.json", to_json(ckpt.config));
  write_json(dir / "schema.json", schema_to_json(ckpt.schema));

  json history = json::array();
  for (const auto& log : ckpt.history) history.push_back(to_json(log));
  write_json(dir / "metrics.json", {{"format_version", kFormatVersion},
                                    {"config", to_json(ckpt.config)},
                                    {"selected_epoch", ckpt.epoch},
                                    {"initial_train_loss", ckpt.initial_train_loss},
                                    {"valid", to_json(ckpt.valid_metrics)},
                                    {"diverged", ckpt.diverged},
                                    {"history", history}});

  std::ofstream bin(dir / "weights.bin", std::ios::binary);
  if (!bin) throw Error("cannot write " + (dir / "weights.bin").string());
  bin.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
  std::size_t offset = kMagic.size();
  std::uint64_t payload_hash = kFnvOffset;
  json tensors = json::array();
  auto emit = [&](const std::string& name, const auto& t) {
    tensors.push_back({{"name", name}, {"shape", {t.rows(), t.cols()}}, {"offset", offset}});
    const auto bytes = tensor_bytes(t);
    bin.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    payload_hash = fnv1a64(bytes, payload_hash);
    offset += bytes.size();
  };
  ckpt.params.for_each([&](const char* name, const auto& t) { emit(name, t); });
  emit("importance.scores", ckpt.importance.scores);
  emit("importance.raw_sums", ckpt.importance.raw_sums);
  if (!bin) throw Error("failed writing weights.bin");

  json attribute_ids = json::array();
  for (const auto& a : ckpt.schema.attributes) attribute_ids.push_back(a.id);
  write_json(dir / "manifest.json", {{"format_version", kFormatVersion},
                                     {"config", to_json(ckpt.config)},
                                     {"hidden_size", ckpt.params.hidden()},
                                     {"schema_fingerprint", ckpt.schema.fingerprint()},
                                     {"attribute_ids", attribute_ids},
                                     {"importance_dialogues", ckpt.importance.num_dialogues},
                                     {"weights_digest", weights_digest(ckpt.params)},
                                     {"payload_digest", to_hex(payload_hash)},
                                     {"tensors", tensors}});
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("checkpoint directory not found: " + dir.string());
  Checkpoint ckpt;
  ckpt.config = run_config_from_json(read_json(dir / "config.json"));
  ckpt.schema = parse_schema(read_json(dir / "schema.json"), (dir / "schema.json").string());

  const json manifest = read_json(dir / "manifest.json");
  if (manifest.at("schema_fingerprint").get<std::string>() != ckpt.schema.fingerprint()) {
    throw ValidationError("schema.json does not match the manifest fingerprint", dir.string());
  }
  const int hidden = manifest.at("hidden_size").get<int>();
  if (hidden != ckpt.config.encoder.hidden_size) {
    throw ValidationError("manifest hidden_size disagrees with config", dir.string());
  }

  std::ifstream bin(dir / "weights.bin", std::ios::binary);
  if (!bin) throw ConfigError("cannot open " + (dir / "weights.bin").string());
  std::string blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  if (blob.compare(0, kMagic.size(), kMagic) != 0) throw ValidationError("bad weights.bin magic", dir.string());
  // Covers everything after the magic, importance tensors included.
  if (manifest.at("payload_digest").get<std::string>() != to_hex(fnv1a64(std::string_view(blob).substr(kMagic.size()), kFnvOffset))) {
    throw ValidationError("weights.bin payload digest mismatch", dir.string());
  }

  std::map<std::string, json> entries;
  for (const auto& t : manifest.at("tensors")) entries[t.at("name").get<std::string>()] = t;
  auto fill = [&](const std::string& name, auto& t) {
    auto it = entries.find(name);
    if (it == entries.end()) throw ValidationError("manifest lacks tensor " + name, dir.string());
    const auto rows = it->second.at("shape").at(0).get<Eigen::Index>();
    const auto cols = it->second.at("shape").at(1).get<Eigen::Index>();
    const auto offset = it->second.at("offset").get<std::size_t>();
    if constexpr (std::decay_t<decltype(t)>::ColsAtCompileTime == 1) {
      if (cols != 1) throw ValidationError("tensor " + name + " should be a vector", dir.string());
      t.resize(rows);
    } else {
      t.resize(rows, cols);
    }
    const std::size_t bytes = static_cast<std::size_t>(rows * cols) * sizeof(double);
    if (offset + bytes > blob.size()) throw ValidationError("weights.bin is truncated", dir.string());
    std::memcpy(t.data(), blob.data() + offset, bytes);
  };
  ckpt.params.for_each([&](const char* name, auto& t) { fill(name, t); });
  fill("importance.scores", ckpt.importance.scores);
  fill("importance.raw_sums", ckpt.importance.raw_sums);
  ckpt.importance.num_dialogues = manifest.at("importance_dialogues").get<std::size_t>();

  if (manifest.at("weights_digest").get<std::string>() != weights_digest(ckpt.params)) {
    throw ValidationError("weights digest mismatch", dir.string());
  }
  if (ckpt.params.hidden() != hidden ||
      ckpt.importance.scores.size() != static_cast<Eigen::Index>(ckpt.schema.size())) {
    throw ValidationError("tensor shapes disagree with the manifest", dir.string());
  }

  const json metrics = read_json(dir / "metrics.json");
  ckpt.epoch = metrics.at("selected_epoch").get<int>();
  ckpt.initial_train_loss = metrics.at("initial_train_loss").get<double>();
  ckpt.valid_metrics = metrics_from_json(metrics.at("valid"));
  ckpt.diverged = metrics.at("diverged").get<bool>();
  for (const auto& log : metrics.at("history")) ckpt.history.push_back(epoch_log_from_json(log));
  return ckpt;
}

}  // namespace sgusm
