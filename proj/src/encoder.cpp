#include "sgusm/encoder.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "sgusm/error.hpp"
#include "sgusm/hash.hpp"

namespace sgusm {

void EncoderConfig::validate() const {
  if (hidden_size <= 0) throw ConfigError("encoder.hidden_size must be positive");
  if (max_tokens < 2) throw ConfigError("encoder.max_tokens must be at least 2 ([CLS] plus one token)");
  if (backend == EncoderBackend::kPretrained && model_name.empty()) {
    throw ConfigError("encoder.model_name is required for the pretrained backend");
  }
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool MockEmbedder::embed(std::string_view token, std::span<double> out) const {
  std::uint64_t state = fnv1a64(token) ^ seed_;
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  for (auto& v : out) {
    const double u1 = static_cast<double>((splitmix64(state) >> 11) + 1) * kScale;
    const double u2 = static_cast<double>(splitmix64(state) >> 11) * kScale;
    v = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  return true;
}

std::shared_ptr<WordVectorEmbedder> WordVectorEmbedder::load(const std::string& path, int expected_dim) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open word-vector file: " + path);
  auto out = std::make_shared<WordVectorEmbedder>();
  out->dim_ = expected_dim;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    std::vector<double> values;
    for (double v; fields >> v;) values.push_back(v);
    // word2vec text files start with "count dim".
    if (line_no == 1 && values.size() == 1) continue;
    if (static_cast<int>(values.size()) != expected_dim) {
      throw ValidationError("expected " + std::to_string(expected_dim) + " values, got " +
                                std::to_string(values.size()),
                            path + ":" + std::to_string(line_no));
    }
    for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (out->index_.emplace(token, out->index_.size()).second) {
      out->table_.insert(out->table_.end(), values.begin(), values.end());
    }
  }
  if (out->index_.empty()) throw ValidationError("word-vector file has no entries", path);
  return out;
}

bool WordVectorEmbedder::embed(std::string_view token, std::span<double> out) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) it = index_.find("[unk]");
  if (it == index_.end()) return false;
  const double* row = table_.data() + it->second * static_cast<std::size_t>(dim_);
  std::copy(row, row + dim_, out.begin());
  return true;
}

std::shared_ptr<const TokenEmbedder> make_embedder(const EncoderConfig& cfg) {
  cfg.validate();
  if (cfg.backend == EncoderBackend::kMock) return std::make_shared<MockEmbedder>(cfg.hidden_size, cfg.hash_seed);
  return WordVectorEmbedder::load(cfg.model_name, cfg.hidden_size);
}

Encoder::Encoder(EncoderConfig cfg, std::shared_ptr<const TokenEmbedder> embedder)
    : cfg_(std::move(cfg)), embedder_(std::move(embedder)) {
  cfg_.validate();
  if (!embedder_ || embedder_->dim() != cfg_.hidden_size) {
    throw ConfigError("token embedder width does not match encoder.hidden_size");
  }
  projection_ = Eigen::MatrixXd::Identity(cfg_.hidden_size, cfg_.hidden_size);
}

std::vector<std::string> Encoder::turn_tokens(const DialogueTurn& turn) const {
  auto user = tokenize(turn.user_utterance);
  auto system = tokenize(turn.system_utterance);
  if (user.empty() && system.empty()) throw ValidationError("turn has no content tokens");
  std::vector<std::string> seq;
  seq.reserve(user.size() + system.size() + 2);
  seq.emplace_back(kClsToken);
  seq.insert(seq.end(), user.begin(), user.end());
  seq.emplace_back(kSepToken);
  seq.insert(seq.end(), system.begin(), system.end());
  if (seq.size() > static_cast<std::size_t>(cfg_.max_tokens)) seq.resize(cfg_.max_tokens);
  return seq;
}

std::vector<std::string> Encoder::attribute_tokens(const TaskAttribute& attribute) const {
  auto desc = tokenize(attribute.description);
  if (desc.empty()) throw ValidationError("attribute '" + attribute.id + "' has no content tokens");
  std::vector<std::string> seq;
  seq.reserve(desc.size() + 1);
  seq.emplace_back(kClsToken);
  seq.insert(seq.end(), desc.begin(), desc.end());
  if (seq.size() > static_cast<std::size_t>(cfg_.max_tokens)) seq.resize(cfg_.max_tokens);
  return seq;
}

Eigen::VectorXd Encoder::pool(std::span<const std::string> tokens) const {
  const int h = cfg_.hidden_size;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd buf(h);
  int used = 0;
  for (const auto& tok : tokens) {
    if (embedder_->embed(tok, std::span<double>(buf.data(), h))) {
      sum += buf;
      ++used;
    }
  }
  if (used == 0) throw ValidationError("no token of the sequence has an embedding");
  return sum / static_cast<double>(used);
}

Eigen::VectorXd Encoder::turn_feature(const DialogueTurn& turn) const {
  const auto tokens = turn_tokens(turn);
  return pool(tokens);
}

Eigen::MatrixXd Encoder::turn_features(const Dialogue& dialogue) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(dialogue.turns.size()), cfg_.hidden_size);
  for (std::size_t j = 0; j < dialogue.turns.size(); ++j) {
    try {
      out.row(static_cast<Eigen::Index>(j)) = turn_feature(dialogue.turns[j]).transpose();
    } catch (const ValidationError& e) {
      throw ValidationError("dialogue '" + dialogue.id + "' turn " + std::to_string(j + 1) + ": " + e.what());
    }
  }
  return out;
}

Eigen::MatrixXd Encoder::attribute_features(const TaskSchema& schema) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(schema.attributes.size()), cfg_.hidden_size);
  for (std::size_t i = 0; i < schema.attributes.size(); ++i) {
    const auto tokens = attribute_tokens(schema.attributes[i]);
    out.row(static_cast<Eigen::Index>(i)) = pool(tokens).transpose();
  }
  return out;
}

Eigen::MatrixXd Encoder::project(const Eigen::MatrixXd& features) const {
  // Row by row so that a row never depends on how many rows are projected.
  Eigen::MatrixXd out(features.rows(), projection_.rows());
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    out.row(r).noalias() = (projection_ * features.row(r).transpose()).transpose();
  }
  require_finite(out, "encoder output");
  return out;
}

Eigen::VectorXd Encoder::encode_turn(const DialogueTurn& turn) const {
  Eigen::MatrixXd row = turn_feature(turn).transpose();
  return project(row).row(0).transpose();
}

Eigen::MatrixXd Encoder::encode_dialogue(const Dialogue& dialogue) const {
  return project(turn_features(dialogue));
}

Eigen::MatrixXd Encoder::encode_attributes(const TaskSchema& schema) const {
  return project(attribute_features(schema));
}

void require_finite(const Eigen::MatrixXd& m, const std::string& what) {
  if (!m.allFinite()) throw NumericError(what + " has non-finite entries");
}

}  // namespace sgusm
