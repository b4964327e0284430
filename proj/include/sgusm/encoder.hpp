#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "sgusm/corpus.hpp"

namespace sgusm {

enum class EncoderBackend { kMock, kPretrained };

struct EncoderConfig {
  EncoderBackend backend = EncoderBackend::kMock;
  // Pretrained backend: path to a word-vector text file (one "token v1 .. vH"
  // per line, optional "count dim" header). Ignored by the mock backend.
  std::string model_name;
  int hidden_size = 768;
  int max_tokens = 512;
  bool fine_tune = true;
  // One projection for turns and attributes instead of one each.
  bool share_encoders = false;
  std::uint64_t hash_seed = 0;

  void validate() const;
};

inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";

// Lower-cases ASCII and splits on whitespace.
std::vector<std::string> tokenize(std::string_view text);

// Maps a token to a dense vector of fixed width.
class TokenEmbedder {
 public:
  virtual ~TokenEmbedder() = default;
  virtual int dim() const = 0;
  // Writes the token vector into `out` and returns true, or returns false if
  // the token has no vector.
  virtual bool embed(std::string_view token, std::span<double> out) const = 0;
};

// Deterministic stand-in for a pretrained encoder.
//
// Each token is hashed with 64-bit FNV-1a over its bytes, XORed with the
// configured seed, and the result seeds a splitmix64 stream. Component k of
// the token vector is a Box-Muller draw from the next two stream outputs
// a, b:  u1 = ((a >> 11) + 1) * 2^-53,  u2 = (b >> 11) * 2^-53,
//        z = sqrt(-2 ln u1) * cos(2 pi u2).
// Sequences are embedded by mean-pooling the token vectors.
class MockEmbedder final : public TokenEmbedder {
 public:
  MockEmbedder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}
  int dim() const override { return dim_; }
  bool embed(std::string_view token, std::span<double> out) const override;

 private:
  int dim_;
  std::uint64_t seed_;
};

// Static word vectors read from a text file. Tokens missing from the table
// fall back to the "[unk]" row when the file has one.
class WordVectorEmbedder final : public TokenEmbedder {
 public:
  static std::shared_ptr<WordVectorEmbedder> load(const std::string& path, int expected_dim);
  int dim() const override { return dim_; }
  bool embed(std::string_view token, std::span<double> out) const override;
  std::size_t vocabulary_size() const { return index_.size(); }

 private:
  int dim_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> table_;
};

std::shared_ptr<const TokenEmbedder> make_embedder(const EncoderConfig& cfg);

// Text encoder: pooled token features followed by an H x H projection, which
// starts at the identity and is the trainable part when fine-tuning.
//
// Turns are framed as [CLS] user [SEP] system, attributes as [CLS] description,
// and the framed sequence is cut to its first max_tokens tokens.
class Encoder {
 public:
  Encoder(EncoderConfig cfg, std::shared_ptr<const TokenEmbedder> embedder);
  explicit Encoder(const EncoderConfig& cfg) : Encoder(cfg, make_embedder(cfg)) {}

  const EncoderConfig& config() const { return cfg_; }
  int dim() const { return cfg_.hidden_size; }
  const std::shared_ptr<const TokenEmbedder>& embedder() const { return embedder_; }

  std::vector<std::string> turn_tokens(const DialogueTurn& turn) const;
  std::vector<std::string> attribute_tokens(const TaskAttribute& attribute) const;

  // Mean of the token vectors of an already framed sequence.
  Eigen::VectorXd pool(std::span<const std::string> tokens) const;

  // Pre-projection features; fixed for a given text, so callers cache them.
  Eigen::VectorXd turn_feature(const DialogueTurn& turn) const;
  Eigen::MatrixXd turn_features(const Dialogue& dialogue) const;         // N x H
  Eigen::MatrixXd attribute_features(const TaskSchema& schema) const;    // M x H

  Eigen::VectorXd encode_turn(const DialogueTurn& turn) const;
  Eigen::MatrixXd encode_dialogue(const Dialogue& dialogue) const;       // N x H
  Eigen::MatrixXd encode_attributes(const TaskSchema& schema) const;     // M x H

  // Applies the projection to rows of pooled features.
  Eigen::MatrixXd project(const Eigen::MatrixXd& features) const;

  const Eigen::MatrixXd& projection() const { return projection_; }
  Eigen::MatrixXd& projection() { return projection_; }

 private:
  EncoderConfig cfg_;
  std::shared_ptr<const TokenEmbedder> embedder_;
  Eigen::MatrixXd projection_;
};

// Throws NumericError naming `what` if any entry is NaN or infinite.
void require_finite(const Eigen::MatrixXd& m, const std::string& what);

}  // namespace sgusm
