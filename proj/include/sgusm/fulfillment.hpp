#pragma once

#include <random>

#include <Eigen/Dense>

namespace sgusm {

// kStandard: A_i = softmax(D W t_i).
// kLiteral:  A_i = softmax(exp(clamp(D W t_i, +-kLiteralClamp))).
enum class AttentionMode { kStandard, kLiteral };

inline constexpr double kLiteralClamp = 30.0;

const char* to_string(AttentionMode mode);
AttentionMode attention_mode_from_string(const std::string& s);

struct BilinearParams {
  Eigen::MatrixXd weight;  // H x H

  // Uniform(-1/sqrt(H), 1/sqrt(H)) entries.
  static BilinearParams init(int hidden, std::mt19937_64& rng);
};

// Turn scores d_j^T W t for every row d_j of `turns` (N x H).
Eigen::VectorXd bilinear_scores(const Eigen::MatrixXd& turns, const Eigen::VectorXd& attribute,
                                const BilinearParams& params);

// Attention of one attribute over the N turns; a probability vector of length N.
Eigen::VectorXd attention(const Eigen::MatrixXd& turns, const Eigen::VectorXd& attribute,
                          const BilinearParams& params, AttentionMode mode);

struct FulfillmentReprs {
  Eigen::MatrixXd scores;     // N x M raw bilinear scores
  Eigen::MatrixXd attention;  // N x M, column i is A_i
  Eigen::MatrixXd reprs;      // H x M, column i is t_i^a = D^T A_i
};

// Dialogue-attended attribute representations for all M attributes.
// `turns` is D (N x H), `attributes` is T (M x H).
FulfillmentReprs fulfillment_reprs(const Eigen::MatrixXd& turns, const Eigen::MatrixXd& attributes,
                                   const BilinearParams& params, AttentionMode mode);

struct FulfillmentGrads {
  Eigen::MatrixXd turns;       // dL/dD
  Eigen::MatrixXd attributes;  // dL/dT
  Eigen::MatrixXd weight;      // dL/dW
};

// Back-propagates dL/d(reprs) (H x M) through fulfillment_reprs.
FulfillmentGrads fulfillment_backward(const Eigen::MatrixXd& turns, const Eigen::MatrixXd& attributes,
                                      const BilinearParams& params, AttentionMode mode,
                                      const FulfillmentReprs& forward, const Eigen::MatrixXd& d_reprs);

}  // namespace sgusm
