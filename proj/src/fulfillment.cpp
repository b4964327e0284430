#include "sgusm/fulfillment.hpp"

#include <cassert>
#include <cmath>
#include <string>

#include "sgusm/error.hpp"
#include "sgusm/numeric.hpp"

namespace sgusm {

const char* to_string(AttentionMode mode) {
  return mode == AttentionMode::kStandard ? "standard" : "literal";
}

AttentionMode attention_mode_from_string(const std::string& s) {
  if (s == "standard") return AttentionMode::kStandard;
  if (s == "literal") return AttentionMode::kLiteral;
  throw ConfigError("unknown attention mode '" + s + "' (expected standard|literal)");
}

BilinearParams BilinearParams::init(int hidden, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> dist(-bound, bound);
  BilinearParams p;
  p.weight.resize(hidden, hidden);
  for (Eigen::Index c = 0; c < p.weight.cols(); ++c) {
    for (Eigen::Index r = 0; r < p.weight.rows(); ++r) p.weight(r, c) = dist(rng);
  }
  return p;
}

Eigen::VectorXd bilinear_scores(const Eigen::MatrixXd& turns, const Eigen::VectorXd& attribute,
                                const BilinearParams& params) {
  if (turns.cols() != params.weight.rows() || attribute.size() != params.weight.cols()) {
    throw Error("bilinear_scores: shape mismatch");
  }
  return turns * (params.weight * attribute);
}

namespace {

Eigen::VectorXd normalize_scores(const Eigen::VectorXd& scores, AttentionMode mode) {
  if (mode == AttentionMode::kStandard) {
    if (!scores.allFinite()) throw NumericError("attention scores are not finite");
    return softmax(scores);
  }
  const Eigen::VectorXd clamped = scores.cwiseMax(-kLiteralClamp).cwiseMin(kLiteralClamp);
  if (!clamped.allFinite()) throw NumericError("attention scores are not finite after clamping");
  return softmax(clamped.array().exp().matrix());
}

}  // namespace

Eigen::VectorXd attention(const Eigen::MatrixXd& turns, const Eigen::VectorXd& attribute,
                          const BilinearParams& params, AttentionMode mode) {
  if (turns.rows() < 1) throw Error("attention: dialogue has no turns");
  return normalize_scores(bilinear_scores(turns, attribute, params), mode);
}

FulfillmentReprs fulfillment_reprs(const Eigen::MatrixXd& turns, const Eigen::MatrixXd& attributes,
                                   const BilinearParams& params, AttentionMode mode) {
  if (turns.rows() < 1) throw Error("fulfillment_reprs: dialogue has no turns");
  if (turns.cols() != attributes.cols() || turns.cols() != params.weight.rows()) {
    throw Error("fulfillment_reprs: shape mismatch");
  }
  FulfillmentReprs out;
  // Column i of D W T^T is D W t_i.
  out.scores = turns * (params.weight * attributes.transpose());
  out.attention.resize(turns.rows(), attributes.rows());
  for (Eigen::Index i = 0; i < attributes.rows(); ++i) {
    out.attention.col(i) = normalize_scores(out.scores.col(i), mode);
    assert(is_distribution(out.attention.col(i)));
  }
  out.reprs = turns.transpose() * out.attention;
  return out;
}

FulfillmentGrads fulfillment_backward(const Eigen::MatrixXd& turns, const Eigen::MatrixXd& attributes,
                                      const BilinearParams& params, AttentionMode mode,
                                      const FulfillmentReprs& forward, const Eigen::MatrixXd& d_reprs) {
  // reprs = D^T A
  FulfillmentGrads g;
  g.turns = forward.attention * d_reprs.transpose();
  const Eigen::MatrixXd d_attention = turns * d_reprs;

  Eigen::MatrixXd d_scores(forward.scores.rows(), forward.scores.cols());
  for (Eigen::Index i = 0; i < d_scores.cols(); ++i) {
    Eigen::VectorXd d_in = softmax_backward(forward.attention.col(i), d_attention.col(i));
    if (mode == AttentionMode::kLiteral) {
      // softmax input was exp(clamp(s)); the clamp passes no gradient.
      for (Eigen::Index j = 0; j < d_in.size(); ++j) {
        const double s = forward.scores(j, i);
        d_in[j] = (s > -kLiteralClamp && s < kLiteralClamp) ? d_in[j] * std::exp(s) : 0.0;
      }
    }
    d_scores.col(i) = d_in;
  }

  // scores = D W T^T
  g.turns += d_scores * (attributes * params.weight.transpose());
  g.weight = turns.transpose() * d_scores * attributes;
  g.attributes = d_scores.transpose() * (turns * params.weight);
  return g;
}

}  // namespace sgusm
