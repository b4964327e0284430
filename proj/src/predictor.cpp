#include "sgusm/predictor.hpp"

#include <cassert>
#include <cmath>

#include "sgusm/corpus.hpp"
#include "sgusm/error.hpp"
#include "sgusm/numeric.hpp"

namespace sgusm {

namespace {

void fill_uniform(Eigen::MatrixXd& m, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
  }
}

void fill_uniform(Eigen::VectorXd& v, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
}

Eigen::VectorXd relu(const Eigen::VectorXd& z) { return z.cwiseMax(0.0); }

Eigen::VectorXd relu_grad(const Eigen::VectorXd& z, const Eigen::VectorXd& d) {
  return (z.array() > 0.0).select(d, 0.0);
}

}  // namespace

ClassifierParams ClassifierParams::init(int hidden, std::mt19937_64& rng) {
  ClassifierParams p = zeros(hidden);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  fill_uniform(p.w1, bound, rng);
  fill_uniform(p.b1, bound, rng);
  fill_uniform(p.w2, bound, rng);
  fill_uniform(p.b2, bound, rng);
  fill_uniform(p.w3, bound, rng);
  fill_uniform(p.b3, bound, rng);
  return p;
}

ClassifierParams ClassifierParams::zeros(int hidden) {
  ClassifierParams p;
  p.w1 = Eigen::MatrixXd::Zero(hidden, hidden);
  p.w2 = Eigen::MatrixXd::Zero(hidden, hidden);
  p.w3 = Eigen::MatrixXd::Zero(kNumClasses, hidden);
  p.b1 = Eigen::VectorXd::Zero(hidden);
  p.b2 = Eigen::VectorXd::Zero(hidden);
  p.b3 = Eigen::VectorXd::Zero(kNumClasses);
  return p;
}

Eigen::VectorXd aggregate(const Eigen::MatrixXd& reprs, const Eigen::VectorXd& importance) {
  if (reprs.cols() != importance.size()) {
    throw Error("aggregate: " + std::to_string(reprs.cols()) + " attribute columns but " +
                std::to_string(importance.size()) + " importance scores");
  }
  return reprs * importance;
}

DropoutMasks DropoutMasks::sample(int hidden, double p, std::mt19937_64& rng) {
  DropoutMasks m;
  const double keep_scale = p < 1.0 ? 1.0 / (1.0 - p) : 0.0;
  std::bernoulli_distribution drop(p);
  m.hidden1.resize(hidden);
  m.hidden2.resize(hidden);
  for (Eigen::Index i = 0; i < hidden; ++i) m.hidden1[i] = drop(rng) ? 0.0 : keep_scale;
  for (Eigen::Index i = 0; i < hidden; ++i) m.hidden2[i] = drop(rng) ? 0.0 : keep_scale;
  return m;
}

ClassifierTrace classifier_forward(const Eigen::VectorXd& h, const ClassifierParams& params,
                                   const DropoutMasks* masks) {
  if (!h.allFinite()) throw NumericError("classifier input is not finite");
  ClassifierTrace t;
  t.z1 = params.w1 * h + params.b1;
  t.a1 = relu(t.z1);
  if (masks) {
    t.mask1 = masks->hidden1;
    t.a1 = t.a1.cwiseProduct(t.mask1);
  }
  t.z2 = params.w2 * t.a1 + params.b2;
  t.a2 = relu(t.z2);
  if (masks) {
    t.mask2 = masks->hidden2;
    t.a2 = t.a2.cwiseProduct(t.mask2);
  }
  t.logits = params.w3 * t.a2 + params.b3;
  if (!t.logits.allFinite()) throw NumericError("classifier logits are not finite");
  t.probs = softmax(t.logits);
  assert(is_distribution(t.probs));
  return t;
}

Eigen::VectorXd predict(const Eigen::VectorXd& h, const ClassifierParams& params, bool train_mode,
                        double dropout, std::mt19937_64* rng) {
  if (!train_mode || dropout <= 0.0) return classifier_forward(h, params).probs;
  if (!rng) throw Error("predict: training mode needs a random generator for dropout");
  const DropoutMasks masks = DropoutMasks::sample(static_cast<int>(h.size()), dropout, *rng);
  return classifier_forward(h, params, &masks).probs;
}

ClassifierGrads classifier_backward(const Eigen::VectorXd& h, const ClassifierParams& params,
                                    const ClassifierTrace& trace, const Eigen::VectorXd& d_logits) {
  ClassifierGrads g;
  g.params.w3 = d_logits * trace.a2.transpose();
  g.params.b3 = d_logits;
  Eigen::VectorXd d_a2 = params.w3.transpose() * d_logits;
  if (trace.mask2.size()) d_a2 = d_a2.cwiseProduct(trace.mask2);
  const Eigen::VectorXd d_z2 = relu_grad(trace.z2, d_a2);
  g.params.w2 = d_z2 * trace.a1.transpose();
  g.params.b2 = d_z2;
  Eigen::VectorXd d_a1 = params.w2.transpose() * d_z2;
  if (trace.mask1.size()) d_a1 = d_a1.cwiseProduct(trace.mask1);
  const Eigen::VectorXd d_z1 = relu_grad(trace.z1, d_a1);
  g.params.w1 = d_z1 * h.transpose();
  g.params.b1 = d_z1;
  g.h = params.w1.transpose() * d_z1;
  return g;
}

}  // namespace sgusm
