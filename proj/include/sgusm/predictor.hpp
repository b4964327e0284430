#pragma once

#include <random>

#include <Eigen/Dense>

namespace sgusm {

// Two hidden ReLU layers of width H and a 3-way output layer. Dropout follows
// each hidden activation and is only applied in training mode.
struct ClassifierParams {
  Eigen::MatrixXd w1, w2, w3;  // H x H, H x H, 3 x H
  Eigen::VectorXd b1, b2, b3;

  // Weights and biases ~ Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static ClassifierParams init(int hidden, std::mt19937_64& rng);
  static ClassifierParams zeros(int hidden);
};

// h = sum_i S_i * reprs.col(i).
Eigen::VectorXd aggregate(const Eigen::MatrixXd& reprs, const Eigen::VectorXd& importance);

// Inverted-dropout masks (0 or 1/(1-p)) for the two hidden layers.
struct DropoutMasks {
  Eigen::VectorXd hidden1, hidden2;

  static DropoutMasks sample(int hidden, double p, std::mt19937_64& rng);
};

struct ClassifierTrace {
  Eigen::VectorXd z1, a1, z2, a2, logits, probs;
  // Empty when run without dropout.
  Eigen::VectorXd mask1, mask2;
};

// Forward pass; `masks` null means evaluation mode.
ClassifierTrace classifier_forward(const Eigen::VectorXd& h, const ClassifierParams& params,
                                   const DropoutMasks* masks = nullptr);

// Probability distribution over {dissatisfied, neutral, satisfied}. Training
// mode draws dropout masks from `rng` (required then).
Eigen::VectorXd predict(const Eigen::VectorXd& h, const ClassifierParams& params, bool train_mode,
                        double dropout = 0.1, std::mt19937_64* rng = nullptr);

struct ClassifierGrads {
  ClassifierParams params;
  Eigen::VectorXd h;
};

ClassifierGrads classifier_backward(const Eigen::VectorXd& h, const ClassifierParams& params,
                                    const ClassifierTrace& trace, const Eigen::VectorXd& d_logits);

}  // namespace sgusm
