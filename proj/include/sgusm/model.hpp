#pragma once

#include <cstdint>
#include <utility>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "sgusm/fulfillment.hpp"
#include "sgusm/predictor.hpp"

namespace sgusm {

// Full model, or one of the two ablations.
//   kNoImportance:  importance replaced by the uniform vector 1/M.
//   kNoFulfillment: attended representations replaced by the attribute
//                   embeddings themselves, so h ignores the dialogue.
enum class Variant { kFull, kNoImportance, kNoFulfillment };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);  // "full", "w/oImp", "w/oFul"

struct ModelSettings {
  AttentionMode attention_mode = AttentionMode::kStandard;
  Variant variant = Variant::kFull;
  bool fine_tune = true;        // projections receive gradients
  bool share_encoders = false;  // attributes use the turn projection
  double dropout = 0.1;
};

struct ModelParams {
  Eigen::MatrixXd turn_projection;       // H x H
  Eigen::MatrixXd attribute_projection;  // H x H, unused when encoders are shared
  BilinearParams bilinear;
  ClassifierParams classifier;

  static ModelParams init(int hidden, std::uint64_t seed);
  static ModelParams zeros_like(const ModelParams& other);

  int hidden() const { return static_cast<int>(turn_projection.rows()); }

  // Visits every tensor as (name, Eigen::MatrixXd& or Eigen::VectorXd&) in a
  // fixed order.
  template <class F>
  void for_each(F&& f) {
    f("turn_projection", turn_projection);
    f("attribute_projection", attribute_projection);
    f("bilinear", bilinear.weight);
    f("mlp.w1", classifier.w1);
    f("mlp.b1", classifier.b1);
    f("mlp.w2", classifier.w2);
    f("mlp.b2", classifier.b2);
    f("mlp.w3", classifier.w3);
    f("mlp.b3", classifier.b3);
  }
  template <class F>
  void for_each(F&& f) const {
    const_cast<ModelParams*>(this)->for_each([&f](const char* name, auto& t) { f(name, std::as_const(t)); });
  }

  // Pairwise visit over two parameter sets with identical layout.
  template <class F>
  static void zip(ModelParams& a, const ModelParams& b, F&& f) {
    f(a.turn_projection, b.turn_projection);
    f(a.attribute_projection, b.attribute_projection);
    f(a.bilinear.weight, b.bilinear.weight);
    f(a.classifier.w1, b.classifier.w1);
    f(a.classifier.b1, b.classifier.b1);
    f(a.classifier.w2, b.classifier.w2);
    f(a.classifier.b2, b.classifier.b2);
    f(a.classifier.w3, b.classifier.w3);
    f(a.classifier.b3, b.classifier.b3);
  }

  template <class F>
  static void zip3(ModelParams& a, const ModelParams& b, const ModelParams& c, F&& f) {
    f(a.turn_projection, b.turn_projection, c.turn_projection);
    f(a.attribute_projection, b.attribute_projection, c.attribute_projection);
    f(a.bilinear.weight, b.bilinear.weight, c.bilinear.weight);
    f(a.classifier.w1, b.classifier.w1, c.classifier.w1);
    f(a.classifier.b1, b.classifier.b1, c.classifier.b1);
    f(a.classifier.w2, b.classifier.w2, c.classifier.w2);
    f(a.classifier.b2, b.classifier.b2, c.classifier.b2);
    f(a.classifier.w3, b.classifier.w3, c.classifier.w3);
    f(a.classifier.b3, b.classifier.b3, c.classifier.b3);
  }

  double squared_norm() const;
  void scale(double factor);
  void add(const ModelParams& other);
  bool all_finite() const;
};

// Projected attribute embeddings T (M x H) from pooled attribute features.
Eigen::MatrixXd project_attributes(const ModelParams& params, const ModelSettings& settings,
                                   const Eigen::MatrixXd& attribute_features);
// Projected turn embeddings D (N x H) from pooled turn features.
Eigen::MatrixXd project_turns(const ModelParams& params, const Eigen::MatrixXd& turn_features);

struct ForwardTrace {
  Eigen::MatrixXd turns;       // D
  Eigen::MatrixXd attributes;  // T
  FulfillmentReprs fulfillment;
  Eigen::VectorXd importance;  // S actually used (uniform under kNoImportance)
  Eigen::VectorXd h;
  ClassifierTrace classifier;
};

// One dialogue through the model. `masks` null means evaluation mode.
ForwardTrace forward(const ModelParams& params, const ModelSettings& settings,
                     const Eigen::MatrixXd& turn_features, const Eigen::MatrixXd& attribute_features,
                     const Eigen::VectorXd& importance, const DropoutMasks* masks = nullptr);

// Cross-entropy -log p[label], with p[label] clamped at 1e-12.
double cross_entropy(const Eigen::VectorXd& probs, int label);

// Gradient of cross_entropy(trace.classifier.probs, label) w.r.t. all params.
ModelParams backward(const ModelParams& params, const ModelSettings& settings,
                     const Eigen::MatrixXd& turn_features, const Eigen::MatrixXd& attribute_features,
                     const ForwardTrace& trace, int label);

}  // namespace sgusm
