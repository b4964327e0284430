#include "sgusm/model.hpp"

#include <algorithm>
#include <cmath>

#include "sgusm/error.hpp"

namespace sgusm {

namespace {
constexpr double kProbFloor = 1e-12;
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoImportance: return "w/oImp";
    case Variant::kNoFulfillment: return "w/oFul";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "full") return Variant::kFull;
  if (s == "w/oImp" || s == "woImp" || s == "no-importance") return Variant::kNoImportance;
  if (s == "w/oFul" || s == "woFul" || s == "no-fulfillment") return Variant::kNoFulfillment;
  throw ConfigError("unknown variant '" + s + "' (expected full|w/oImp|w/oFul)");
}

ModelParams ModelParams::init(int hidden, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.turn_projection = Eigen::MatrixXd::Identity(hidden, hidden);
  p.attribute_projection = Eigen::MatrixXd::Identity(hidden, hidden);
  p.bilinear = BilinearParams::init(hidden, rng);
  p.classifier = ClassifierParams::init(hidden, rng);
  return p;
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
  ModelParams z = other;
  z.for_each([](const char*, auto& t) { t.setZero(); });
  return z;
}

double ModelParams::squared_norm() const {
  double total = 0.0;
  for_each([&total](const char*, const auto& t) { total += t.squaredNorm(); });
  return total;
}

void ModelParams::scale(double factor) {
  for_each([factor](const char*, auto& t) { t *= factor; });
}

void ModelParams::add(const ModelParams& other) {
  zip(*this, other, [](auto& a, const auto& b) { a += b; });
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each([&ok](const char*, const auto& t) { ok = ok && t.allFinite(); });
  return ok;
}

Eigen::MatrixXd project_attributes(const ModelParams& params, const ModelSettings& settings,
                                   const Eigen::MatrixXd& attribute_features) {
  const Eigen::MatrixXd& proj = settings.share_encoders ? params.turn_projection : params.attribute_projection;
  return attribute_features * proj.transpose();
}

Eigen::MatrixXd project_turns(const ModelParams& params, const Eigen::MatrixXd& turn_features) {
  return turn_features * params.turn_projection.transpose();
}

ForwardTrace forward(const ModelParams& params, const ModelSettings& settings,
                     const Eigen::MatrixXd& turn_features, const Eigen::MatrixXd& attribute_features,
                     const Eigen::VectorXd& importance, const DropoutMasks* masks) {
  if (importance.size() != attribute_features.rows()) {
    throw Error("forward: importance length does not match the attribute count");
  }
  ForwardTrace t;
  t.turns = project_turns(params, turn_features);
  t.attributes = project_attributes(params, settings, attribute_features);
  const auto m = attribute_features.rows();
  t.importance = settings.variant == Variant::kNoImportance
                     ? Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m))
                     : importance;
  if (settings.variant == Variant::kNoFulfillment) {
    t.h = aggregate(t.attributes.transpose(), t.importance);
  } else {
    t.fulfillment = fulfillment_reprs(t.turns, t.attributes, params.bilinear, settings.attention_mode);
    t.h = aggregate(t.fulfillment.reprs, t.importance);
  }
  t.classifier = classifier_forward(t.h, params.classifier, masks);
  return t;
}

double cross_entropy(const Eigen::VectorXd& probs, int label) {
  return -std::log(std::max(probs[label], kProbFloor));
}

ModelParams backward(const ModelParams& params, const ModelSettings& settings,
                     const Eigen::MatrixXd& turn_features, const Eigen::MatrixXd& attribute_features,
                     const ForwardTrace& trace, int label) {
  ModelParams g = ModelParams::zeros_like(params);

  Eigen::VectorXd d_logits = trace.classifier.probs;
  if (trace.classifier.probs[label] < kProbFloor) {
    d_logits.setZero();  // clamped region: the loss is locally constant
  } else {
    d_logits[label] -= 1.0;
  }
  ClassifierGrads cg = classifier_backward(trace.h, params.classifier, trace.classifier, d_logits);
  g.classifier = std::move(cg.params);

  Eigen::MatrixXd d_turns = Eigen::MatrixXd::Zero(trace.turns.rows(), trace.turns.cols());
  Eigen::MatrixXd d_attributes;
  if (settings.variant == Variant::kNoFulfillment) {
    // h = T^T S
    d_attributes = trace.importance * cg.h.transpose();
  } else {
    // h = T^a S
    const Eigen::MatrixXd d_reprs = cg.h * trace.importance.transpose();
    FulfillmentGrads fg = fulfillment_backward(trace.turns, trace.attributes, params.bilinear,
                                               settings.attention_mode, trace.fulfillment, d_reprs);
    g.bilinear.weight = std::move(fg.weight);
    d_turns = std::move(fg.turns);
    d_attributes = std::move(fg.attributes);
  }

  if (settings.fine_tune) {
    // D = X P^T  =>  dP = dD^T X
    g.turn_projection = d_turns.transpose() * turn_features;
    const Eigen::MatrixXd d_attr_proj = d_attributes.transpose() * attribute_features;
    if (settings.share_encoders) {
      g.turn_projection += d_attr_proj;
    } else {
      g.attribute_projection = d_attr_proj;
    }
  }
  return g;
}

}  // namespace sgusm
