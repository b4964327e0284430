#include "sgusm/metrics.hpp"

#include <cstdio>

#include "sgusm/error.hpp"

namespace sgusm {

using nlohmann::json;

MetricsReport compute_metrics(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size()) throw Error("compute_metrics: label/prediction count mismatch");
  if (labels.empty()) throw Error("compute_metrics: empty split");
  MetricsReport m;
  m.n_examples = labels.size();
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const int y = labels[k], p = predictions[k];
    if (y < 0 || y >= kNumClasses || p < 0 || p >= kNumClasses) throw Error("compute_metrics: class id out of range");
    ++m.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(p)];
  }
  std::size_t correct = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    std::size_t predicted = 0, support = 0;
    for (int o = 0; o < kNumClasses; ++o) {
      predicted += m.confusion[static_cast<std::size_t>(o)][cu];
      support += m.confusion[cu][static_cast<std::size_t>(o)];
    }
    const double tp = static_cast<double>(m.confusion[cu][cu]);
    correct += m.confusion[cu][cu];
    ClassMetrics& cm = m.per_class[cu];
    cm.support = support;
    cm.precision = predicted ? tp / static_cast<double>(predicted) : 0.0;
    cm.recall = support ? tp / static_cast<double>(support) : 0.0;
    cm.f1 = (cm.precision + cm.recall) > 0.0 ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall) : 0.0;
    m.macro_precision += cm.precision / kNumClasses;
    m.macro_recall += cm.recall / kNumClasses;
    m.macro_f1 += cm.f1 / kNumClasses;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.n_examples);
  return m;
}

json to_json(const MetricsReport& m) {
  json per_class = json::object();
  json confusion = json::array();
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& cm = m.per_class[static_cast<std::size_t>(c)];
    per_class[label_name(static_cast<SatisfactionLabel>(c))] = {
        {"precision", cm.precision}, {"recall", cm.recall}, {"f1", cm.f1}, {"support", cm.support}};
    confusion.push_back(m.confusion[static_cast<std::size_t>(c)]);
  }
  return {{"accuracy", m.accuracy},
          {"macro_precision", m.macro_precision},
          {"macro_recall", m.macro_recall},
          {"macro_f1", m.macro_f1},
          {"per_class", per_class},
          {"confusion", confusion},
          {"n_examples", m.n_examples}};
}

MetricsReport metrics_from_json(const json& j) {
  MetricsReport m;
  m.accuracy = j.at("accuracy").get<double>();
  m.macro_precision = j.at("macro_precision").get<double>();
  m.macro_recall = j.at("macro_recall").get<double>();
  m.macro_f1 = j.at("macro_f1").get<double>();
  m.n_examples = j.at("n_examples").get<std::size_t>();
  for (int c = 0; c < kNumClasses; ++c) {
    const json& cm = j.at("per_class").at(label_name(static_cast<SatisfactionLabel>(c)));
    auto& out = m.per_class[static_cast<std::size_t>(c)];
    out.precision = cm.at("precision").get<double>();
    out.recall = cm.at("recall").get<double>();
    out.f1 = cm.at("f1").get<double>();
    out.support = cm.at("support").get<std::size_t>();
    m.confusion[static_cast<std::size_t>(c)] =
        j.at("confusion").at(static_cast<std::size_t>(c)).get<std::array<std::size_t, kNumClasses>>();
  }
  return m;
}

std::string metrics_csv_header() { return "tag,n,accuracy,macro_precision,macro_recall,macro_f1"; }

std::string metrics_csv_row(const std::string& tag, const MetricsReport& m) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), ",%zu,%.6f,%.6f,%.6f,%.6f", m.n_examples, m.accuracy, m.macro_precision,
                m.macro_recall, m.macro_f1);
  return tag + buf;
}

}  // namespace sgusm
