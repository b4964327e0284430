#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>

#include "json.hpp"

#include "sgusm/corpus.hpp"

namespace sgusm {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

using ConfusionMatrix = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;  // [true][predicted]

struct MetricsReport {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;  // unweighted mean of the per-class F1 scores
  std::array<ClassMetrics, kNumClasses> per_class{};
  ConfusionMatrix confusion{};
  std::size_t n_examples = 0;
};

// Metrics from parallel label / prediction arrays of class ids. Undefined
// ratios (no predictions or no support for a class) count as 0.
MetricsReport compute_metrics(std::span<const int> labels, std::span<const int> predictions);

nlohmann::json to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const nlohmann::json& j);

std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& tag, const MetricsReport& m);

}  // namespace sgusm
