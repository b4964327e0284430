#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sgusm/corpus.hpp"

namespace sgusm {

class Encoder;

struct MmrConfig {
  int top_k = 5;        // attributes picked per turn
  double lambda = 0.5;  // relevance vs. redundancy trade-off

  // Requires 1 <= top_k and 0 <= lambda <= 1. top_k larger than the schema is
  // allowed and selects every attribute.
  void validate() const;
};

// Plain cosine similarity; callers guarantee non-zero norms.
double cosine(std::span<const double> a, std::span<const double> b);

// Greedy maximal-marginal-relevance selection of attributes for one turn.
//
// Step by step, picks the unselected attribute maximizing
//   lambda * cos(t_i, d) - (1 - lambda) * max_{k selected} cos(t_i, t_k),
// with the redundancy term taken as 0 while nothing is selected. Stops after
// min(top_k, M) picks; ties go to the lowest attribute index. Returns 0-based
// indices in pick order. Throws ValidationError on zero-norm inputs.
std::vector<int> mmr_select(const Eigen::VectorXd& turn, const Eigen::MatrixXd& attributes,
                            const MmrConfig& cfg);

// Same selection from precomputed similarities: relevance[i] = cos(t_i, d),
// redundancy(i, k) = cos(t_i, t_k).
std::vector<int> mmr_select_scores(const Eigen::VectorXd& relevance, const Eigen::MatrixXd& redundancy,
                                   const MmrConfig& cfg);

// 0/1 indicator of the selected attributes. Selection must be non-empty and
// within 0..num_attributes-1.
Eigen::VectorXd presence_vector(std::span<const int> selected, std::size_t num_attributes);

// presence / ln(position + 1) for a 1-based turn position.
Eigen::VectorXd discount(const Eigen::VectorXd& presence, int position);

// How often each attribute was selected at each turn position, summed over
// dialogues. Integer counts keep the corpus reduction exact, so the result
// does not depend on dialogue order or thread count.
class SelectionCounts {
 public:
  explicit SelectionCounts(std::size_t num_attributes = 0) : num_attributes_(num_attributes) {}

  std::size_t num_attributes() const { return num_attributes_; }
  std::size_t max_position() const { return counts_.size(); }
  std::size_t num_dialogues() const { return num_dialogues_; }

  // Adds one dialogue: selections[j] is the pick list of turn j+1.
  void add_dialogue(const std::vector<std::vector<int>>& selections);
  void merge(const SelectionCounts& other);

  std::uint64_t count(std::size_t attribute, int position) const;

  // Sum over dialogues and turns of the discounted presence vectors.
  Eigen::VectorXd discounted_sums() const;

 private:
  std::size_t num_attributes_;
  std::size_t num_dialogues_ = 0;
  std::vector<std::vector<std::uint64_t>> counts_;  // [position-1][attribute]
};

// Per-turn selections for one dialogue with turn embeddings `turns` (N x H).
std::vector<std::vector<int>> select_dialogue(const Eigen::MatrixXd& turns, const Eigen::MatrixXd& attributes,
                                              const MmrConfig& cfg);

struct ImportanceVector {
  Eigen::VectorXd scores;    // softmax of raw_sums; a distribution over attributes
  Eigen::VectorXd raw_sums;  // summed discounted presence vectors
  std::size_t num_dialogues = 0;

  static ImportanceVector from_counts(const SelectionCounts& counts);
  static ImportanceVector uniform(std::size_t num_attributes);
};

// Importance over dialogues given as turn-embedding matrices. Parallel over
// dialogues; result is bitwise independent of scheduling.
ImportanceVector importance_scores(std::span<const Eigen::MatrixXd> dialogue_turns,
                                   const Eigen::MatrixXd& attributes, const MmrConfig& cfg);

// Importance over the corpus' train split plus, when enabled, the unlabeled pool.
ImportanceVector importance_scores(const Corpus& corpus, bool use_unlabeled, const Encoder& turn_encoder,
                                   const Encoder& attribute_encoder, const MmrConfig& cfg);

}  // namespace sgusm
