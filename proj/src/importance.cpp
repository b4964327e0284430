#include "sgusm/importance.hpp"

#include <cmath>
#include <string>

#include "sgusm/encoder.hpp"
#include "sgusm/error.hpp"
#include "sgusm/kernels.hpp"
#include "sgusm/numeric.hpp"

namespace sgusm {

void MmrConfig::validate() const {
  if (top_k < 1) throw ConfigError("mmr.top_k must be >= 1");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("mmr.lambda must lie in [0, 1]");
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

std::span<const double> row_span(const Eigen::MatrixXd& m, Eigen::Index r, std::vector<double>& buf) {
  buf.resize(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) buf[static_cast<std::size_t>(c)] = m(r, c);
  return buf;
}

void check_rows_nonzero(const Eigen::MatrixXd& m, const char* what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (m.row(r).squaredNorm() == 0.0) {
      throw ValidationError(std::string(what) + " " + std::to_string(r + 1) +
                            " has a zero-norm embedding; cosine similarity is undefined");
    }
  }
}

Eigen::MatrixXd attribute_similarities(const Eigen::MatrixXd& attributes) {
  const Eigen::Index m = attributes.rows();
  Eigen::MatrixXd sim(m, m);
  std::vector<double> a, b;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = 0; k < m; ++k) sim(i, k) = cosine(row_span(attributes, i, a), row_span(attributes, k, b));
  }
  return sim;
}

Eigen::VectorXd relevance_to(const Eigen::MatrixXd& attributes, const Eigen::MatrixXd& turns, Eigen::Index j) {
  Eigen::VectorXd rel(attributes.rows());
  std::vector<double> a, d;
  row_span(turns, j, d);
  for (Eigen::Index i = 0; i < attributes.rows(); ++i) rel[i] = cosine(row_span(attributes, i, a), d);
  return rel;
}

}  // namespace

std::vector<int> mmr_select_scores(const Eigen::VectorXd& relevance, const Eigen::MatrixXd& redundancy,
                                   const MmrConfig& cfg) {
  cfg.validate();
  const int m = static_cast<int>(relevance.size());
  const int picks = std::min(cfg.top_k, m);
  std::vector<int> selected;
  selected.reserve(static_cast<std::size_t>(picks));
  std::vector<bool> used(static_cast<std::size_t>(m), false);
  for (int step = 0; step < picks; ++step) {
    int best = -1;
    double best_score = 0.0;
    for (int i = 0; i < m; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      double diversity = 0.0;
      if (!selected.empty()) {
        diversity = redundancy(i, selected.front());
        for (int k : selected) diversity = std::max(diversity, redundancy(i, k));
      }
      const double score = cfg.lambda * relevance[i] - (1.0 - cfg.lambda) * diversity;
      if (best < 0 || score > best_score) {
        best = i;
        best_score = score;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    selected.push_back(best);
  }
  return selected;
}

std::vector<int> mmr_select(const Eigen::VectorXd& turn, const Eigen::MatrixXd& attributes,
                            const MmrConfig& cfg) {
  if (turn.size() != attributes.cols()) throw Error("mmr_select: dimension mismatch");
  if (turn.squaredNorm() == 0.0) throw ValidationError("turn has a zero-norm embedding; cosine similarity is undefined");
  check_rows_nonzero(attributes, "attribute");
  const Eigen::MatrixXd d = turn.transpose();
  return mmr_select_scores(relevance_to(attributes, d, 0), attribute_similarities(attributes), cfg);
}

Eigen::VectorXd presence_vector(std::span<const int> selected, std::size_t num_attributes) {
  if (selected.empty()) throw Error("presence_vector: empty selection");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_attributes));
  for (int i : selected) {
    if (i < 0 || static_cast<std::size_t>(i) >= num_attributes) throw Error("presence_vector: index out of range");
    f[i] = 1.0;
  }
  return f;
}

Eigen::VectorXd discount(const Eigen::VectorXd& presence, int position) {
  if (position < 1) throw Error("discount: turn position must be >= 1");
  return presence / std::log(static_cast<double>(position) + 1.0);
}

void SelectionCounts::add_dialogue(const std::vector<std::vector<int>>& selections) {
  if (selections.size() > counts_.size()) {
    counts_.resize(selections.size(), std::vector<std::uint64_t>(num_attributes_, 0));
  }
  for (std::size_t j = 0; j < selections.size(); ++j) {
    for (int i : selections[j]) {
      if (i < 0 || static_cast<std::size_t>(i) >= num_attributes_) throw Error("selection index out of range");
      ++counts_[j][static_cast<std::size_t>(i)];
    }
  }
  ++num_dialogues_;
}

void SelectionCounts::merge(const SelectionCounts& other) {
  if (other.num_attributes_ != num_attributes_) throw Error("SelectionCounts::merge: attribute count mismatch");
  if (other.counts_.size() > counts_.size()) {
    counts_.resize(other.counts_.size(), std::vector<std::uint64_t>(num_attributes_, 0));
  }
  for (std::size_t j = 0; j < other.counts_.size(); ++j) {
    for (std::size_t i = 0; i < num_attributes_; ++i) counts_[j][i] += other.counts_[j][i];
  }
  num_dialogues_ += other.num_dialogues_;
}

std::uint64_t SelectionCounts::count(std::size_t attribute, int position) const {
  if (position < 1 || static_cast<std::size_t>(position) > counts_.size()) return 0;
  return counts_[static_cast<std::size_t>(position - 1)].at(attribute);
}

Eigen::VectorXd SelectionCounts::discounted_sums() const {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_attributes_));
  for (std::size_t j = 0; j < counts_.size(); ++j) {
    const double ln = std::log(static_cast<double>(j + 1) + 1.0);
    for (std::size_t i = 0; i < num_attributes_; ++i) {
      sums[static_cast<Eigen::Index>(i)] += static_cast<double>(counts_[j][i]) / ln;
    }
  }
  return sums;
}

std::vector<std::vector<int>> select_dialogue(const Eigen::MatrixXd& turns, const Eigen::MatrixXd& attributes,
                                              const MmrConfig& cfg) {
  if (turns.cols() != attributes.cols()) throw Error("select_dialogue: dimension mismatch");
  check_rows_nonzero(turns, "turn");
  check_rows_nonzero(attributes, "attribute");
  const Eigen::MatrixXd redundancy = attribute_similarities(attributes);
  std::vector<std::vector<int>> out;
  out.reserve(static_cast<std::size_t>(turns.rows()));
  for (Eigen::Index j = 0; j < turns.rows(); ++j) {
    out.push_back(mmr_select_scores(relevance_to(attributes, turns, j), redundancy, cfg));
  }
  return out;
}

ImportanceVector ImportanceVector::from_counts(const SelectionCounts& counts) {
  if (counts.num_dialogues() == 0) throw Error("importance: no dialogues to estimate from");
  ImportanceVector out;
  out.raw_sums = counts.discounted_sums();
  out.scores = softmax(out.raw_sums);
  out.num_dialogues = counts.num_dialogues();
  return out;
}

ImportanceVector ImportanceVector::uniform(std::size_t num_attributes) {
  ImportanceVector out;
  const auto m = static_cast<Eigen::Index>(num_attributes);
  out.scores = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(num_attributes));
  out.raw_sums = Eigen::VectorXd::Zero(m);
  return out;
}

ImportanceVector importance_scores(std::span<const Eigen::MatrixXd> dialogue_turns,
                                   const Eigen::MatrixXd& attributes, const MmrConfig& cfg) {
  cfg.validate();
  if (dialogue_turns.empty()) throw Error("importance: corpus is empty");
  return ImportanceVector::from_counts(kernels::parallel::selection_counts(dialogue_turns, attributes, cfg));
}

ImportanceVector importance_scores(const Corpus& corpus, bool use_unlabeled, const Encoder& turn_encoder,
                                   const Encoder& attribute_encoder, const MmrConfig& cfg) {
  const auto pool = corpus.importance_pool(use_unlabeled);
  if (pool.empty()) throw Error("importance: corpus is empty");
  const std::vector<Eigen::MatrixXd> turns = kernels::parallel::encode_dialogues(turn_encoder, pool);
  return importance_scores(turns, attribute_encoder.encode_attributes(corpus.schema), cfg);
}

}  // namespace sgusm
