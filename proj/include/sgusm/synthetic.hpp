#pragma once

// Rule-generated task-oriented dialogues with a known labeling rule.
//
// Every turn discusses one schema attribute: the user asks for it using words
// from the attribute description and the system answers with an outcome
// phrase (booked / unavailable / will check). The satisfaction label is the
// outcome of one designated "critical" attribute: booked -> satisfied,
// unavailable -> dissatisfied, will check -> neutral. Other attributes are
// distractors whose outcomes are random (or absent).

#include <cstdint>
#include <string>
#include <vector>

#include "sgusm/config.hpp"
#include "sgusm/corpus.hpp"

namespace sgusm::synthetic {

// Where the critical attribute's turn sits in a dialogue.
enum class Placement { kFirst, kRandom, kLast };

struct DialogueShape {
  Placement placement = Placement::kRandom;
  int min_turns = 3;
  int max_turns = 5;
  // Distractor system turns carry random outcome phrases instead of "okay noted".
  bool distractor_outcomes = true;
  // When >= 0, this distractor attribute always occupies turn 1 (and the
  // critical attribute is placed after it).
  int lead_attribute = -1;
};

// Task schema over one of the built-in vocabularies: "hotel" or "restaurant"
// (8 attributes each, disjoint description words).
TaskSchema make_schema(const std::string& vocabulary, std::size_t num_attributes);

// `count` dialogues with balanced labels. Ids are `prefix` + index. Unlabeled
// dialogues get a null rating.
std::vector<Dialogue> generate(const TaskSchema& schema, std::size_t critical, const DialogueShape& shape,
                               std::size_t count, bool labeled, const std::string& prefix, std::uint64_t seed);

// Small corpus for the overfit check: 30 train dialogues, distractors without
// outcomes, critical attribute at a random position.
Corpus rule_corpus(std::uint64_t seed, std::size_t train = 30);

// The critical attribute is always discussed first, distractors carry
// conflicting outcomes; attribute importance singles out the critical one.
Corpus importance_corpus(std::uint64_t seed);

// Same labeling rule over two disjoint schemas.
struct TransferPair {
  Corpus source;  // "hotel" schema, full splits
  Corpus target;  // "restaurant" schema, test split only is meaningful
};
TransferPair transfer_pair(std::uint64_t seed);

// Small labeled set whose first turns are dominated by a distractor, plus a
// 400-dialogue unlabeled pool (critical attribute first) that reveals the
// critical attribute's importance.
Corpus semi_supervised_corpus(std::uint64_t seed);

enum class Task { kRule, kImportance, kTransfer, kSemiSupervised };
Task task_from_string(const std::string& name);  // rule|importance|transfer|semi
const char* to_string(Task task);

// Run settings used with the synthetic tasks: mock encoder, small hidden size.
// Paths are left empty.
RunConfig synthetic_config(Task task, std::uint64_t seed);

// Writes schema.json, train/valid/test.jsonl and (if any) unlabeled.jsonl.
void write_corpus(const Corpus& corpus, const std::string& dir);

}  // namespace sgusm::synthetic
