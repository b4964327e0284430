#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace sgusm {

enum class SatisfactionLabel : int { kDissatisfied = 0, kNeutral = 1, kSatisfied = 2 };

inline constexpr int kNumClasses = 3;

const char* label_name(SatisfactionLabel label);

// Maps a 1..5 rating onto the three satisfaction classes (<3, =3, >3).
// Throws ValidationError naming `dialogue_id` when the rating is out of range.
SatisfactionLabel map_rating(int rating, const std::string& dialogue_id = {});

struct TaskAttribute {
  std::string id;
  std::string description;

  bool operator==(const TaskAttribute&) const = default;
};

struct TaskSchema {
  std::string name;
  std::vector<TaskAttribute> attributes;

  std::size_t size() const { return attributes.size(); }
  // id -> position; positions follow file order.
  std::map<std::string, std::size_t> index() const;
  // Stable hex digest of the schema contents (name, ids, descriptions in order).
  std::string fingerprint() const;

  bool operator==(const TaskSchema&) const = default;
};

struct DialogueTurn {
  std::string user_utterance;
  std::string system_utterance;
  int index = 0;  // 1-based position within the dialogue
  // Optional annotation: ids of schema attributes the turn discusses. Must
  // name attributes of the corpus schema; not used by the model.
  std::vector<std::string> attribute_refs;

  bool operator==(const DialogueTurn&) const = default;
};

struct Dialogue {
  std::string id;
  std::vector<DialogueTurn> turns;
  // Raw 1..5 rating kept for serialization; `label` is derived from it.
  std::optional<int> rating;
  std::optional<SatisfactionLabel> label;

  std::size_t num_turns() const { return turns.size(); }

  bool operator==(const Dialogue&) const = default;
};

struct LabeledSplits {
  std::vector<Dialogue> train;
  std::vector<Dialogue> valid;
  std::vector<Dialogue> test;
};

struct Corpus {
  TaskSchema schema;
  LabeledSplits labeled;
  std::vector<Dialogue> unlabeled;

  // Dialogues feeding importance estimation: train split, then the unlabeled
  // pool when enabled.
  std::vector<const Dialogue*> importance_pool(bool use_unlabeled) const;
};

struct CorpusPaths {
  std::filesystem::path schema;
  std::filesystem::path train;
  std::filesystem::path valid;
  std::filesystem::path test;
  std::optional<std::filesystem::path> unlabeled;
};

// Checks the TaskSchema invariants: M >= 1, unique ids, non-blank descriptions.
void validate_schema(const TaskSchema& schema, const std::string& where = {});
// Checks the Dialogue invariants. `require_label` is set for labeled splits.
void validate_dialogue(const Dialogue& dialogue, bool require_label, const std::string& where = {});

TaskSchema parse_schema(const nlohmann::json& j, const std::string& where = {});
nlohmann::json schema_to_json(const TaskSchema& schema);

Dialogue parse_dialogue(const nlohmann::json& j, const std::string& where = {});
nlohmann::json dialogue_to_json(const Dialogue& dialogue);

TaskSchema load_schema(const std::filesystem::path& path);
// Reads one JSONL dialogue file. Labeled files reject null ratings.
std::vector<Dialogue> load_dialogues(const std::filesystem::path& path, bool labeled);
// Loads and cross-validates a corpus: attribute references must resolve and
// dialogue ids must be unique across all files.
Corpus load_corpus(const CorpusPaths& paths);

void save_schema(const TaskSchema& schema, const std::filesystem::path& path);
void save_dialogues(const std::vector<Dialogue>& dialogues, const std::filesystem::path& path);

// Count of each class in a labeled split, indexed by class id.
std::array<std::size_t, kNumClasses> label_counts(const std::vector<Dialogue>& split);

}  // namespace sgusm
