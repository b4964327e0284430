#include "sgusm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "sgusm/error.hpp"
#include "sgusm/hash.hpp"

namespace sgusm {

using nlohmann::json;

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

namespace {

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string locate(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

const json& require(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("missing field '") + key + "'", where);
  return *it;
}

std::string require_string(const json& j, const char* key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_string()) throw ValidationError(std::string("field '") + key + "' must be a string", where);
  return v.get<std::string>();
}

}  // namespace

const char* label_name(SatisfactionLabel label) {
  switch (label) {
    case SatisfactionLabel::kDissatisfied: return "dissatisfied";
    case SatisfactionLabel::kNeutral: return "neutral";
    case SatisfactionLabel::kSatisfied: return "satisfied";
  }
  return "?";
}

SatisfactionLabel map_rating(int rating, const std::string& dialogue_id) {
  if (rating < 1 || rating > 5) {
    throw ValidationError("dialogue '" + dialogue_id + "': rating " + std::to_string(rating) +
                          " outside 1..5");
  }
  if (rating < 3) return SatisfactionLabel::kDissatisfied;
  if (rating == 3) return SatisfactionLabel::kNeutral;
  return SatisfactionLabel::kSatisfied;
}

std::map<std::string, std::size_t> TaskSchema::index() const {
  std::map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < attributes.size(); ++i) out.emplace(attributes[i].id, i);
  return out;
}

std::string TaskSchema::fingerprint() const {
  // Length-prefixed fields so that ("ab","c") and ("a","bc") differ.
  std::uint64_t h = kFnvOffset;
  auto feed = [&h](const std::string& s) {
    h = fnv1a64(std::to_string(s.size()) + ":", h);
    h = fnv1a64(s, h);
  };
  feed(name);
  for (const auto& a : attributes) {
    feed(a.id);
    feed(a.description);
  }
  return to_hex(h);
}

std::vector<const Dialogue*> Corpus::importance_pool(bool use_unlabeled) const {
  std::vector<const Dialogue*> pool;
  pool.reserve(labeled.train.size() + (use_unlabeled ? unlabeled.size() : 0));
  for (const auto& d : labeled.train) pool.push_back(&d);
  if (use_unlabeled) {
    for (const auto& d : unlabeled) pool.push_back(&d);
  }
  return pool;
}

void validate_schema(const TaskSchema& schema, const std::string& where) {
  if (schema.attributes.empty()) throw ValidationError("schema has no attributes", where);
  std::set<std::string> seen;
  for (const auto& a : schema.attributes) {
    if (a.id.empty()) throw ValidationError("attribute with empty id", where);
    if (!seen.insert(a.id).second) throw ValidationError("duplicate attribute id '" + a.id + "'", where);
    if (is_blank(a.description)) {
      throw ValidationError("attribute '" + a.id + "' has an empty description", where);
    }
  }
}

void validate_dialogue(const Dialogue& dialogue, bool require_label, const std::string& where) {
  if (dialogue.id.empty()) throw ValidationError("dialogue with empty id", where);
  if (dialogue.turns.empty()) throw ValidationError("dialogue '" + dialogue.id + "' has no turns", where);
  for (std::size_t j = 0; j < dialogue.turns.size(); ++j) {
    if (dialogue.turns[j].index != static_cast<int>(j + 1)) {
      throw ValidationError("dialogue '" + dialogue.id + "': turn indices must be 1..N", where);
    }
  }
  if (dialogue.rating) {
    SatisfactionLabel expected = map_rating(*dialogue.rating, dialogue.id);
    if (dialogue.label && *dialogue.label != expected) {
      throw ValidationError("dialogue '" + dialogue.id + "': label disagrees with rating", where);
    }
  }
  if (require_label && !dialogue.label) {
    throw ValidationError("dialogue '" + dialogue.id + "' in a labeled split has no rating", where);
  }
}

TaskSchema parse_schema(const json& j, const std::string& where) {
  if (!j.is_object()) throw ValidationError("schema must be a JSON object", where);
  TaskSchema schema;
  schema.name = require_string(j, "name", where);
  const json& attrs = require(j, "attributes", where);
  if (!attrs.is_array()) throw ValidationError("'attributes' must be an array", where);
  for (const auto& a : attrs) {
    if (!a.is_object()) throw ValidationError("attribute entries must be objects", where);
    schema.attributes.push_back({require_string(a, "id", where), require_string(a, "description", where)});
  }
  validate_schema(schema, where);
  return schema;
}

json schema_to_json(const TaskSchema& schema) {
  json attrs = json::array();
  for (const auto& a : schema.attributes) attrs.push_back({{"id", a.id}, {"description", a.description}});
  return {{"name", schema.name}, {"attributes", attrs}};
}

Dialogue parse_dialogue(const json& j, const std::string& where) {
  if (!j.is_object()) throw ValidationError("dialogue record must be a JSON object", where);
  Dialogue d;
  d.id = require_string(j, "id", where);
  const json& turns = require(j, "turns", where);
  if (!turns.is_array()) throw ValidationError("'turns' must be an array", where);
  int index = 1;
  for (const auto& t : turns) {
    if (!t.is_object()) throw ValidationError("turn entries must be objects", where);
    DialogueTurn turn;
    turn.user_utterance = require_string(t, "user", where);
    // A trailing unanswered user turn keeps an empty system side.
    if (auto it = t.find("system"); it != t.end() && !it->is_null()) {
      if (!it->is_string()) throw ValidationError("field 'system' must be a string", where);
      turn.system_utterance = it->get<std::string>();
    }
    if (auto it = t.find("attributes"); it != t.end()) {
      if (!it->is_array()) throw ValidationError("field 'attributes' must be an array", where);
      for (const auto& ref : *it) {
        if (!ref.is_string()) throw ValidationError("attribute references must be strings", where);
        turn.attribute_refs.push_back(ref.get<std::string>());
      }
    }
    turn.index = index++;
    d.turns.push_back(std::move(turn));
  }
  const json& rating = require(j, "rating", where);
  if (!rating.is_null()) {
    if (!rating.is_number_integer()) throw ValidationError("'rating' must be an integer or null", where);
    try {
      d.rating = rating.get<int>();
      d.label = map_rating(*d.rating, d.id);
    } catch (const ValidationError& e) {
      throw ValidationError(e.what(), where);
    }
  }
  validate_dialogue(d, false, where);
  return d;
}

json dialogue_to_json(const Dialogue& dialogue) {
  json turns = json::array();
  for (const auto& t : dialogue.turns) {
    json turn = {{"user", t.user_utterance}, {"system", t.system_utterance}};
    if (!t.attribute_refs.empty()) turn["attributes"] = t.attribute_refs;
    turns.push_back(std::move(turn));
  }
  json out = {{"id", dialogue.id}, {"turns", turns}};
  out["rating"] = dialogue.rating ? json(*dialogue.rating) : json(nullptr);
  return out;
}

TaskSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what(), path.string());
  }
  return parse_schema(j, path.string());
}

std::vector<Dialogue> load_dialogues(const std::filesystem::path& path, bool labeled) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dialogue file: " + path.string());
  std::vector<Dialogue> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const std::string where = locate(path, line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("malformed JSON: ") + e.what(), where);
    }
    Dialogue d = parse_dialogue(j, where);
    if (labeled && !d.label) throw ValidationError("labeled split record '" + d.id + "' has null rating", where);
    if (!ids.insert(d.id).second) throw ValidationError("duplicate dialogue id '" + d.id + "'", where);
    out.push_back(std::move(d));
  }
  return out;
}

Corpus load_corpus(const CorpusPaths& paths) {
  Corpus corpus;
  corpus.schema = load_schema(paths.schema);
  corpus.labeled.train = load_dialogues(paths.train, true);
  corpus.labeled.valid = load_dialogues(paths.valid, true);
  corpus.labeled.test = load_dialogues(paths.test, true);
  if (paths.unlabeled) corpus.unlabeled = load_dialogues(*paths.unlabeled, false);

  const auto index = corpus.schema.index();
  std::map<std::string, std::string> owner;  // dialogue id -> file
  auto check = [&](const std::vector<Dialogue>& split, const std::filesystem::path& file) {
    for (const auto& d : split) {
      auto [it, inserted] = owner.emplace(d.id, file.string());
      if (!inserted) {
        throw ValidationError("duplicate dialogue id '" + d.id + "' (also in " + it->second + ")",
                              file.string());
      }
      for (const auto& t : d.turns) {
        for (const auto& ref : t.attribute_refs) {
          if (!index.count(ref)) {
            throw ValidationError("dialogue '" + d.id + "' turn " + std::to_string(t.index) +
                                      " references unknown attribute '" + ref + "'",
                                  file.string());
          }
        }
      }
    }
  };
  check(corpus.labeled.train, paths.train);
  check(corpus.labeled.valid, paths.valid);
  check(corpus.labeled.test, paths.test);
  if (paths.unlabeled) check(corpus.unlabeled, *paths.unlabeled);
  return corpus;
}

void save_schema(const TaskSchema& schema, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << schema_to_json(schema).dump(2) << '\n';
}

void save_dialogues(const std::vector<Dialogue>& dialogues, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  for (const auto& d : dialogues) out << dialogue_to_json(d).dump() << '\n';
}

std::array<std::size_t, kNumClasses> label_counts(const std::vector<Dialogue>& split) {
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& d : split) {
    if (d.label) ++counts[static_cast<int>(*d.label)];
  }
  return counts;
}

}  // namespace sgusm
