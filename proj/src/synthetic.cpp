#include "sgusm/synthetic.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <random>

#include "sgusm/error.hpp"

namespace sgusm::synthetic {

namespace {

struct AttributeWords {
  const char* id;
  std::array<const char*, 4> words;
};

constexpr std::array<AttributeWords, 8> kHotel = {{
    {"hotel-price", {"price", "range", "budget", "cost"}},
    {"hotel-area", {"area", "location", "district", "neighbourhood"}},
    {"hotel-stars", {"star", "rating", "quality", "grade"}},
    {"hotel-parking", {"parking", "garage", "car", "space"}},
    {"hotel-internet", {"wifi", "internet", "connection", "network"}},
    {"hotel-breakfast", {"breakfast", "morning", "meal", "buffet"}},
    {"hotel-checkin", {"arrival", "checkin", "date", "day"}},
    {"hotel-pool", {"swimming", "pool", "spa", "gym"}},
}};

constexpr std::array<AttributeWords, 8> kRestaurant = {{
    {"restaurant-food", {"cuisine", "food", "dish", "menu"}},
    {"restaurant-time", {"booking", "time", "reservation", "hour"}},
    {"restaurant-people", {"party", "size", "people", "guests"}},
    {"restaurant-pricerange", {"expensive", "cheap", "moderate", "pricing"}},
    {"restaurant-table", {"table", "seat", "window", "terrace"}},
    {"restaurant-diet", {"vegetarian", "vegan", "gluten", "allergy"}},
    {"restaurant-drinks", {"wine", "beer", "cocktail", "drinks"}},
    {"restaurant-payment", {"payment", "card", "cash", "bill"}},
}};

constexpr std::array<const char*, 3> kOutcomePhrases = {
    "sorry not available",    // dissatisfied
    "will check later",       // neutral
    "booked and confirmed",   // satisfied
};

constexpr std::array<int, 3> kRatingFor = {2, 3, 5};

const std::array<AttributeWords, 8>& vocabulary_for(const std::string& name) {
  if (name == "hotel") return kHotel;
  if (name == "restaurant") return kRestaurant;
  throw ConfigError("unknown synthetic vocabulary '" + name + "' (hotel|restaurant)");
}

const AttributeWords& words_for(const TaskAttribute& attribute) {
  for (const auto* vocab : {&kHotel, &kRestaurant}) {
    for (const auto& w : *vocab) {
      if (attribute.id == w.id) return w;
    }
  }
  throw ConfigError("attribute '" + attribute.id + "' is not from a synthetic vocabulary");
}

std::string user_request(const AttributeWords& w, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 3);
  const int a = pick(rng);
  int b = pick(rng);
  if (b == a) b = (a + 1) % 4;
  return std::string("i need the ") + w.words[static_cast<std::size_t>(a)] + " " + w.words[static_cast<std::size_t>(b)];
}

}  // namespace

TaskSchema make_schema(const std::string& vocabulary, std::size_t num_attributes) {
  const auto& vocab = vocabulary_for(vocabulary);
  if (num_attributes < 2 || num_attributes > vocab.size()) {
    throw ConfigError("synthetic schema needs 2.." + std::to_string(vocab.size()) + " attributes");
  }
  TaskSchema schema;
  schema.name = vocabulary;
  for (std::size_t i = 0; i < num_attributes; ++i) {
    const auto& w = vocab[i];
    std::string desc = w.words[0];
    for (std::size_t k = 1; k < w.words.size(); ++k) desc += std::string(" ") + w.words[k];
    schema.attributes.push_back({w.id, desc});
  }
  return schema;
}

std::vector<Dialogue> generate(const TaskSchema& schema, std::size_t critical, const DialogueShape& shape,
                               std::size_t count, bool labeled, const std::string& prefix, std::uint64_t seed) {
  const std::size_t m = schema.size();
  if (critical >= m) throw ConfigError("critical attribute index out of range");
  if (shape.min_turns < 2 || shape.max_turns < shape.min_turns || static_cast<std::size_t>(shape.max_turns) > m) {
    throw ConfigError("synthetic dialogues need 2 <= min_turns <= max_turns <= number of attributes");
  }
  if (shape.lead_attribute >= 0 &&
      (static_cast<std::size_t>(shape.lead_attribute) >= m || static_cast<std::size_t>(shape.lead_attribute) == critical)) {
    throw ConfigError("lead attribute must be a distractor");
  }

  std::mt19937_64 rng(seed);
  std::vector<Dialogue> out;
  out.reserve(count);
  std::vector<std::size_t> distractors;
  for (std::size_t i = 0; i < m; ++i) {
    if (i != critical && static_cast<int>(i) != shape.lead_attribute) distractors.push_back(i);
  }

  for (std::size_t k = 0; k < count; ++k) {
    const int outcome = static_cast<int>(k % 3);
    std::uniform_int_distribution<int> turns_dist(shape.min_turns, shape.max_turns);
    const int n = turns_dist(rng);

    std::vector<std::size_t> order;
    std::shuffle(distractors.begin(), distractors.end(), rng);
    const bool has_lead = shape.lead_attribute >= 0;
    const int n_distractors = n - 1 - (has_lead ? 1 : 0);
    order.assign(distractors.begin(), distractors.begin() + std::max(0, n_distractors));
    std::size_t lo = has_lead ? 1 : 0;
    std::size_t pos = lo;
    switch (shape.placement) {
      case Placement::kFirst: pos = lo; break;
      case Placement::kLast: pos = order.size() + lo; break;
      case Placement::kRandom: {
        std::uniform_int_distribution<std::size_t> d(lo, order.size() + lo);
        pos = d(rng);
        break;
      }
    }
    if (has_lead) order.insert(order.begin(), static_cast<std::size_t>(shape.lead_attribute));
    order.insert(order.begin() + static_cast<std::ptrdiff_t>(pos), critical);

    Dialogue d;
    d.id = prefix + std::to_string(k);
    std::uniform_int_distribution<int> outcome_dist(0, 2);
    for (std::size_t j = 0; j < order.size(); ++j) {
      const auto& attr = schema.attributes[order[j]];
      DialogueTurn turn;
      turn.index = static_cast<int>(j + 1);
      turn.user_utterance = user_request(words_for(attr), rng);
      if (order[j] == critical) {
        turn.system_utterance = kOutcomePhrases[static_cast<std::size_t>(outcome)];
      } else if (shape.distractor_outcomes) {
        turn.system_utterance = kOutcomePhrases[static_cast<std::size_t>(outcome_dist(rng))];
      } else {
        turn.system_utterance = "okay noted";
      }
      turn.attribute_refs = {attr.id};
      d.turns.push_back(std::move(turn));
    }
    if (labeled) {
      d.rating = kRatingFor[static_cast<std::size_t>(outcome)];
      d.label = static_cast<SatisfactionLabel>(outcome);
    }
    out.push_back(std::move(d));
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

Corpus rule_corpus(std::uint64_t seed, std::size_t train) {
  Corpus c;
  c.schema = make_schema("hotel", 5);
  DialogueShape shape;
  shape.placement = Placement::kRandom;
  shape.distractor_outcomes = false;
  c.labeled.train = generate(c.schema, 0, shape, train, true, "train-", seed);
  c.labeled.valid = generate(c.schema, 0, shape, 30, true, "valid-", seed + 1);
  c.labeled.test = generate(c.schema, 0, shape, 30, true, "test-", seed + 2);
  return c;
}

Corpus importance_corpus(std::uint64_t seed) {
  Corpus c;
  c.schema = make_schema("hotel", 8);
  DialogueShape shape;
  shape.placement = Placement::kFirst;
  shape.distractor_outcomes = true;
  shape.min_turns = 4;
  shape.max_turns = 8;
  c.labeled.train = generate(c.schema, 0, shape, 30, true, "train-", seed);
  c.labeled.valid = generate(c.schema, 0, shape, 60, true, "valid-", seed + 1);
  c.labeled.test = generate(c.schema, 0, shape, 60, true, "test-", seed + 2);
  return c;
}

TransferPair transfer_pair(std::uint64_t seed) {
  TransferPair p;
  DialogueShape shape;
  shape.placement = Placement::kFirst;
  shape.distractor_outcomes = true;
  shape.min_turns = 4;
  shape.max_turns = 8;
  p.source.schema = make_schema("hotel", 8);
  p.source.labeled.train = generate(p.source.schema, 0, shape, 60, true, "src-train-", seed);
  p.source.labeled.valid = generate(p.source.schema, 0, shape, 60, true, "src-valid-", seed + 1);
  p.source.labeled.test = generate(p.source.schema, 0, shape, 60, true, "src-test-", seed + 2);
  p.target.schema = make_schema("restaurant", 8);
  p.target.labeled.test = generate(p.target.schema, 0, shape, 90, true, "tgt-test-", seed + 3);
  return p;
}

Corpus semi_supervised_corpus(std::uint64_t seed) {
  Corpus c;
  c.schema = make_schema("hotel", 8);
  DialogueShape labeled_shape;
  labeled_shape.placement = Placement::kRandom;
  labeled_shape.lead_attribute = 1;
  labeled_shape.min_turns = 4;
  labeled_shape.max_turns = 8;
  DialogueShape pool_shape = labeled_shape;
  pool_shape.placement = Placement::kFirst;
  pool_shape.lead_attribute = -1;
  c.labeled.train = generate(c.schema, 0, labeled_shape, 30, true, "train-", seed);
  c.labeled.valid = generate(c.schema, 0, pool_shape, 60, true, "valid-", seed + 1);
  c.labeled.test = generate(c.schema, 0, pool_shape, 60, true, "test-", seed + 2);
  c.unlabeled = generate(c.schema, 0, pool_shape, 400, false, "pool-", seed + 3);
  return c;
}

void write_corpus(const Corpus& corpus, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  save_schema(corpus.schema, base / "schema.json");
  save_dialogues(corpus.labeled.train, base / "train.jsonl");
  save_dialogues(corpus.labeled.valid, base / "valid.jsonl");
  save_dialogues(corpus.labeled.test, base / "test.jsonl");
  if (!corpus.unlabeled.empty()) save_dialogues(corpus.unlabeled, base / "unlabeled.jsonl");
}

Task task_from_string(const std::string& name) {
  if (name == "rule") return Task::kRule;
  if (name == "importance") return Task::kImportance;
  if (name == "transfer") return Task::kTransfer;
  if (name == "semi") return Task::kSemiSupervised;
  throw ConfigError("unknown synthetic task '" + name + "' (rule|importance|transfer|semi)");
}

const char* to_string(Task task) {
  switch (task) {
    case Task::kRule: return "rule";
    case Task::kImportance: return "importance";
    case Task::kTransfer: return "transfer";
    case Task::kSemiSupervised: return "semi";
  }
  return "?";
}

RunConfig synthetic_config(Task task, std::uint64_t seed) {
  RunConfig c;
  c.encoder.backend = EncoderBackend::kMock;
  c.encoder.hidden_size = 64;
  c.encoder.max_tokens = 64;
  c.encoder.hash_seed = 0;
  c.mmr.top_k = 1;
  c.mmr.lambda = 0.5;
  c.train.learning_rate = 5e-3;
  c.train.epochs = 20;
  c.train.batch_size = 4;
  c.train.seed = seed;
  c.train.dropout = 0.1;
  c.train.use_unlabeled = task == Task::kSemiSupervised;
  // The mock encoder has nothing to fine-tune; a fixed encoder also keeps the
  // per-epoch importance estimate stable.
  c.encoder.fine_tune = task == Task::kRule;
  c.output_dir = std::string("runs/synthetic-") + to_string(task);
  return c;
}

}  // namespace sgusm::synthetic
