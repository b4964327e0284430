// sgusm: train, evaluate and inspect satisfaction models from the command line.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sgusm/checkpoint.hpp"
#include "sgusm/config.hpp"
#include "sgusm/corpus.hpp"
#include "sgusm/encoder.hpp"
#include "sgusm/error.hpp"
#include "sgusm/evaluation.hpp"
#include "sgusm/importance.hpp"
#include "sgusm/model.hpp"
#include "sgusm/synthetic.hpp"
#include "sgusm/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sgusm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct RunOptions {
  std::string config;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::string variant;
};

std::uint64_t parse_seed(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    if (text.empty() || text.front() == '-') throw std::invalid_argument(text);
    const auto v = std::stoull(text, &used, 10);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(what + ": '" + text + "' is not a non-negative integer");
  }
}

// Config file, then SGUSM_SEED, then flags.
RunConfig resolve_config(const RunOptions& opt) {
  RunConfig cfg = load_run_config(opt.config);
  if (const char* env = std::getenv("SGUSM_SEED"); env != nullptr && *env != '\0') {
    cfg.train.seed = parse_seed(env, "SGUSM_SEED");
  }
  if (opt.seed) cfg.train.seed = *opt.seed;
  if (opt.epochs) cfg.train.epochs = *opt.epochs;
  if (!opt.variant.empty()) cfg.train.variant = variant_from_string(opt.variant);
  if (!opt.output.empty()) cfg.output_dir = opt.output;
  cfg.validate();
  return cfg;
}

void write_text(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed: " + path);
}

void write_json(const json& j, const std::string& path) { write_text(j.dump(2) + "\n", path); }

void append_csv(const MetricsReport& report, const std::string& label, const std::string& path) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot write " + path);
  if (fresh) out << metrics_csv_header() << "\n";
  out << metrics_csv_row(label, report) << "\n";
}

void add_run_options(CLI::App* cmd, RunOptions& opt) {
  cmd->add_option("-c,--config", opt.config, "run config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--output", opt.output, "output directory (overrides the config)");
  cmd->add_option("--seed", opt.seed, "random seed (overrides SGUSM_SEED and the config)");
  cmd->add_option("--epochs", opt.epochs, "number of epochs");
}

int cmd_train(const RunOptions& opt) {
  const RunConfig cfg = resolve_config(opt);
  const Corpus corpus = load_corpus(cfg.paths.to_corpus_paths());
  TrainObserver obs;
  obs.on_epoch = [](const EpochLog& log) {
    std::cerr << "epoch " << log.epoch << "  loss " << log.train_loss << "  train_acc " << log.train_accuracy
              << "  valid_f1 " << log.valid.macro_f1 << "\n";
  };
  const Checkpoint ckpt = train(corpus, cfg, &obs);
  save_checkpoint(ckpt, cfg.output_dir);
  std::cout << "checkpoint " << cfg.output_dir << "  epoch " << ckpt.epoch << "  valid_macro_f1 "
            << ckpt.valid_metrics.macro_f1 << (ckpt.diverged ? "  (diverged)" : "") << "\n";
  return ckpt.diverged ? kExitRuntime : kExitOk;
}

struct EvalOptions {
  std::string checkpoint;
  std::string split;
  std::string schema;
  std::string output;
  std::string csv;
  bool transfer = false;
};

int cmd_evaluate(const EvalOptions& opt) {
  const Checkpoint ckpt = load_checkpoint(opt.checkpoint);
  const auto split = load_dialogues(opt.split, true);
  json payload = {{"checkpoint", opt.checkpoint}, {"split", opt.split}};
  MetricsReport report;
  if (opt.transfer) {
    if (opt.schema.empty()) throw ConfigError("--transfer needs --schema");
    const TaskSchema target = load_schema(opt.schema);
    const auto index = target.index();
    for (const auto& d : split) {
      for (const auto& t : d.turns) {
        for (const auto& ref : t.attribute_refs) {
          if (!index.contains(ref)) {
            throw ValidationError("dialogue " + d.id + " references unknown attribute '" + ref + "'", opt.split);
          }
        }
      }
    }
    report = transfer_evaluate(ckpt, target, split);
    payload["mode"] = "transfer";
    payload["target_schema"] = opt.schema;
  } else {
    report = evaluate(ckpt, split);
    payload["mode"] = "evaluate";
  }
  payload["metrics"] = to_json(report);
  write_json(artifact(ckpt.config, "evaluation", payload), opt.output);
  if (!opt.csv.empty()) append_csv(report, fs::path(opt.checkpoint).filename().string(), opt.csv);
  return kExitOk;
}

struct ImportanceOptions {
  RunOptions run;
  std::string checkpoint;
  std::string output;
};

int cmd_importance(const ImportanceOptions& opt) {
  if (!opt.checkpoint.empty()) {
    const Checkpoint ckpt = load_checkpoint(opt.checkpoint);
    json payload = {{"checkpoint", opt.checkpoint}, {"importance", importance_report(ckpt.schema, ckpt.importance)}};
    write_json(artifact(ckpt.config, "importance", payload), opt.output);
    return kExitOk;
  }
  const RunConfig cfg = resolve_config(opt.run);
  const Corpus corpus = load_corpus(cfg.paths.to_corpus_paths());
  const Encoder turn_encoder(cfg.encoder);
  const Encoder attribute_encoder(cfg.encoder.share_encoders ? turn_encoder : Encoder(cfg.encoder));
  const ImportanceVector s =
      importance_scores(corpus, cfg.train.use_unlabeled, turn_encoder, attribute_encoder, cfg.mmr);
  json payload = {{"num_dialogues", s.num_dialogues}, {"importance", importance_report(corpus.schema, s)}};
  write_json(artifact(cfg, "importance", payload), opt.output);
  return kExitOk;
}

struct ScaleOptions {
  RunOptions run;
  std::vector<std::size_t> pool_sizes{0, 100, 200, 400};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string report;
};

int cmd_scale(const ScaleOptions& opt) {
  const RunConfig cfg = resolve_config(opt.run);
  const Corpus corpus = load_corpus(cfg.paths.to_corpus_paths());
  const auto points = unlabeled_scaling(corpus, cfg, opt.pool_sizes, opt.seeds);
  json arr = json::array();
  for (const auto& p : points) {
    arr.push_back(to_json(p));
    std::cerr << "pool " << p.pool_size << "  median_macro_f1 " << p.median_macro_f1 << "\n";
  }
  write_json(artifact(cfg, "unlabeled_scaling", {{"points", arr}}), opt.report);
  return kExitOk;
}

struct InferOptions {
  std::string checkpoint;
  std::string split;
  std::string schema;
  std::string output;
};

int cmd_infer(const InferOptions& opt) {
  const Checkpoint ckpt = load_checkpoint(opt.checkpoint);
  const TaskSchema schema = opt.schema.empty() ? ckpt.schema : load_schema(opt.schema);
  const auto dialogues = load_dialogues(opt.split, false);
  json arr = json::array();
  for (const auto& r : infer(ckpt, schema, dialogues)) arr.push_back(to_json(r));
  write_json(artifact(ckpt.config, "inference", {{"checkpoint", opt.checkpoint}, {"records", arr}}), opt.output);
  return kExitOk;
}

struct SynthOptions {
  std::string task = "rule";
  std::uint64_t seed = 1;
  std::string out;
};

// Writes a synthetic corpus and a run config pointing at it.
int cmd_synth(const SynthOptions& opt) {
  namespace syn = sgusm::synthetic;
  const syn::Task task = syn::task_from_string(opt.task);
  RunConfig cfg = syn::synthetic_config(task, opt.seed);
  const fs::path out(opt.out);
  Corpus corpus;
  if (task == syn::Task::kTransfer) {
    auto pair = syn::transfer_pair(opt.seed);
    corpus = std::move(pair.source);
    fs::create_directories(out / "target");
    save_schema(pair.target.schema, out / "target" / "schema.json");
    save_dialogues(pair.target.labeled.test, out / "target" / "test.jsonl");
  } else if (task == syn::Task::kRule) {
    corpus = syn::rule_corpus(opt.seed);
  } else if (task == syn::Task::kImportance) {
    corpus = syn::importance_corpus(opt.seed);
  } else {
    corpus = syn::semi_supervised_corpus(opt.seed);
  }
  syn::write_corpus(corpus, opt.out);
  cfg.paths.schema = "schema.json";
  cfg.paths.train = "train.jsonl";
  cfg.paths.valid = "valid.jsonl";
  cfg.paths.test = "test.jsonl";
  if (!corpus.unlabeled.empty()) cfg.paths.unlabeled = "unlabeled.jsonl";
  cfg.output_dir = "checkpoint";
  write_json(to_json(cfg), (out / "config.json").string());
  return kExitOk;
}

int report_error(const std::exception& e, int code) {
  std::cerr << "sgusm: error: " << e.what() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schema-guided user satisfaction modeling"};
  app.require_subcommand(1);

  RunOptions train_opt;
  auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint directory");
  add_run_options(train_cmd, train_opt);
  train_cmd->add_option("--variant", train_opt.variant, "full | w/oImp | w/oFul");

  RunOptions ablate_opt;
  auto* ablate_cmd = app.add_subcommand("ablate", "train with a model variant (same as train --variant)");
  add_run_options(ablate_cmd, ablate_opt);
  ablate_cmd->add_option("--variant", ablate_opt.variant, "w/oImp | w/oFul | full")->required();

  EvalOptions eval_opt;
  auto* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint on a labeled split");
  eval_cmd->add_option("--checkpoint", eval_opt.checkpoint, "checkpoint directory")->required();
  eval_cmd->add_option("--split", eval_opt.split, "labeled JSONL split")->required();
  eval_cmd->add_flag("--transfer", eval_opt.transfer, "zero-shot evaluation on another schema");
  eval_cmd->add_option("--schema", eval_opt.schema, "target schema for --transfer");
  eval_cmd->add_option("-o,--output", eval_opt.output, "report path (default: stdout)");
  eval_cmd->add_option("--csv", eval_opt.csv, "append a CSV row to this file");

  EvalOptions transfer_opt;
  transfer_opt.transfer = true;
  auto* transfer_cmd = app.add_subcommand("transfer", "zero-shot evaluation (same as evaluate --transfer)");
  transfer_cmd->add_option("--checkpoint", transfer_opt.checkpoint, "checkpoint directory")->required();
  transfer_cmd->add_option("--split", transfer_opt.split, "labeled JSONL split")->required();
  transfer_cmd->add_option("--schema", transfer_opt.schema, "target schema")->required();
  transfer_cmd->add_option("-o,--output", transfer_opt.output, "report path (default: stdout)");
  transfer_cmd->add_option("--csv", transfer_opt.csv, "append a CSV row to this file");

  ImportanceOptions imp_opt;
  auto* imp_cmd = app.add_subcommand("importance", "ranked attribute importance");
  imp_cmd->add_option("-c,--config", imp_opt.run.config, "run config (JSON)")->check(CLI::ExistingFile);
  imp_cmd->add_option("--checkpoint", imp_opt.checkpoint, "report a checkpoint's importance snapshot instead");
  imp_cmd->add_option("--seed", imp_opt.run.seed, "random seed");
  imp_cmd->add_option("-o,--output", imp_opt.output, "report path (default: stdout)");

  ScaleOptions scale_opt;
  auto* scale_cmd = app.add_subcommand("scale", "test F1 against unlabeled pool size");
  scale_cmd->add_option("-c,--config", scale_opt.run.config, "run config (JSON)")->required()->check(CLI::ExistingFile);
  scale_cmd->add_option("--pool-sizes", scale_opt.pool_sizes, "nested pool sizes")->delimiter(',');
  scale_cmd->add_option("--seeds", scale_opt.seeds, "seeds per pool size")->delimiter(',');
  scale_cmd->add_option("--epochs", scale_opt.run.epochs, "number of epochs");
  scale_cmd->add_option("-o,--output", scale_opt.report, "report path (default: stdout)");

  InferOptions infer_opt;
  auto* infer_cmd = app.add_subcommand("infer", "class probabilities, attention and importance per dialogue");
  infer_cmd->add_option("--checkpoint", infer_opt.checkpoint, "checkpoint directory")->required();
  infer_cmd->add_option("--split", infer_opt.split, "JSONL dialogues (labels optional)")->required();
  infer_cmd->add_option("--schema", infer_opt.schema, "schema (default: the checkpoint's)");
  infer_cmd->add_option("-o,--output", infer_opt.output, "report path (default: stdout)");

  SynthOptions synth_opt;
  auto* synth_cmd = app.add_subcommand("synth", "write a rule-generated corpus and a run config");
  synth_cmd->add_option("--task", synth_opt.task, "rule | importance | transfer | semi");
  synth_cmd->add_option("--seed", synth_opt.seed, "generator seed");
  synth_cmd->add_option("--out", synth_opt.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_opt);
    if (*ablate_cmd) return cmd_train(ablate_opt);
    if (*eval_cmd) return cmd_evaluate(eval_opt);
    if (*transfer_cmd) return cmd_evaluate(transfer_opt);
    if (*imp_cmd) {
      if (imp_opt.run.config.empty() == imp_opt.checkpoint.empty()) {
        throw ConfigError("importance needs exactly one of --config or --checkpoint");
      }
      return cmd_importance(imp_opt);
    }
    if (*scale_cmd) return cmd_scale(scale_opt);
    if (*infer_cmd) return cmd_infer(infer_opt);
    if (*synth_cmd) return cmd_synth(synth_opt);
  } catch (const ConfigError& e) {
    return report_error(e, kExitUsage);
  } catch (const std::exception& e) {
    return report_error(e, kExitRuntime);
  }
  return kExitUsage;
}
