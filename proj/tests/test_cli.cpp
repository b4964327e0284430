#include <array>
#include <cstdio>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

#ifndef SGUSM_CLI_PATH
#error "SGUSM_CLI_PATH must point at the sgusm executable"
#endif

namespace {

struct Result {
  int code = -1;
  std::string output;  // stdout and stderr
};

// Runs `sgusm <args>` through the shell; `env` is prepended verbatim.
Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" + std::string(SGUSM_CLI_PATH) + "' " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) r.output += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

json read_json(const fs::path& p) { return json::parse(testutil::read_file(p)); }

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("cli: usage errors exit 1") {
  CHECK(run("").code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("train").code == 1);
  CHECK(run("train -c /nonexistent/config.json").code == 1);
  CHECK(run("--help").code == 0);
}

TEST_CASE("cli: synth, train, evaluate") {
  testutil::TempDir dir("cli");
  REQUIRE(run("synth --task rule --seed 3 --out " + q(dir.path())).code == 0);
  const auto cfg = q(dir / "config.json");
  const auto ck = dir / "ck";
  const auto t = run("train -c " + cfg + " -o " + q(ck) + " --epochs 3");
  INFO(t.output);
  REQUIRE(t.code == 0);
  for (const char* f : {"config.json", "metrics.json", "schema.json", "manifest.json", "weights.bin"}) {
    CHECK(fs::exists(ck / f));
  }
  const json metrics = read_json(ck / "metrics.json");
  CHECK(metrics.at("format_version") == 1);
  CHECK(metrics.at("config").at("train").at("epochs") == 3);
  CHECK(read_json(ck / "manifest.json").contains("config"));

  const auto e = run("evaluate --checkpoint " + q(ck) + " --split " + q(dir / "valid.jsonl") + " -o " +
                     q(dir / "eval.json") + " --csv " + q(dir / "eval.csv"));
  INFO(e.output);
  REQUIRE(e.code == 0);
  const json report = read_json(dir / "eval.json");
  CHECK(report.at("format_version") == 1);
  CHECK(report.at("kind") == "evaluation");
  CHECK(report.at("mode") == "evaluate");
  CHECK(report.at("config") == metrics.at("config"));
  CHECK(report.at("metrics").at("macro_f1").get<double>() ==
        doctest::Approx(metrics.at("valid").at("macro_f1").get<double>()).epsilon(1e-12));
  CHECK(testutil::read_file(dir / "eval.csv").rfind("tag,n,accuracy", 0) == 0);

  SUBCASE("malformed split is a runtime failure naming the line") {
    testutil::write_file(dir / "bad.jsonl", testutil::read_file(dir / "valid.jsonl") + "{oops\n");
    const auto b = run("evaluate --checkpoint " + q(ck) + " --split " + q(dir / "bad.jsonl"));
    CHECK(b.code == 2);
    CHECK(b.output.find("bad.jsonl:31") != std::string::npos);
  }
  SUBCASE("infer writes one record per dialogue") {
    REQUIRE(run("infer --checkpoint " + q(ck) + " --split " + q(dir / "test.jsonl") + " -o " + q(dir / "inf.json")).code == 0);
    const json inf = read_json(dir / "inf.json");
    CHECK(inf.at("kind") == "inference");
    CHECK(inf.at("records").size() == 30);
  }
}

TEST_CASE("cli: a missing schema file is reported by path") {
  testutil::TempDir dir("cli-schema");
  REQUIRE(run("synth --task rule --out " + q(dir.path())).code == 0);
  fs::remove(dir / "schema.json");
  const auto r = run("train -c " + q(dir / "config.json") + " --epochs 1");
  CHECK(r.code == 1);
  CHECK(r.output.find((dir / "schema.json").string()) != std::string::npos);
}

TEST_CASE("cli: variants and seeds reach the stored config") {
  testutil::TempDir dir("cli-var");
  REQUIRE(run("synth --task rule --out " + q(dir.path())).code == 0);
  const auto cfg = q(dir / "config.json");
  REQUIRE(run("train -c " + cfg + " --epochs 1 --variant w/oFul -o " + q(dir / "a")).code == 0);
  CHECK(read_json(dir / "a" / "config.json").at("train").at("variant") == "w/oFul");
  CHECK(run("ablate -c " + cfg + " --epochs 1").code == 1);
  CHECK(run("ablate -c " + cfg + " --epochs 1 --variant bogus").code == 1);
  REQUIRE(run("ablate -c " + cfg + " --epochs 1 --variant w/oImp -o " + q(dir / "b")).code == 0);
  CHECK(read_json(dir / "b" / "config.json").at("train").at("variant") == "w/oImp");

  REQUIRE(run("train -c " + cfg + " --epochs 1 -o " + q(dir / "s7"), "SGUSM_SEED=7").code == 0);
  CHECK(read_json(dir / "s7" / "config.json").at("train").at("seed") == 7);
  REQUIRE(run("train -c " + cfg + " --epochs 1 --seed 9 -o " + q(dir / "s9"), "SGUSM_SEED=7").code == 0);
  CHECK(read_json(dir / "s9" / "config.json").at("train").at("seed") == 9);
  CHECK(run("train -c " + cfg + " --epochs 1", "SGUSM_SEED=abc").code == 1);
}

TEST_CASE("cli: importance output is byte-identical across runs") {
  testutil::TempDir dir("cli-imp");
  REQUIRE(run("synth --task importance --seed 5 --out " + q(dir.path())).code == 0);
  const auto cfg = q(dir / "config.json");
  REQUIRE(run("importance -c " + cfg + " -o " + q(dir / "a.json")).code == 0);
  REQUIRE(run("importance -c " + cfg + " -o " + q(dir / "b.json")).code == 0);
  CHECK(testutil::read_file(dir / "a.json") == testutil::read_file(dir / "b.json"));
  const json a = read_json(dir / "a.json");
  CHECK(a.at("kind") == "importance");
  REQUIRE(a.at("importance").size() == 8);
  CHECK(a.at("importance")[0].at("rank") == 1);
  CHECK(a.at("importance")[0].at("score").get<double>() >= a.at("importance")[1].at("score").get<double>());
  CHECK(run("importance").code == 1);
  CHECK(run("importance -c " + cfg + " --checkpoint " + q(dir.path())).code == 1);
}

TEST_CASE("cli: transfer and scale") {
  testutil::TempDir dir("cli-tr");
  REQUIRE(run("synth --task transfer --seed 2 --out " + q(dir.path())).code == 0);
  REQUIRE(run("train -c " + q(dir / "config.json") + " --epochs 1 -o " + q(dir / "ck")).code == 0);
  const auto t = run("transfer --checkpoint " + q(dir / "ck") + " --split " + q(dir / "target" / "test.jsonl") +
                     " --schema " + q(dir / "target" / "schema.json") + " -o " + q(dir / "tr.json"));
  INFO(t.output);
  REQUIRE(t.code == 0);
  const json tr = read_json(dir / "tr.json");
  CHECK(tr.at("mode") == "transfer");
  CHECK(tr.at("metrics").at("n_examples") == 90);
  CHECK(run("transfer --checkpoint " + q(dir / "ck") + " --split " + q(dir / "target" / "test.jsonl")).code == 1);
  CHECK(run("evaluate --transfer --checkpoint " + q(dir / "ck") + " --split " + q(dir / "target" / "test.jsonl")).code == 1);

  testutil::TempDir semi("cli-semi");
  REQUIRE(run("synth --task semi --seed 4 --out " + q(semi.path())).code == 0);
  const auto s = run("scale -c " + q(semi / "config.json") + " --pool-sizes 0,20 --seeds 1 --epochs 1 -o " +
                     q(semi / "scale.json"));
  INFO(s.output);
  REQUIRE(s.code == 0);
  const json sc = read_json(semi / "scale.json");
  CHECK(sc.at("kind") == "unlabeled_scaling");
  CHECK(sc.at("points").size() == 2);
  CHECK(run("scale -c " + q(semi / "config.json") + " --pool-sizes 100000 --seeds 1 --epochs 1").code == 1);
}
