#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string output;
};

const fs::path& workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("scml_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run cli(const std::string& args) {
  const fs::path log = workdir() / "out.log";
  const std::string cmd = "cd '" + workdir().string() + "' && '" SCML_CLI_PATH "' " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("usage errors exit nonzero with usage text") {
  Run r = cli("");
  CHECK(r.code != 0);
  r = cli("train --test t.jsonl --seed 1");
  CHECK(r.code != 0);
  CHECK(r.output.find("--train") != std::string::npos);
  r = cli("train --train a --test b");
  CHECK(r.code != 0);
  CHECK(r.output.find("--seed") != std::string::npos);
  r = cli("gradcheck --bogus");
  CHECK(r.code != 0);
  r = cli("frobnicate");
  CHECK(r.code != 0);
  r = cli("train --train missing.jsonl --test missing.jsonl --seed 0");
  CHECK(r.code != 0);
  CHECK(r.output.find("missing.jsonl") != std::string::npos);
}

TEST_CASE("gradcheck reports every check and exits zero") {
  const Run r = cli("gradcheck");
  CHECK(r.code == 0);
  CHECK(r.output.find("total_loss[visual_proj]") != std::string::npos);
  CHECK(r.output.find("ms_loss") != std::string::npos);
  CHECK(r.output.find("all passed") != std::string::npos);
}

TEST_CASE("gen-data, train, eval and ablate end to end") {
  REQUIRE(cli("gen-data --train-size 96 --test-size 48 --seed 4 --out-dir data").code == 0);
  CHECK(fs::exists(workdir() / "data/train.jsonl"));
  CHECK(fs::exists(workdir() / "data/test.jsonl"));
  write(workdir() / "cfg.json", R"({"epochs": 1, "learning_rate": 0.01, "batch_size": 32})");

  Run r = cli("train --train data/train.jsonl --test data/test.jsonl --config cfg.json --seed 3 "
              "--out-checkpoint ck.json --out-metrics m1.json");
  REQUIRE(r.code == 0);
  CHECK(r.output.find("resolved config") != std::string::npos);
  CHECK(r.output.find("seed: 3") != std::string::npos);
  REQUIRE(cli("train --train data/train.jsonl --test data/test.jsonl --config cfg.json --seed 3 "
              "--out-checkpoint ck2.json --out-metrics m2.json")
              .code == 0);
  CHECK(slurp(workdir() / "m1.json") == slurp(workdir() / "m2.json"));
  const auto metrics = nlohmann::json::parse(slurp(workdir() / "m1.json"));
  CHECK(metrics["seed"] == 3);
  CHECK(metrics["config"]["seed"] == 3);

  r = cli("eval --checkpoint ck.json --data data/test.jsonl --out eval.json");
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(slurp(workdir() / "eval.json")) == metrics["test"]);

  write(workdir() / "bad.json", R"({"epochs": 1, "not_a_field": 2})");
  CHECK(cli("train --train data/train.jsonl --test data/test.jsonl --config bad.json --seed 0").code != 0);

  REQUIRE(cli("ablate --train data/train.jsonl --test data/test.jsonl --config cfg.json --seed 0 --seeds 2 "
              "--variants pos,pos_neg_ms_adaptive --out a1.csv")
              .code == 0);
  REQUIRE(cli("ablate --train data/train.jsonl --test data/test.jsonl --config cfg.json --seed 0 --seeds 2 "
              "--variants pos,pos_neg_ms_adaptive --out a2.csv")
              .code == 0);
  const std::string csv = slurp(workdir() / "a1.csv");
  CHECK(csv == slurp(workdir() / "a2.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4 + 2);
  CHECK(cli("ablate --train data/train.jsonl --test data/test.jsonl --seed 0 --variants nope").code != 0);

  REQUIRE(cli("ablate --train data/train.jsonl --test data/test.jsonl --config cfg.json --seed 0 --seeds 1 "
              "--variants pos_neg_ms_adaptive --gammas 0.1,1 --out sweep.csv")
              .code == 0);
  CHECK(fs::exists(workdir() / "sweep_gamma0.1.csv"));
  CHECK(fs::exists(workdir() / "sweep_gamma1.csv"));
  CHECK(slurp(workdir() / "sweep_gamma0.1.csv") != slurp(workdir() / "sweep_gamma1.csv"));
  CHECK(cli("ablate --train data/train.jsonl --test data/test.jsonl --seed 0 --gammas -1").code != 0);
  fs::remove_all(workdir());
}
