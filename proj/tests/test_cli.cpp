#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::current_path() / "cli_work";

int run(const std::string& args) {
  const std::string cmd = std::string(MIMOGPR_CLI_PATH) + " " + args + " >" + (kWork / "stdout.txt").string() +
                          " 2>" + (kWork / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    if (!line.empty() && line.back() == ',') row.emplace_back();
    rows.push_back(row);
  }
  return rows;
}

std::string path(const std::string& name) { return (kWork / name).string(); }

struct Workdir {
  Workdir() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
};

const Workdir workdir;

// Fast model settings shared by the fit/evaluate cases.
const std::string kFast = " --restarts 2 --max-iters 60 --mlp-restarts 2 --max-epochs 40";

}  // namespace

TEST_CASE("synth") {
  REQUIRE(run("synth --series 4 --months 183 --rho 0.7 --seed 42 --out " + path("a.csv")) == 0);
  const auto rows = read_csv(kWork / "a.csv");
  REQUIRE(rows.size() == 184);
  CHECK(rows[0] == std::vector<std::string>{"date", "S1", "S2", "S3", "S4"});
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].size() == 5);
  CHECK(fs::exists(kWork / "a.csv.manifest.json"));

  REQUIRE(run("synth --series 4 --months 183 --rho 0.7 --seed 42 --out " + path("b.csv")) == 0);
  CHECK(slurp(kWork / "a.csv") == slurp(kWork / "b.csv"));

  CHECK(run("synth --rho 1.0 --out " + path("c.csv")) == 2);
  CHECK_FALSE(fs::exists(kWork / "c.csv"));
  CHECK(run("synth --months 12 --out " + path("c.csv")) == 2);
}

TEST_CASE("describe") {
  REQUIRE(run("synth --series 3 --months 180 --noise-std 0 --trend 0 --level 250 --out " + path("clean.csv")) == 0);
  REQUIRE(run("describe --data " + path("clean.csv") + " --out-dir " + path("desc")) == 0);
  const auto rows = read_csv(kWork / "desc" / "describe.csv");
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == std::vector<std::string>{"series", "Minimum", "Maximum", "Mean", "Standard deviation", "Skewness",
                                            "Kurtosis"});
  for (int s = 1; s <= 3; ++s) CHECK(std::abs(std::stod(rows[s][3]) - 250.0) <= 1e-9);
  CHECK(rows[4][0] == "Total");
  CHECK(std::abs(std::stod(rows[4][3]) - 750.0) <= 1e-9);
  CHECK(fs::exists(kWork / "desc" / "describe.md"));
  CHECK(fs::exists(kWork / "desc" / "manifest.json"));

  CHECK(run("describe --data " + path("clean.csv") + " --from 2005-01 --to 2004-12") == 1);
  CHECK(run("describe --data " + path("clean.csv") + " --from 1990-01") == 1);
  CHECK(run("describe --data " + path("missing.csv")) == 1);
}

TEST_CASE("fit") {
  REQUIRE(run("synth --out " + path("panel.csv")) == 0);
  REQUIRE(run("fit --data " + path("panel.csv") + " --train-len 96 --valid-len 60 --model " + path("model.json") +
              kFast) == 0);
  const auto manifest = nlohmann::json::parse(slurp(kWork / "model.json.manifest.json"));
  CHECK(manifest["split"]["test"]["months"] == 27);
  CHECK(manifest["command"] == "fit");
  const auto doc = nlohmann::json::parse(slurp(kWork / "model.json"));
  CHECK(doc["format_version"] == 1);
  CHECK(doc["gpr"].size() == 4);

  CHECK(run("fit --data " + path("panel.csv") + " --lags 200 --model " + path("bad.json")) == 1);
  CHECK_FALSE(fs::exists(kWork / "bad.json"));
}

TEST_CASE("evaluate") {
  REQUIRE(run("synth --out " + path("panel.csv")) == 0);
  const std::string base = "evaluate --data " + path("panel.csv") + " --horizons 1,2 --eval-window 2012-01:2013-01" +
                           kFast;

  SUBCASE("report shape and lattice") {
    REQUIRE(run(base + " --out-dir " + path("ev")) == 0);
    const auto records = read_csv(kWork / "ev" / "records.csv");
    CHECK(records[0] == std::vector<std::string>{"model", "series", "origin", "h", "forecast", "actual"});
    CHECK(records.size() == 1 + 13 * 2 * 4 * 2);
    const auto plae = read_csv(kWork / "ev" / "plae.csv");
    REQUIRE(plae.size() == 5);
    for (std::size_t i = 1; i < plae.size(); ++i) {
      for (std::size_t j = 1; j < plae[i].size(); ++j) {
        const double k = std::stod(plae[i][j]) * 13.0 / 100.0;
        CHECK(std::abs(k - std::round(k)) <= 0.05 * 13.0 / 100.0);
      }
    }
    CHECK(fs::exists(kWork / "ev" / "accuracy.md"));
    const auto manifest = nlohmann::json::parse(slurp(kWork / "ev" / "manifest.json"));
    CHECK(manifest["origins"]["count"] == 13);
  }
  SUBCASE("rerun from the manifest is byte-identical") {
    REQUIRE(run(base + " --out-dir " + path("r1")) == 0);
    REQUIRE(run("evaluate --config " + path("r1/manifest.json") + " --out-dir " + path("r2")) == 0);
    for (const char* f : {"records.csv", "accuracy.csv", "accuracy.md", "plae.csv", "plae.md"}) {
      CHECK(slurp(kWork / "r1" / f) == slurp(kWork / "r2" / f));
    }
  }
  SUBCASE("self comparison") {
    REQUIRE(run(base + " --candidate mimo-gpr --benchmark mimo-gpr --out-dir " + path("self")) == 0);
    const auto acc = read_csv(kWork / "self" / "accuracy.csv");
    for (const auto& row : acc) {
      if (row.size() > 1 && row[1] == "rMAPE") {
        for (std::size_t j = 2; j < row.size(); ++j) CHECK(row[j] == "1.000");
      }
    }
    const auto plae = read_csv(kWork / "self" / "plae.csv");
    for (std::size_t i = 1; i < plae.size(); ++i) {
      for (std::size_t j = 1; j < plae[i].size(); ++j) CHECK(plae[i][j] == "0.0");
    }
  }
  SUBCASE("config file with flag override") {
    std::ofstream(kWork / "cfg.json") << R"({"data": ")" << path("panel.csv")
                                      << R"(", "horizons": [1], "lags": 6, "restarts": 1, "mlp-restarts": 1,
                                            "max-epochs": 20, "eval-window": "2012-01:2012-06"})";
    REQUIRE(run("evaluate --config " + path("cfg.json") + " --lags 4 --out-dir " + path("cfg")) == 0);
    const auto manifest = nlohmann::json::parse(slurp(kWork / "cfg" / "manifest.json"));
    CHECK(manifest["config"]["lags"] == 4);
    CHECK(manifest["config"]["restarts"] == 1);
    CHECK(manifest["origins"]["count"] == 6);
  }
  SUBCASE("fitted model document") {
    REQUIRE(run("fit --data " + path("panel.csv") + " --model " + path("m.json") + kFast) == 0);
    REQUIRE(run(base + " --benchmark independent-gpr --fitted " + path("m.json") + " --out-dir " + path("fitted")) ==
            0);
    CHECK(run(base + " --fitted " + path("m.json") + " --out-dir " + path("nomlp")) == 1);
    CHECK_FALSE(fs::exists(kWork / "nomlp"));
  }
  SUBCASE("errors") {
    CHECK(run(base + " --candidate arima --out-dir " + path("e1")) == 2);
    CHECK(run(base + " --eval-window 2005-01:2005-06 --out-dir " + path("e2")) == 1);
    CHECK_FALSE(fs::exists(kWork / "e2"));
    CHECK(run("evaluate --data " + path("panel.csv")) != 0);
  }
}

TEST_CASE("thread cap") {
  REQUIRE(run("synth --out " + path("panel.csv")) == 0);
  CHECK(system(("MIMOGPR_THREADS=abc " + std::string(MIMOGPR_CLI_PATH) + " synth --out " + path("t.csv") +
                " 2>/dev/null")
                   .c_str()) != 0);
  REQUIRE(run("describe --data " + path("panel.csv") + " --out-dir " + path("t1")) == 0);
  const int status = std::system(("MIMOGPR_THREADS=1 " + std::string(MIMOGPR_CLI_PATH) + " describe --data " +
                                  path("panel.csv") + " --out-dir " + path("t2"))
                                     .c_str());
  CHECK(status == 0);
  CHECK(slurp(kWork / "t1" / "describe.csv") == slurp(kWork / "t2" / "describe.csv"));
}

TEST_CASE("help lists every flag") {
  for (const char* sub : {"synth", "describe", "fit", "evaluate"}) {
    REQUIRE(run(std::string(sub) + " --help") == 0);
    const std::string help = slurp(kWork / "stdout.txt");
    if (std::string(sub) != "describe") CHECK(help.find("--seed") != std::string::npos);
    CHECK(help.find("--config") != std::string::npos);
  }
}
