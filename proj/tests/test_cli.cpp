/*
 * Copyright 2026 The adlis Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#include "cli.hpp"

#include "adlis/model.hpp"

#include "doctest.h"
#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = adlis::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("adlis_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int col(const std::string& name) const {
    return static_cast<int>(std::find(header.begin(), header.end(), name) - header.begin());
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

Csv read_csv(const fs::path& p) {
  std::ifstream f(p);
  Csv csv;
  std::string line;
  std::getline(f, line);
  csv.header = split(line);
  while (std::getline(f, line)) csv.rows.push_back(split(line));
  return csv;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream f(p);
  return nlohmann::json::parse(f);
}

}  // namespace

TEST_CASE("sample on the gaussian model") {
  const fs::path dir = scratch("gauss");
  const Result r = run({"sample", "--model", "gaussian", "--method", "adla", "--draws", "1000", "--warmup", "1000",
                        "--seed", "7", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const Csv csv = read_csv(dir / "draws.csv");
  CHECK(csv.header == std::vector<std::string>{"draw", "chain", "log_rho", "log_alpha", "log_density", "divergent",
                                               "wall_time_s"});
  CHECK(csv.rows.size() == 1000);
  int divergent = 0;
  for (const auto& row : csv.rows) divergent += std::stoi(row[csv.col("divergent")]);
  CHECK(divergent == 0);

  const auto m = read_json(dir / "manifest.json");
  CHECK(m["config"]["seed"] == 7);
  CHECK(m["config"]["model"] == "gaussian");
  CHECK(m["chain_seeds"][0] == 7);
  CHECK(m["totals"]["divergences"] == 0);
  CHECK(m["dataset"]["fnv1a64"].get<std::string>().size() == 16);
  CHECK(m["dataset"]["fnv1a64"] ==
        [&] {
          std::ostringstream os;
          os << std::hex << std::setw(16) << std::setfill('0') << adlis::cli::fnv1a(slurp(dir / "dataset.csv"));
          return os.str();
        }());
}

TEST_CASE("same seed gives byte-identical output") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  for (const auto& dir : {a, b}) {
    REQUIRE(run({"sample", "--model", "gp-poisson", "--size", "10", "--method", "pm", "--n", "2", "--draws", "200",
                 "--warmup", "200", "--chains", "2", "--seed", "3", "--no-timing", "--out", dir.string()})
                .code == 0);
  }
  CHECK(slurp(a / "draws.csv") == slurp(b / "draws.csv"));
  CHECK(slurp(a / "dataset.csv") == slurp(b / "dataset.csv"));
  const Csv csv = read_csv(a / "draws.csv");
  CHECK(csv.rows.size() == 400);
  CHECK(csv.rows[200][1] == "1");
}

TEST_CASE("gp-poisson with RQMC records the estimator and no divergences") {
  const fs::path dir = scratch("rqmc");
  REQUIRE(run({"sample", "--model", "gp-poisson", "--method", "rqmc", "--n", "16", "--draws", "2000", "--warmup",
               "2000", "--seed", "42", "--out", dir.string()})
              .code == 0);
  const auto m = read_json(dir / "manifest.json");
  CHECK(m["estimator"]["method"] == "rqmc");
  CHECK(m["estimator"]["n"] == 16);
  CHECK(m["totals"]["divergences"] == 0);
  CHECK(m["chains"][0]["density_evals"] == 2000 * 20);
}

TEST_CASE("config file with flag overrides") {
  const fs::path dir = scratch("config");
  std::ofstream(dir / "cfg.json") << R"({"model": "gp-poisson", "size": 6, "method": "qmc", "n": 4,
                                        "draws": 50, "warmup": 50, "seed": 11})";
  REQUIRE(run({"sample", "--config", (dir / "cfg.json").string(), "--draws", "30", "--out", (dir / "o").string()})
              .code == 0);
  const auto m = read_json(dir / "o" / "manifest.json");
  CHECK(m["config"]["draws"] == 30);
  CHECK(m["config"]["n"] == 4);
  CHECK(m["config"]["method"] == "qmc");
  CHECK(read_csv(dir / "o" / "draws.csv").rows.size() == 30);

  std::ofstream(dir / "bad.json") << R"({"model": "gaussian", "bogus": 1})";
  CHECK(run({"sample", "--config", (dir / "bad.json").string(), "--out", (dir / "p").string()}).code == 2);
  std::ofstream(dir / "broken.json") << "{";
  CHECK(run({"sample", "--config", (dir / "broken.json").string(), "--out", (dir / "p").string()}).code == 2);
}

TEST_CASE("invalid configurations exit with 2, runtime failures with 3") {
  const std::string out = scratch("bad").string();
  CHECK(run({"sample", "--model", "nope", "--out", out}).code == 2);
  CHECK(run({"sample", "--method", "nope", "--out", out}).code == 2);
  CHECK(run({"sample", "--draws", "0", "--out", out}).code == 2);
  CHECK(run({"sample", "--model", "gp-poisson", "--size", "7", "--out", out}).code == 2);
  CHECK(run({"sample", "--model", "simple-cauchy", "--method", "qmc", "--out", out}).code == 2);
  CHECK(run({"sample", "--target-accept", "1.5", "--out", out}).code == 2);
  CHECK(run({"sample", "--unknown-flag"}).code == 2);
  CHECK(run({}).code == 2);
  const Result r = run({"oracle", "--model", "simple-cauchy", "--theta", "0.1", "--tol", "1e-300", "--out",
                        out + "/o.csv"});
  CHECK(r.code == 3);
  CHECK(r.err.find("diagnostics") != std::string::npos);
  CHECK(run({"oracle", "--model", "gp-poisson", "--out", out + "/o.csv"}).code == 2);
}

TEST_CASE("latent recovery output") {
  const fs::path dir = scratch("recover");
  for (const std::string method : {"pm", "base", "is"}) {
    REQUIRE(run({"sample", "--model", "gp-poisson", "--size", "6", "--method", method, "--n", "4", "--draws", "20",
                 "--warmup", "30", "--recover-latent", "--out", (dir / method).string()})
                .code == 0);
    const Csv csv = read_csv(dir / method / "latent.csv");
    CHECK(csv.header.size() == 2 + 6);
    CHECK(csv.rows.size() == 20);
  }
  CHECK(read_json(dir / "pm" / "manifest.json")["outputs"]["latent"]["exact"] == true);
}

TEST_CASE("oracle: gaussian closed form, normalization and tolerance stability") {
  const fs::path dir = scratch("oracle");
  REQUIRE(run({"oracle", "--model", "gaussian", "--size", "1", "--grid", "-2,2,21", "--index", "1", "--out",
               (dir / "g.csv").string()})
              .code == 0);
  const auto model = adlis::make_model("gaussian", 1, 0);
  const double y = model->dataset().rows(0, 2);
  const Csv g = read_csv(dir / "g.csv");
  for (const auto& row : g.rows) {
    const double log_alpha = std::stod(row[0]);
    const double var = std::exp(2.0 * log_alpha) + 0.25;
    const double prior = -std::log(2.0 * std::numbers::pi) - 0.5 * log_alpha * log_alpha;  // log rho = 0
    const double expected = prior - 0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * y * y / var;
    CHECK(std::fabs(std::stod(row[1]) - expected) < 1e-9);
  }

  REQUIRE(run({"oracle", "--model", "simple-cauchy", "--grid", "-3,3,601", "--out", (dir / "c1.csv").string()})
              .code == 0);
  REQUIRE(run({"oracle", "--model", "simple-cauchy", "--grid", "-3,3,601", "--tol", "5e-11", "--out",
               (dir / "c2.csv").string()})
              .code == 0);
  const Csv c1 = read_csv(dir / "c1.csv"), c2 = read_csv(dir / "c2.csv");
  REQUIRE(c1.rows.size() == 601);
  double integral = 0.0, max_change = 0.0;
  for (std::size_t i = 0; i < c1.rows.size(); ++i) {
    if (i > 0) integral += 0.5 * 0.01 * (std::stod(c1.rows[i][2]) + std::stod(c1.rows[i - 1][2]));
    max_change = std::max(max_change, std::fabs(std::stod(c1.rows[i][1]) - std::stod(c2.rows[i][1])));
  }
  CHECK(std::fabs(integral - 1.0) < 1e-6);
  CHECK(max_change < 1e-8);

  const Result point = run({"oracle", "--model", "scalar-poisson", "--theta", "0.3", "--out", (dir / "p.csv").string()});
  CHECK(point.code == 0);
  CHECK(read_csv(dir / "p.csv").header == std::vector<std::string>{"log_sigma", "log_joint"});
}

TEST_CASE("ugrid reports n jumps") {
  const fs::path dir = scratch("ugrid");
  const Result r = run({"ugrid", "--model", "simple-cauchy", "--n", "4", "--grid", "5000", "--out",
                        (dir / "u.csv").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("jumps 4\n", 0) == 0);
  const Csv u = read_csv(dir / "u.csv");
  CHECK(u.header == std::vector<std::string>{"U", "density"});
  CHECK(u.rows.size() == 5000);
}

TEST_CASE("diagnose: zero error against the chain mean, ESS table for two runs") {
  const fs::path dir = scratch("diagnose");
  for (const std::string method : {"adla", "qmc"}) {
    REQUIRE(run({"sample", "--model", "gp-poisson", "--size", "10", "--method", method, "--n", "4", "--draws",
                 "300", "--warmup", "200", "--out", (dir / method).string()})
                .code == 0);
  }
  const Csv draws = read_csv(dir / "adla" / "draws.csv");
  double mean_rho = 0.0, mean_alpha = 0.0;
  for (const auto& row : draws.rows) {
    mean_rho += std::stod(row[2]);
    mean_alpha += std::stod(row[3]);
  }
  mean_rho /= draws.rows.size();
  mean_alpha /= draws.rows.size();
  {
    std::ofstream f(dir / "truth.csv");
    f << std::setprecision(17) << "log_alpha,log_rho\n" << mean_alpha << "," << mean_rho << "\n";
  }
  const Result r = run({"diagnose", "--draws", (dir / "adla" / "draws.csv").string(), "--draws",
                        (dir / "qmc" / "draws.csv").string(), "--truth", (dir / "truth.csv").string(), "--out",
                        (dir / "d").string()});
  REQUIRE(r.code == 0);
  const Csv trace = read_csv(dir / "d" / "error_trace_0.csv");
  REQUIRE(trace.rows.size() == 300);
  CHECK(std::fabs(std::stod(trace.rows.back()[1])) < 1e-12);
  CHECK(std::fabs(std::stod(trace.rows.back()[2])) < 1e-12);
  const Csv ess = read_csv(dir / "d" / "ess.csv");
  CHECK(ess.header == std::vector<std::string>{"run", "parameter", "ess", "ess_per_min", "mean", "mcse"});
  CHECK(ess.rows.size() == 4);
  for (const auto& row : ess.rows) CHECK(std::stod(row[2]) > 0.0);
}
