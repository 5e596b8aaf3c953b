#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "freqsamp/cli.hpp"
#include "freqsamp/csv.hpp"
#include "support.hpp"

using namespace freqsamp;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "freqsamp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string last_data_line(const std::string& text) {
  const auto end = text.find_last_not_of('\n');
  const auto start = text.rfind('\n', end);
  return text.substr(start + 1, end - start);
}

}  // namespace

TEST_CASE("simulate with the shipped config settles at -0.277 Hz") {
  test::TempDir dir;
  const auto r = cli({"simulate", "--config", FREQSAMP_DEFAULT_CONFIG, "--output",
                      dir.file("traj.csv"), "--no-timestamp"});
  REQUIRE(r.code == 0);
  const auto traj = csv::read_trajectory(dir.file("traj.csv"));
  CHECK(traj.size() == 60001);
  CHECK(std::fabs(traj.states.back()(0) * 50.0 + 0.277) <= 0.005);
  CHECK_FALSE(traj.has_tangents());

  const auto t = cli({"simulate", "--theta", "1,2,3,4", "--tangents", "--horizon", "1",
                      "--dt", "0.01", "--output", dir.file("tang.csv")});
  REQUIRE(t.code == 0);
  const auto tang = csv::read_trajectory(dir.file("tang.csv"));
  CHECK(tang.size() == 101);
  CHECK(tang.has_tangents());
}

TEST_CASE("label handles header-only input") {
  test::TempDir dir;
  test::spit(dir.file("in.csv"), "K11,K12,K21,K22\n");
  const auto r = cli({"label", "--input", dir.file("in.csv"), "--output", dir.file("out.csv"),
                      "--no-timestamp"});
  CHECK(r.code == 0);
  CHECK(test::slurp(dir.file("out.csv")) == std::string(csv::kDatasetHeader) + "\n");
}

TEST_CASE("gen, label and sample chain") {
  test::TempDir dir;
  REQUIRE(cli({"gen", "--count", "4", "--seed", "9", "--output", dir.file("seeds.csv")}).code == 0);
  CHECK(csv::read_thetas(dir.file("seeds.csv")).size() == 4);
  REQUIRE(cli({"label", "--input", dir.file("seeds.csv"), "--output",
               dir.file("labels.csv"), "--horizon", "20"}).code == 0);
  const auto s = cli({"sample", "--input", dir.file("seeds.csv"), "--output",
                      dir.file("data.csv"), "--horizon", "20", "--trajectories",
                      dir.file("tr"), "--trajectory-count", "1"});
  REQUIRE(s.code == 0);
  CHECK(s.out.find("converged ") != std::string::npos);
  CHECK(csv::read_dataset(dir.file("data.csv")).records.size() == 4);
  CHECK(std::filesystem::exists(dir.file("tr/seed_0.csv")));
  CHECK(std::filesystem::exists(dir.file("tr/final_0.csv")));
}

TEST_CASE("sample flags reach the sampler") {
  test::TempDir dir;
  const auto r = cli({"sample", "--count", "2", "--seed", "5", "--alpha", "0.5",
                      "--max-iter", "0", "--batch-size", "1", "--rule", "margin:0.1",
                      "--direction", "stabilize", "--horizon", "10", "--output",
                      dir.file("d.csv"), "--no-timestamp"});
  REQUIRE(r.code == 0);
  const auto data = csv::read_dataset(dir.file("d.csv"));
  CHECK(data.metadata.config.alpha == 0.5);
  CHECK(data.metadata.config.max_iter == 0);
  CHECK(data.metadata.config.batch_size == 1);
  CHECK(data.metadata.config.rule.kind == RuleKind::kMargin);
  CHECK(data.metadata.config.rule.delta == 0.1);
  CHECK(data.metadata.config.direction_policy == DirectionPolicy::kForceStabilize);
  CHECK(data.metadata.seed == 5);
  CHECK(data.metadata.params.horizon_t == 10.0);
  for (const auto& rec : data.records) CHECK(rec.theta_final == rec.theta_initial);
}

TEST_CASE("sample output is byte-identical across runs") {
  test::TempDir dir;
  for (const char* name : {"a.csv", "b.csv"}) {
    REQUIRE(cli({"sample", "--count", "3", "--horizon", "20", "--output", dir.file(name),
                 "--no-timestamp"}).code == 0);
  }
  CHECK(test::slurp(dir.file("a.csv")) == test::slurp(dir.file("b.csv")));
  CHECK(test::slurp(dir.file("a.csv.pairs.csv")) == test::slurp(dir.file("b.csv.pairs.csv")));
}

TEST_CASE("grad compares FMAD with finite differences") {
  test::TempDir dir;
  const auto r = cli({"grad", "--theta", "10,20,30,-5", "--horizon", "20", "--scheme",
                      "central", "--epsilon", "1e-6", "--output", dir.file("g.csv"),
                      "--no-timestamp"});
  REQUIRE(r.code == 0);
  const std::string text = test::slurp(dir.file("g.csv"));
  CHECK(text.rfind("criterion,method,dK11,dK12,dK21,dK22,err_pct\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 7);
  std::stringstream lines(text);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    const double err = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(err <= 1e-2);
  }
}

TEST_CASE("bench with fmad and central differences") {
  test::TempDir dir;
  const auto r = cli({"bench", "--methods", "fmad,fd-central", "--count", "3", "--runs", "1",
                      "--horizon", "20", "--output", dir.file("b.csv"), "--no-timestamp"});
  REQUIRE(r.code == 0);
  const std::string text = test::slurp(dir.file("b.csv"));
  CHECK(text.find(std::string(csv::kBenchHeader) + "\n") != std::string::npos);
  const std::string fd = last_data_line(text);
  std::vector<std::string> f;
  std::stringstream row(fd);
  for (std::string cell; std::getline(row, cell, ',');) f.push_back(cell);
  REQUIRE(f.size() == 8);
  CHECK(f[0].rfind("fd-central", 0) == 0);
  CHECK(std::stod(f[2]) > 0.0);
  for (int i = 3; i < 8; ++i) CHECK(std::stod(f[i]) <= 1e-2);
}

TEST_CASE("errors are machine readable") {
  test::TempDir dir;
  auto parse = [](const std::string& err) { return nlohmann::json::parse(err); };

  const auto missing = cli({"label", "--input", dir.file("nope.csv"), "--output", dir.file("o.csv")});
  CHECK(missing.code == 1);
  CHECK(parse(missing.err)["error"] == "Io");

  test::spit(dir.file("bad.csv"), "K11,K12\n1,2\n");
  const auto schema = cli({"label", "--input", dir.file("bad.csv"), "--output", dir.file("o.csv")});
  CHECK(schema.code == 1);
  CHECK(parse(schema.err)["error"] == "SchemaMismatch");

  const auto infeasible = cli({"simulate", "--theta", "0,-100,0,0", "--output", dir.file("o.csv")});
  CHECK(infeasible.code == 1);
  CHECK(parse(infeasible.err)["error"] == "InfeasibleGain");

  test::spit(dir.file("cfg.json"), R"({"sampler": {"speed": 3}})");
  const auto cfg = cli({"sample", "--config", dir.file("cfg.json"), "--output", dir.file("o.csv")});
  CHECK(cfg.code == 1);
  CHECK(parse(cfg.err)["error"] == "SchemaMismatch");

  const auto usage = cli({"simulate", "--bogus"});
  CHECK(usage.code == 2);
  CHECK(parse(usage.err).contains("message"));
  CHECK(cli({}).code == 2);
  CHECK(cli({"simulate"}).code == 1);  // --output is required
  CHECK_FALSE(std::filesystem::exists(dir.file("o.csv")));
}
