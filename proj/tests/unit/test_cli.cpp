#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "scalenet/sparse.hpp"

using namespace scalenet;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures(SCALENET_FIXTURES);

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "scalenet");
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("scalenet_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(invoke({}).code == cli::kUsageError);
  auto r = invoke({"stats", "--no-such-flag"});
  CHECK(r.code == cli::kUsageError);
  CHECK(r.out.empty());
  CHECK(r.err.find("--no-such-flag") != std::string::npos);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(invoke({"frobnicate"}).code == cli::kUsageError);
  CHECK(invoke({"train", "--data", (kFixtures / "seven_node").string(), "--alpha", "7"}).code ==
        cli::kUsageError);
  CHECK(invoke({"--help"}).code == cli::kOk);
}

TEST_CASE("data errors exit with 2") {
  auto r = invoke({"stats", "--data", (kFixtures / "missing").string()});
  CHECK(r.code == cli::kDataError);
  CHECK(r.out.empty());
}

TEST_CASE("synth is deterministic") {
  auto a = scratch("synth_a"), b = scratch("synth_b");
  for (const auto& dir : {a, b}) {
    auto r = invoke({"synth", "--seed", "7", "--nodes", "60", "--classes", "3", "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["nodes"] == 60);
  }
  for (const char* f : {"edges.tsv", "features.csv", "labels.txt", "splits.json"}) {
    CHECK(slurp(a / f).size() > 0);
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(fs::exists(a / "manifest.json"));
  CHECK(invoke({"synth", "--seed", "7"}).code == cli::kUsageError);
}

TEST_CASE("stats on the seven-node fixture") {
  auto r = invoke({"stats", "--data", (kFixtures / "seven_node").string()});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["num_nodes"] == 7);
  CHECK(j["num_edges"] == 9);
  CHECK(j["num_features"] == 2);
  CHECK(j["num_classes"] == 3);
  CHECK(j["imbalance_ratio"] == 1.0);
  CHECK(j["table_A"]["homo"] == 4);
  CHECK(j["table_A"]["hetero"] == 2);
  CHECK(j["table_A"]["no_neighbor"] == 1);
  CHECK(j["table_AT"]["homo"] == 5);
  CHECK(j["table_AT"]["hetero"] == 2);
  CHECK(j["table_AT"]["no_neighbor"] == 0);
  CHECK(j["pct_no_in"].get<double>() == 0.0);
  CHECK(j["pct_no_out"].get<double>() == doctest::Approx(100.0 / 7));
  CHECK(j["pct_in_homo"].get<double>() == doctest::Approx(500.0 / 7));
  CHECK(j["pct_out_homo"].get<double>() == doctest::Approx(400.0 / 7));
}

TEST_CASE("scale --word AT dumps M2 of the worked example") {
  auto r = invoke({"scale", "--edges", (kFixtures / "worked_example" / "edges.tsv").string(), "--word", "AT"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  auto m = read_matrix_market(in);
  const std::vector<std::pair<Index, Index>> expected{{0, 0}, {0, 2}, {2, 0}, {2, 2}, {3, 3},
                                                      {3, 4}, {4, 3}, {4, 4}, {5, 5}};
  CHECK(m.pattern() == SparseMatrix::from_edges(6, expected));

  auto removed = invoke({"scale", "--edges", (kFixtures / "worked_example" / "edges.tsv").string(),
                      "--word", "AT", "--selfloops", "remove"});
  std::istringstream in2(removed.out);
  CHECK(read_matrix_market(in2).nnz() == 4);

  auto dir = scratch("scale_out");
  fs::create_directories(dir);
  auto to_file = invoke({"scale", "--edges", (kFixtures / "worked_example" / "edges.tsv").string(),
                      "--word", "AT", "--out", (dir / "m2.mtx").string()});
  CHECK(to_file.code == 0);
  CHECK(to_file.out.empty());
  CHECK(slurp(dir / "m2.mtx") == r.out);
}

TEST_CASE("config file precedence and manifest replay") {
  auto dir = scratch("replay");
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "config.json");
    cfg << R"({"model": {"hidden": 6, "layers": 1, "alpha": 1.0}, "hyper": {"max_epochs": 30}, "seed": 3})";
  }
  const auto data = (kFixtures / "seven_node").string();
  auto r = invoke({"train", "--data", data, "--config", (dir / "config.json").string(), "--alpha", "0",
                "--out-dir", (dir / "first").string()});
  REQUIRE(r.code == 0);
  auto manifest = nlohmann::json::parse(slurp(dir / "first" / "manifest.json"));
  CHECK(manifest["command"] == "train");
  CHECK(manifest["config"]["hidden"] == 6);
  CHECK(manifest["config"]["alpha"] == 0.0);  // flag beats file
  CHECK(manifest["config"]["dropout"] == 0.5);  // default survives
  CHECK(manifest["hyper"]["max_epochs"] == 30);
  CHECK(manifest["seed"] == 3);
  CHECK(manifest["version"] == cli::kToolVersion);

  auto again = invoke({"replay", (dir / "first" / "manifest.json").string(), "--out-dir", (dir / "second").string()});
  REQUIRE(again.code == 0);
  CHECK(again.out == r.out);
  CHECK(slurp(dir / "first" / "result.json") == slurp(dir / "second" / "result.json"));

  {
    std::ofstream bad(dir / "bad.json");
    bad << R"({"modle": {}})";
  }
  CHECK(invoke({"train", "--data", data, "--config", (dir / "bad.json").string()}).code == cli::kUsageError);
}

TEST_CASE("compare reads score files") {
  auto dir = scratch("compare");
  fs::create_directories(dir);
  {
    std::ofstream a(dir / "a.txt"), b(dir / "b.json");
    a << "0.81\n0.82\n0.83\n0.84\n0.85\n0.86\n";
    b << "[0.80, 0.80, 0.80, 0.80, 0.80, 0.80]";
  }
  auto r = invoke({"compare", "--a", (dir / "a.txt").string(), "--b", (dir / "b.json").string()});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["statistic"] == 0.0);
  CHECK(j["p_value"] == 0.03125);
  CHECK(j["method"] == "exact");
  CHECK(invoke({"compare", "--a", (dir / "a.txt").string(), "--b", (dir / "a.txt").string()}).code ==
        cli::kDataError);
}
