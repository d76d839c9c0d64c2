#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "scalenet/error.hpp"
#include "scalenet/graph_data.hpp"

using namespace scalenet;
namespace fs = std::filesystem;

namespace {

const fs::path kSeven = fs::path(SCALENET_FIXTURES) / "seven_node";

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("scalenet_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

DirectedGraph four_node() {
  const std::vector<std::pair<Index, Index>> e{{0, 1}, {2, 1}};
  DirectedGraph g;
  g.adjacency = SparseMatrix::from_edges(4, e);
  g.features = Matrix(4, 1, 0.0);
  g.labels = {0, 0, 0, 1};
  g.num_classes = 2;
  return g;
}

}  // namespace

TEST_CASE("seven-node fixture loads to its hand-counted contents") {
  auto data = load_dataset(DatasetPaths::in_directory(kSeven));
  const auto& g = data.graph;
  CHECK(g.num_nodes() == 7);
  CHECK(g.num_features() == 2);
  CHECK(g.num_classes == 3);
  CHECK(g.adjacency.nnz() == 9);  // the duplicate 0>1 line collapses
  CHECK(g.adjacency.contains(2, 2));  // input self-loop preserved
  CHECK(g.labels == std::vector<int>{0, 0, 0, 1, 1, 2, 2});
  CHECK(g.features(4, 1) == 2.0);
  REQUIRE(data.splits.splits.size() == 1);
  CHECK(data.splits.splits[0].train == std::vector<std::size_t>{0, 3, 5});
}

TEST_CASE("seven-node stats") {
  auto data = load_dataset(DatasetPaths::in_directory(kSeven));
  auto r = compute_stats(data.graph, data.splits.splits[0]);
  CHECK(r.out_table.homophilic == 4);
  CHECK(r.out_table.heterophilic == 2);
  CHECK(r.out_table.no_neighbor == 1);
  CHECK(r.in_table.homophilic == 5);
  CHECK(r.in_table.heterophilic == 2);
  CHECK(r.in_table.no_neighbor == 0);
  CHECK(r.pct_no_in == 0.0);
  CHECK(r.pct_no_out == doctest::Approx(100.0 / 7.0));
  CHECK(r.pct_out_homo == doctest::Approx(400.0 / 7.0));
  CHECK(r.pct_in_homo == doctest::Approx(500.0 / 7.0));
  CHECK(r.imbalance_ratio == 1.0);
  auto doc = nlohmann::json::parse(stats_to_json(r));
  CHECK(doc["table_A"]["hetero"] == 2);
  CHECK(doc["table_AT"]["homo"] == 5);
}

TEST_CASE("load errors") {
  auto dir = scratch_dir("load_errors");
  for (const char* f : {"edges.tsv", "features.csv", "labels.txt", "splits.json"}) {
    fs::copy_file(kSeven / f, dir / f);
  }
  auto paths = DatasetPaths::in_directory(dir);
  CHECK_NOTHROW(load_dataset(paths));

  SUBCASE("empty feature file") {
    std::ofstream(dir / "features.csv", std::ios::trunc);
    CHECK_THROWS_AS(load_dataset(paths), DataError);
  }
  SUBCASE("split references node n") {
    std::ofstream(dir / "splits.json", std::ios::trunc)
        << R"({"splits":[{"train":[0],"val":[7],"test":[]}]})";
    CHECK_THROWS_AS(load_dataset(paths), DataError);
  }
  SUBCASE("overlapping split") {
    std::ofstream(dir / "splits.json", std::ios::trunc)
        << R"({"splits":[{"train":[0,1],"val":[1],"test":[]}]})";
    CHECK_THROWS_AS(load_dataset(paths), DataError);
  }
  SUBCASE("empty train") {
    std::ofstream(dir / "splits.json", std::ios::trunc)
        << R"({"splits":[{"train":[],"val":[1],"test":[]}]})";
    CHECK_THROWS_AS(load_dataset(paths), DataError);
  }
  SUBCASE("edge out of range") {
    std::ofstream(dir / "edges.tsv", std::ios::app) << "3\t7\n";
    CHECK_THROWS_AS(load_dataset(paths), DataError);
  }
  SUBCASE("bad feature value carries its line") {
    std::ofstream(dir / "features.csv", std::ios::trunc) << "1,0\n1,zz\n";
    try {
      load_dataset(paths);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("ragged features") {
    std::ofstream(dir / "features.csv", std::ios::trunc) << "1,0\n1\n1,0\n1,0\n1,0\n1,0\n1,0\n";
    CHECK_THROWS_AS(load_dataset(paths), DataError);
  }
  SUBCASE("negative label") {
    std::ofstream(dir / "labels.txt", std::ios::trunc) << "0\n-1\n0\n1\n1\n2\n2\n";
    CHECK_THROWS_AS(load_dataset(paths), DataError);
  }
  SUBCASE("missing file") {
    fs::remove(dir / "labels.txt");
    CHECK_THROWS_AS(load_dataset(paths), DataError);
  }
}

TEST_CASE("load -> dump -> load is a fixed point") {
  auto first = scratch_dir("dump1"), second = scratch_dir("dump2");
  auto data = load_dataset(DatasetPaths::in_directory(kSeven));
  dump_dataset(data, DatasetPaths::in_directory(first));
  auto again = load_dataset(DatasetPaths::in_directory(first));
  dump_dataset(again, DatasetPaths::in_directory(second));
  for (const char* f : {"edges.tsv", "features.csv", "labels.txt", "splits.json"}) {
    CHECK(slurp(first / f) == slurp(second / f));
  }
  CHECK(again.graph.adjacency == data.graph.adjacency);
  CHECK(again.graph.features == data.graph.features);
}

TEST_CASE("neighbour label tables") {
  SUBCASE("no edges") {
    DirectedGraph g;
    g.adjacency = SparseMatrix::empty(5, 5);
    g.features = Matrix(5, 1);
    g.labels = {0, 1, 0, 1, 0};
    g.num_classes = 2;
    auto t = neighbor_label_table(g, Direction::out);
    CHECK(t.homophilic == 0);
    CHECK(t.heterophilic == 0);
    CHECK(t.no_neighbor == 5);
    auto r = compute_stats(g, Split{{0, 1}, {}, {}});
    CHECK(r.pct_no_in == 100.0);
    CHECK(r.pct_no_out == 100.0);
  }
  SUBCASE("four-node hand graph") {
    auto g = four_node();
    auto in = neighbor_label_table(g, Direction::in);
    CHECK(in.homophilic == 1);  // node 1, in-labels {0, 0}
    CHECK(in.heterophilic == 0);
    CHECK(in.no_neighbor == 3);
    auto out = neighbor_label_table(g, Direction::out);
    CHECK(out.homophilic == 2);  // nodes 0 and 2 point at node 1 (label 0)
    CHECK(out.heterophilic == 0);
    CHECK(out.no_neighbor == 2);
    auto r = compute_stats(g, Split{{0, 3}, {1}, {2}});
    CHECK(r.pct_no_in == 75.0);
    CHECK(r.pct_in_homo == 25.0);
  }
  CHECK_THROWS(compute_stats(four_node(), Split{}));
}

TEST_CASE("imbalance ratio over training classes") {
  DirectedGraph g;
  g.adjacency = SparseMatrix::empty(6, 6);
  g.features = Matrix(6, 1);
  g.labels = {0, 0, 0, 1, 2, 2};
  g.num_classes = 3;
  auto r = compute_stats(g, Split{{0, 1, 2, 3, 4}, {}, {}});
  CHECK(r.imbalance_ratio == 3.0);
}

TEST_CASE("dSBM generator") {
  DsbmParams p;
  p.num_nodes = 120;
  p.num_classes = 4;
  p.seed = 3;
  auto a = generate_dsbm(p), b = generate_dsbm(p);
  CHECK(a.adjacency == b.adjacency);
  CHECK(a.features == b.features);
  p.seed = 4;
  CHECK_FALSE(generate_dsbm(p).adjacency == a.adjacency);

  SUBCASE("class sizes are exact") {
    std::vector<std::size_t> counts(4, 0);
    for (int y : a.labels) ++counts[static_cast<std::size_t>(y)];
    CHECK(counts == dsbm_class_sizes(120, 4));
    CHECK(dsbm_class_sizes(10, 3) == std::vector<std::size_t>{3, 3, 4});
  }
  SUBCASE("p_out = 0 keeps every edge on-pattern") {
    p.p_out = 0.0;
    p.p_in = 0.2;
    for (std::size_t offset : {0u, 1u}) {
      p.profile.class_offset = offset;
      auto g = generate_dsbm(p);
      CHECK(g.adjacency.nnz() > 0);
      for (auto t : g.adjacency.to_triplets()) {
        CHECK(static_cast<std::size_t>(g.labels[t.col]) ==
              (static_cast<std::size_t>(g.labels[t.row]) + offset) % 4);
      }
    }
  }
  SUBCASE("intra-class edge fraction matches its expectation") {
    // Expected fraction: each node has (s-1) same-class candidates at p_in
    // and (n-s) others at p_out, with s = n / C.
    DsbmParams q;
    q.num_nodes = 200;
    q.num_classes = 5;
    q.p_in = 0.08;
    q.p_out = 0.01;
    const double s = 40.0, n = 200.0;
    const double expected = (s - 1) * q.p_in / ((s - 1) * q.p_in + (n - s) * q.p_out);
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      q.seed = seed;
      auto g = generate_dsbm(q);
      std::size_t intra = 0;
      for (auto t : g.adjacency.to_triplets()) intra += g.labels[t.row] == g.labels[t.col];
      total += static_cast<double>(intra) / static_cast<double>(g.adjacency.nnz());
    }
    CHECK(std::abs(total / 10.0 - expected) <= 0.05);
  }
  SUBCASE("receiver fraction starves in-edges") {
    DsbmParams q;
    q.num_nodes = 100;
    q.num_classes = 5;
    q.profile.receiver_fraction = 0.4;
    q.p_in = 0.3;
    auto g = generate_dsbm(q);
    auto in = degrees(g.adjacency, Axis::col);
    std::size_t zero = 0;
    for (auto d : in) zero += d == 0;
    CHECK(zero >= 60);
    for (std::size_t v = 0; v < 100; ++v) CHECK_FALSE(g.adjacency.contains(v, v));
  }
  p.p_in = 1.5;
  CHECK_THROWS(generate_dsbm(p));
  DsbmParams tiny;
  tiny.num_nodes = 2;
  tiny.num_classes = 3;
  CHECK_THROWS(generate_dsbm(tiny));
}

TEST_CASE("random splits are stratified and disjoint") {
  std::vector<int> labels;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 20; ++i) labels.push_back(c);
  auto s = make_random_splits(labels, 3, 4, 0.5, 0.25, 9);
  REQUIRE(s.splits.size() == 4);
  CHECK_NOTHROW(s.validate(labels.size()));
  for (const auto& sp : s.splits) {
    CHECK(sp.train.size() == 30);
    CHECK(sp.val.size() == 15);
    CHECK(sp.test.size() == 15);
  }
  CHECK(s.splits[0].train != s.splits[1].train);
  CHECK(make_random_splits(labels, 3, 4, 0.5, 0.25, 9).splits[2].test == s.splits[2].test);
  CHECK_THROWS(make_random_splits(labels, 3, 1, 0.8, 0.3, 1));
}

TEST_CASE("imbalanced split") {
  DirectedGraph g;
  g.adjacency = SparseMatrix::empty(420, 420);
  g.features = Matrix(420, 1);
  g.num_classes = 2;
  g.labels.assign(420, 0);
  for (std::size_t v = 210; v < 420; ++v) g.labels[v] = 1;
  Split base;
  for (std::size_t v = 0; v < 200; ++v) base.train.push_back(v);
  for (std::size_t v = 210; v < 410; ++v) base.train.push_back(v);
  base.val = {200, 201, 410};
  base.test = {202, 411};
  SplitSet set{{base}};

  auto count = [&](const Split& s) {
    std::map<int, std::size_t> c;
    for (auto v : s.train) ++c[g.labels[v]];
    return c;
  };
  SUBCASE("ratio 100 on 200/200") {
    auto out = make_imbalanced_split(g, set, 100.0, 1).splits[0];
    auto c = count(out);
    const std::size_t big = std::max(c[0], c[1]), small = std::min(c[0], c[1]);
    CHECK(big == 100 * small);
    CHECK(small == 2);
    CHECK(out.val == base.val);
    CHECK(out.test == base.test);
  }
  SUBCASE("ratio 1 leaves equal counts") {
    auto c = count(make_imbalanced_split(g, set, 1.0, 1).splits[0]);
    CHECK(c[0] == c[1]);
  }
  SUBCASE("deterministic under seed") {
    CHECK(make_imbalanced_split(g, set, 10.0, 5).splits[0].train ==
          make_imbalanced_split(g, set, 10.0, 5).splits[0].train);
  }
  CHECK_THROWS(make_imbalanced_split(g, set, 201.0, 1));
  CHECK_THROWS(make_imbalanced_split(g, set, 0.5, 1));
}
