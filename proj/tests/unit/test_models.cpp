#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scalenet/models.hpp"
#include "smooth_point.hpp"
#include "unit/oracles.hpp"

using namespace scalenet;

namespace {

DirectedGraph random_graph(std::size_t n, std::size_t d, std::size_t C, std::uint64_t seed,
                           double p = 0.25) {
  std::mt19937_64 rng(seed);
  DirectedGraph g;
  g.adjacency = SparseMatrix::from_dense(n, n, oracle::random_pattern(n, p, rng, false));
  g.features = Matrix(n, d);
  std::normal_distribution<double> normal;
  for (auto& x : g.features.storage()) x = normal(rng);
  g.num_classes = C;
  for (std::size_t v = 0; v < n; ++v) g.labels.push_back(static_cast<int>(v % C));
  return g;
}

oracle::Dense dense_normalized(const SparseMatrix& s) {
  const std::size_t n = s.n_rows();
  auto d = s.to_dense();
  std::vector<double> rs(n, 0.0), cs(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      rs[i] += d[i * n + j];
      cs[j] += d[i * n + j];
    }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (d[i * n + j] != 0) d[i * n + j] /= std::sqrt(rs[i] * cs[j]);
  return d;
}

std::vector<ModelConfig> zoo() {
  std::vector<ModelConfig> out;
  for (Family f : {Family::one_ig, Family::one_igi2, Family::one_igu2, Family::one_igu3,
                   Family::one_ym, Family::gcn, Family::mlp, Family::dirgnn_lite}) {
    ModelConfig c;
    c.family = f;
    out.push_back(c);
  }
  ModelConfig s;
  s.family = Family::scalenet;
  s.alpha = 0.5;
  s.beta = 1.0;
  s.gamma = 2.0;
  for (Comb1 c1 : {Comb1::add, Comb1::jk_max, Comb1::jk_cat}) {
    s.comb1 = c1;
    s.comb2 = c1 == Comb1::add ? Comb2::last : (c1 == Comb1::jk_max ? Comb2::jk_max : Comb2::jk_cat);
    out.push_back(s);
  }
  s.alpha = 3.0;
  s.beta = 0.0;
  s.gamma = -1.0;
  s.use_bn = true;
  s.selfloop_first = SelfLoopMode::add;
  s.selfloop_second = SelfLoopMode::remove;
  out.push_back(s);
  return out;
}

}  // namespace

TEST_CASE("direction coefficient table") {
  CHECK(aggb_coefficients(-1.0) == std::pair<double, double>{0.0, 0.0});
  CHECK(aggb_coefficients(0.0) == std::pair<double, double>{0.0, 1.0});
  CHECK(aggb_coefficients(0.5) == std::pair<double, double>{0.75, 0.75});
  CHECK(aggb_coefficients(1.0) == std::pair<double, double>{2.0, 0.0});
  for (double v : {-1.0, 0.0, 0.5, 1.0, 2.0, 3.0}) CHECK(is_valid_direction_parameter(v));
  CHECK_FALSE(is_valid_direction_parameter(0.25));
}

TEST_CASE("agg_b against dense evaluation") {
  auto g = random_graph(9, 3, 2, 5);
  const SparseMatrix m = g.adjacency, n = transpose(g.adjacency);
  auto pair = AggPair::from_patterns(m, n);
  ParameterStore store;
  Rng rng(2);
  Linear w(store, "w", 3, 4, false, rng);
  const auto x = g.features;
  const auto xw = oracle::matmul(std::vector<double>(x.data().begin(), x.data().end()),
                                 std::vector<double>(w.weight().value.data().begin(),
                                                     w.weight().value.data().end()),
                                 9, 3, 4);
  const auto mn = oracle::matmul(dense_normalized(m), xw, 9, 9, 4);
  const auto nn = oracle::matmul(dense_normalized(n), xw, 9, 9, 4);

  for (double alpha : {-1.0, 0.0, 0.5, 1.0}) {
    Tape tape;
    auto y = agg_b(tape, alpha, pair, tape.constant(x), w).value();
    const double cm = (1 + alpha) * alpha, cn = (1 + alpha) * (1 - alpha);
    for (std::size_t i = 0; i < y.size(); ++i) {
      CHECK(y.storage()[i] == doctest::Approx(cm * mn[i] + cn * nn[i]).epsilon(1e-13));
    }
    if (alpha == -1.0) CHECK(y == Matrix(9, 4, 0.0));
  }
  Tape tape;
  auto u = agg_b(tape, 2.0, pair, tape.constant(x), w).value();
  auto i = agg_b(tape, 3.0, pair, tape.constant(x), w).value();
  auto su = sym_normalize(pattern_union(m, n)), si = sym_normalize(pattern_intersection(m, n));
  CHECK(u == ops::spmm(su, ops::matmul(tape.constant(x), tape.constant(w.weight().value))).value());
  CHECK(i == ops::spmm(si, ops::matmul(tape.constant(x), tape.constant(w.weight().value))).value());
  CHECK_THROWS(agg_b(tape, 0.3, pair, tape.constant(x), w));
  CHECK_THROWS(agg_b(tape, 0.5, pair, tape.constant(Matrix(4, 3)), w));
}

TEST_CASE("model config JSON") {
  ModelConfig c;
  c.family = Family::scalenet;
  c.alpha = 1.0;
  c.beta = 2.0;
  c.gamma = -1.0;
  c.comb1 = Comb1::jk_cat;
  c.comb2 = Comb2::jk_max;
  c.selfloop_first = SelfLoopMode::remove;
  c.use_bn = true;
  c.lr = 0.005;
  auto back = ModelConfig::from_json(nlohmann::json::parse(c.canonical()));
  CHECK(back.canonical() == c.canonical());
  CHECK_THROWS(ModelConfig::from_json(nlohmann::json::parse(R"({"alpah": 1})")));
  CHECK(ModelConfig::from_json(nlohmann::json::parse(R"({"family": "1iGu2"})")).family ==
        Family::one_igu2);
  CHECK_THROWS(parse_family("magnet"));

  ModelConfig bad;
  bad.alpha = bad.beta = bad.gamma = -1.0;
  CHECK_THROWS(bad.validate());
  bad = ModelConfig{};
  bad.layers = 6;
  CHECK_THROWS(bad.validate());
  bad = ModelConfig{};
  bad.alpha = 0.7;
  CHECK_THROWS(bad.validate());
  bad = ModelConfig{};
  bad.dropout = 1.0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("every family passes the gradient check") {
  auto g = random_graph(10, 3, 3, 17, 0.3);
  std::vector<std::size_t> all(10);
  std::iota(all.begin(), all.end(), 0);
  for (auto cfg : zoo()) {
    cfg.dropout = 0.0;
    cfg.hidden = 5;
    auto model = build_model(cfg, g, 99);
    Rng rng(0);
    auto loss = [&](Tape& t) {
      return ops::softmax_cross_entropy(model->forward(t, g.features, true, rng), g.labels, all);
    };
    auto params = model->store().parameters();
    // Zero-initialized biases put ReLU exactly on its kink for rows with an
    // empty neighbourhood; check at a nearby smooth point instead.
    testing_support::jitter_to_smooth_point(loss, params, 1e-5, 5);
    auto r = finite_diff_check(loss, params, 1e-5, 16, 1);
    CHECK_MESSAGE(r.max_relative_error < 1e-4, cfg.canonical() << " worst " << r.worst_parameter);
  }
}

TEST_CASE("scalenet wiring") {
  auto g = random_graph(8, 2, 2, 3);
  ModelConfig c;
  c.family = Family::scalenet;
  c.alpha = 0.5;
  c.beta = -1.0;
  c.gamma = -1.0;
  CHECK(build_model(c, g, 1)->channels().size() == 2);
  c.alpha = c.beta = c.gamma = 1.0;
  auto all = build_model(c, g, 1)->channels();
  REQUIRE(all.size() == 6);
  auto at = transpose(g.adjacency);
  CHECK(*all[0].raw == g.adjacency);
  CHECK(*all[1].raw == at);
  CHECK(*all[2].raw == spgemm(g.adjacency, at, Semiring::pattern));
  CHECK(*all[5].raw == spgemm(at, at, Semiring::pattern));

  SUBCASE("identical block outputs under add are three times one block") {
    // A symmetric graph makes every block the same function of X when the
    // block weights are equal.
    Tape tape;
    auto pair = AggPair::from_patterns(g.adjacency, at);
    ParameterStore store;
    Rng rng(1);
    Linear w(store, "w", 2, 3, false, rng);
    Var one = agg_b(tape, 0.5, pair, tape.constant(g.features), w);
    std::vector<Var> three{one, one, one};
    auto sum = ops::add_n(three).value();
    for (std::size_t i = 0; i < sum.size(); ++i) CHECK(sum.storage()[i] == doctest::Approx(3 * one.value().data()[i]));
  }
}

TEST_CASE("forward shapes and combination laws") {
  auto g = random_graph(10, 3, 4, 8);
  ModelConfig c;
  c.family = Family::scalenet;
  c.hidden = 6;
  c.layers = 3;
  c.comb2 = Comb2::jk_cat;
  auto model = build_model(c, g, 5);
  const Parameter* classifier = nullptr;
  for (auto* p : model->store().parameters())
    if (p->name == "classifier.weight") classifier = p;
  REQUIRE(classifier != nullptr);
  CHECK(classifier->value.rows() == 18);
  Rng rng(0);
  Tape tape;
  auto logits = model->forward(tape, g.features, false, rng);
  CHECK(logits.rows() == 10);
  CHECK(logits.cols() == 4);
}

TEST_CASE("direction sensitivity") {
  auto g = random_graph(10, 3, 2, 12);
  REQUIRE_FALSE(g.adjacency == transpose(g.adjacency));
  ModelConfig c;
  c.family = Family::scalenet;
  c.dropout = 0.0;
  c.alpha = 0.0;
  auto m0 = build_model(c, g, 4);
  c.alpha = 1.0;
  auto m1 = build_model(c, g, 4);
  Rng rng(0);
  Tape tape;
  CHECK_FALSE(m0->forward(tape, g.features, false, rng).value() ==
              m1->forward(tape, g.features, false, rng).value());
}

TEST_CASE("permutation equivariance") {
  auto g = random_graph(9, 3, 3, 21);
  std::vector<std::size_t> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(6);
  std::shuffle(perm.begin(), perm.end(), rng);
  DirectedGraph h = g;
  std::vector<std::pair<Index, Index>> edges;
  for (auto t : g.adjacency.to_triplets()) edges.emplace_back(perm[t.row], perm[t.col]);
  h.adjacency = SparseMatrix::from_edges(9, edges);
  for (std::size_t v = 0; v < 9; ++v) {
    for (std::size_t c = 0; c < 3; ++c) h.features(perm[v], c) = g.features(v, c);
    h.labels[perm[v]] = g.labels[v];
  }
  for (auto cfg : zoo()) {
    auto a = build_model(cfg, g, 3), b = build_model(cfg, h, 3);
    Rng r(0);
    Tape tape;
    auto la = a->forward(tape, g.features, false, r).value();
    auto lb = b->forward(tape, h.features, false, r).value();
    for (std::size_t v = 0; v < 9; ++v)
      for (std::size_t c = 0; c < 3; ++c)
        CHECK(lb(perm[v], c) == doctest::Approx(la(v, c)).epsilon(1e-10));
  }
}

TEST_CASE("family channels") {
  auto g = random_graph(10, 2, 2, 31);
  auto family = [&](Family f) {
    ModelConfig c;
    c.family = f;
    return build_model(c, g, 1)->channels();
  };
  SUBCASE("mlp ignores the adjacency") {
    ModelConfig c;
    c.family = Family::mlp;
    auto h = g;
    h.adjacency = transpose(g.adjacency);
    Rng r(0);
    Tape tape;
    CHECK(build_model(c, g, 2)->forward(tape, g.features, false, r).value() ==
          build_model(c, h, 2)->forward(tape, h.features, false, r).value());
  }
  SUBCASE("one_ig on a symmetric graph feeds gcn's matrix without self-loops") {
    auto s = g;
    s.adjacency = pattern_union(g.adjacency, transpose(g.adjacency));
    ModelConfig c;
    c.family = Family::one_ig;
    auto ig = build_model(c, s, 1)->channels();
    c.family = Family::gcn;
    auto gcn = build_model(c, s, 1)->channels();
    CHECK(*ig[0].raw == *ig[1].raw);
    CHECK(*ig[0].raw == remove_self_loops(*gcn[0].raw));
  }
  SUBCASE("inception proximity channels") {
    CHECK(*family(Family::one_igi2)[2].raw ==
          proximity_matrix(g.adjacency, 2, Combine::intersect, true));
    CHECK(*family(Family::one_igu2)[2].raw == proximity_matrix(g.adjacency, 2, Combine::union_, true));
    auto u3 = family(Family::one_igu3);
    REQUIRE(u3.size() == 4);
    CHECK(*u3[3].raw == proximity_matrix(g.adjacency, 3, Combine::union_, true));
    CHECK(family(Family::one_ym).size() == 3);
    CHECK(family(Family::dirgnn_lite)[0].coefficient == 0.5);
  }
}

TEST_CASE("equal seeds give equal weights") {
  auto g = random_graph(6, 2, 2, 1);
  ModelConfig c;
  auto a = build_model(c, g, 77), b = build_model(c, g, 77);
  auto pa = a->store().parameters(), pb = b->store().parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);
}
