#include <doctest.h>

#include <algorithm>

#include "scalenet/scales.hpp"
#include "unit/oracles.hpp"

using namespace scalenet;

namespace {

SparseMatrix worked_example() {
  const std::vector<std::pair<Index, Index>> e{{0, 1}, {2, 1}, {3, 2}, {4, 2}, {5, 0}};
  return SparseMatrix::from_edges(6, e);
}

SparseMatrix pairs(std::size_t n, std::vector<std::pair<Index, Index>> e) {
  return SparseMatrix::from_edges(n, e);
}

std::vector<std::string> all_words(std::size_t max_len) {
  std::vector<std::string> out{""};
  std::vector<std::string> words;
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::string> next;
    for (const auto& w : out) {
      next.push_back(w + "A");
      next.push_back(w + "T");
    }
    out = next;
    words.insert(words.end(), out.begin(), out.end());
  }
  return words;
}

}  // namespace

TEST_CASE("ScaleSpec parsing") {
  auto s = ScaleSpec::parse("ATT", SelfLoopMode::remove);
  CHECK(s.scale() == 3);
  CHECK(s.word_string() == "ATT");
  CHECK(s.selfloop_mode == SelfLoopMode::remove);
  CHECK_THROWS(ScaleSpec::parse(""));
  CHECK_THROWS(ScaleSpec::parse("AX"));
  CHECK(all_words(3).size() == 14);
}

TEST_CASE("build_scaled_adjacency") {
  auto a = worked_example();
  CHECK(build_scaled_adjacency(a, ScaleSpec::parse("A")).matrix == a);
  CHECK(build_scaled_adjacency(a, ScaleSpec::parse("A", SelfLoopMode::add)).matrix ==
        add_self_loops(a));
  auto m2 = build_scaled_adjacency(a, ScaleSpec::parse("AT")).matrix;
  CHECK(m2 == pairs(6, {{0, 0}, {0, 2}, {2, 0}, {2, 2}, {3, 3}, {3, 4}, {4, 3}, {4, 4}, {5, 5}}));
  auto tt = build_scaled_adjacency(a, ScaleSpec::parse("TT")).matrix;
  const auto dense = a.to_dense();
  CHECK(tt.to_dense() == oracle::walk_oracle(dense, 6, "TT"));
  CHECK_THROWS(build_scaled_adjacency(a, ScaleSpec{}));
  CHECK_THROWS(build_scaled_adjacency(SparseMatrix::empty(2, 3), ScaleSpec::parse("A")));
}

TEST_CASE("every word up to length 3 matches path enumeration") {
  std::mt19937_64 rng(21);
  const auto words = all_words(3);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    auto d = oracle::random_pattern(n, 0.2, rng);
    auto a = SparseMatrix::from_dense(n, n, d);
    for (const auto& w : words) {
      auto got = build_scaled_adjacency(a, ScaleSpec::parse(w)).matrix;
      CHECK_MESSAGE(got.to_dense() == oracle::walk_oracle(d, n, w), "word " << w);
    }
  }
}

TEST_CASE("proximity matrices on the worked example") {
  auto a = worked_example();
  CHECK(proximity_meeting(a, 2, true) == pairs(6, {{0, 2}, {2, 0}, {3, 4}, {4, 3}}));
  CHECK(proximity_meeting(a, 3, true) == pairs(6, {{3, 5}, {4, 5}, {5, 3}, {5, 4}}));
  // Unpruned M3 picks up lower-order pairs through generated self-loops.
  auto m3 = proximity_meeting(a, 3, false);
  CHECK(m3 == pairs(6, {{3, 3}, {3, 4}, {3, 5}, {4, 3}, {4, 4}, {4, 5}, {5, 3}, {5, 4}, {5, 5}}));
  CHECK(m3.nnz() >= proximity_meeting(a, 3, true).nnz());
  CHECK_THROWS(proximity_matrix(a, 1, Combine::union_, true));
}

TEST_CASE("proximity matrices against dense oracles") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 10;
    auto d = oracle::random_pattern(n, 0.25, rng);
    auto a = SparseMatrix::from_dense(n, n, d);
    const auto dt = oracle::transpose(d, n, n);
    const auto m2 = oracle::support(oracle::matmul(d, dt, n, n, n));
    const auto d2 = oracle::support(oracle::matmul(dt, d, n, n, n));
    oracle::Dense both(n * n), either(n * n);
    for (std::size_t i = 0; i < n * n; ++i) {
      both[i] = m2[i] * d2[i];
      either[i] = std::max(m2[i], d2[i]);
    }
    CHECK(proximity_matrix(a, 2, Combine::intersect, false).to_dense() == both);
    CHECK(proximity_matrix(a, 2, Combine::union_, false).to_dense() == either);

    // Pruned order 3, from the recursion offdiag(A * offdiag(M2) * A^T).
    auto m2hat = m2;
    for (std::size_t i = 0; i < n; ++i) m2hat[i * n + i] = 0.0;
    auto m3hat = oracle::support(oracle::matmul(oracle::matmul(d, m2hat, n, n, n), dt, n, n, n));
    for (std::size_t i = 0; i < n; ++i) m3hat[i * n + i] = 0.0;
    CHECK(proximity_meeting(a, 3, true).to_dense() == m3hat);

    for (std::size_t k : {2u, 3u}) {
      for (bool prune : {false, true}) {
        auto m = proximity_meeting(a, k, prune);
        auto dd = proximity_diffusion(a, k, prune);
        CHECK(m == transpose(m));
        CHECK(dd == transpose(dd));
      }
    }
  }
}

TEST_CASE("remove_shared_edges") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    auto ds = oracle::random_pattern(n, 0.4, rng);
    auto db = oracle::random_pattern(n, 0.3, rng);
    auto s = SparseMatrix::from_dense(n, n, ds), b = SparseMatrix::from_dense(n, n, db);
    auto bt = transpose(b);
    const SparseMatrix bases[] = {b, bt};
    oracle::Dense expected(n * n);
    const auto dbt = oracle::transpose(db, n, n);
    for (std::size_t i = 0; i < n * n; ++i) {
      expected[i] = (ds[i] != 0 && db[i] == 0 && dbt[i] == 0) ? 1.0 : 0.0;
    }
    CHECK(remove_shared_edges(s, bases).to_dense() == expected);
    const SparseMatrix self[] = {s};
    CHECK(remove_shared_edges(s, self).nnz() == 0);
    CHECK(remove_shared_edges(s, {}) == s.pattern());
  }
  const SparseMatrix wrong[] = {SparseMatrix::empty(3, 3)};
  CHECK_THROWS(remove_shared_edges(SparseMatrix::empty(2, 2), wrong));
}

TEST_CASE("assign_weights") {
  std::mt19937_64 rng(2);
  auto s = SparseMatrix::from_dense(40, 40, oracle::random_pattern(40, 0.5, rng));
  SUBCASE("ones") {
    auto w = assign_weights(s, WeightStrategy::ones(), 1);
    for (double v : w.values()) CHECK(v == 1.0);
  }
  SUBCASE("uniform default range") {
    auto w = assign_weights(s, WeightStrategy::uniform(), 7);
    CHECK(w.pattern() == s.pattern());
    for (double v : w.values()) {
      CHECK(v >= 0.0001);
      CHECK(v <= 10000.0);
    }
    CHECK(assign_weights(s, WeightStrategy::uniform(), 7) == w);
    CHECK_FALSE(assign_weights(s, WeightStrategy::uniform(), 8) == w);
    CHECK_THROWS(assign_weights(s, WeightStrategy::uniform(5, 5), 1));
  }
  SUBCASE("mixture modes show up in the histogram") {
    auto big = SparseMatrix::from_dense(100, 100, oracle::Dense(10000, 1.0));
    auto count_modes = [&](std::vector<double> peaks) {
      std::vector<double> weights(peaks.size(), 1.0 / static_cast<double>(peaks.size()));
      auto w = assign_weights(big, WeightStrategy::mixture(peaks, weights, 0.05), 3);
      // 40 bins over [-0.2, 1.2]; a mode is a bin above both neighbours and
      // above 2% of the samples.
      std::vector<int> hist(40, 0);
      for (double v : w.values()) {
        const int b = static_cast<int>((v + 0.2) / 1.4 * 40.0);
        if (b >= 0 && b < 40) ++hist[static_cast<std::size_t>(b)];
      }
      int modes = 0;
      for (std::size_t i = 0; i < 40; ++i) {
        const int left = i ? hist[i - 1] : 0, right = i + 1 < 40 ? hist[i + 1] : 0;
        if (hist[i] > left && hist[i] >= right && hist[i] > 200) ++modes;
      }
      for (double v : w.values()) CHECK(v >= 0.0);
      return modes;
    };
    CHECK(count_modes({0.0, 1.0}) == 2);
    CHECK(count_modes({0.0, 0.5, 1.0}) == 3);
    CHECK_THROWS(assign_weights(s, WeightStrategy::mixture({0, 1}, {0.5, 0.6}, 0.05), 1));
  }
}

TEST_CASE("ScaleSet computes the six base matrices") {
  auto a = worked_example();
  auto set = ScaleSet::compute(a);
  auto at = transpose(a);
  CHECK(set.a == a);
  CHECK(set.at == at);
  CHECK(set.a_at == spgemm(a, at, Semiring::pattern));
  CHECK(set.at_a == spgemm(at, a, Semiring::pattern));
  CHECK(set.a_a == spgemm(a, a, Semiring::pattern));
  CHECK(set.at_at == spgemm(at, at, Semiring::pattern));
}
