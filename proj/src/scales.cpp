#include "scalenet/scales.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "scalenet/random.hpp"

namespace scalenet {

ScaleSpec ScaleSpec::parse(const std::string& word, SelfLoopMode mode) {
  if (word.empty()) throw std::invalid_argument("scale word must not be empty");
  ScaleSpec spec;
  spec.selfloop_mode = mode;
  for (char c : word) {
    if (c == 'A') {
      spec.word.push_back(Hop::forward);
    } else if (c == 'T') {
      spec.word.push_back(Hop::backward);
    } else {
      throw std::invalid_argument(std::string("scale word may only contain A and T, got '") + c +
                                  "'");
    }
  }
  return spec;
}

std::string ScaleSpec::word_string() const {
  std::string out;
  for (Hop h : word) out.push_back(static_cast<char>(h));
  return out;
}

ScaledGraph build_scaled_adjacency(const SparseMatrix& adjacency, const ScaleSpec& spec) {
  if (spec.word.empty()) throw std::invalid_argument("build_scaled_adjacency: empty word");
  if (!adjacency.is_square()) throw std::invalid_argument("build_scaled_adjacency: A not square");
  const SparseMatrix a = adjacency.pattern();
  const SparseMatrix at = transpose(a);
  auto factor = [&](Hop h) -> const SparseMatrix& { return h == Hop::forward ? a : at; };

  SparseMatrix product = factor(spec.word.front());
  for (std::size_t i = 1; i < spec.word.size(); ++i) {
    product = spgemm(product, factor(spec.word[i]), Semiring::pattern);
  }
  return {spec, apply_selfloop_mode(product, spec.selfloop_mode), std::nullopt};
}

std::string to_string(Combine c) { return c == Combine::intersect ? "intersect" : "union"; }

Combine parse_combine(const std::string& text) {
  if (text == "intersect" || text == "intersection") return Combine::intersect;
  if (text == "union") return Combine::union_;
  throw std::invalid_argument("unknown combine mode '" + text + "'");
}

namespace {

SparseMatrix proximity_side(const SparseMatrix& adjacency, std::size_t k, bool prune,
                            bool meeting) {
  if (k < 2) throw std::invalid_argument("proximity order k must be >= 2");
  if (!adjacency.is_square()) throw std::invalid_argument("proximity: A not square");
  const SparseMatrix a = adjacency.pattern();
  const SparseMatrix at = transpose(a);
  const SparseMatrix& left = meeting ? a : at;
  const SparseMatrix& right = meeting ? at : a;

  if (!prune) {
    SparseMatrix out = left;
    for (std::size_t i = 1; i < k - 1; ++i) out = spgemm(out, left, Semiring::pattern);
    for (std::size_t i = 0; i < k - 1; ++i) out = spgemm(out, right, Semiring::pattern);
    return out;
  }
  // Order 1 is the identity relation; each further order wraps the previous
  // one in one more left/right hop and drops the diagonal.
  SparseMatrix order = SparseMatrix::identity(a.n_rows());
  for (std::size_t j = 2; j <= k; ++j) {
    order = spgemm(spgemm(left, order, Semiring::pattern), right, Semiring::pattern);
    order = remove_self_loops(order);
  }
  return order;
}

}  // namespace

SparseMatrix proximity_meeting(const SparseMatrix& adjacency, std::size_t k, bool prune) {
  return proximity_side(adjacency, k, prune, true);
}

SparseMatrix proximity_diffusion(const SparseMatrix& adjacency, std::size_t k, bool prune) {
  return proximity_side(adjacency, k, prune, false);
}

SparseMatrix proximity_matrix(const SparseMatrix& adjacency, std::size_t k, Combine combine,
                              bool prune_generated_selfloops) {
  SparseMatrix m = proximity_meeting(adjacency, k, prune_generated_selfloops);
  SparseMatrix d = proximity_diffusion(adjacency, k, prune_generated_selfloops);
  return combine == Combine::intersect ? pattern_intersection(m, d) : pattern_union(m, d);
}

SparseMatrix remove_shared_edges(const SparseMatrix& scaled,
                                 std::span<const SparseMatrix> bases) {
  SparseMatrix out = scaled.pattern();
  for (const auto& base : bases) out = pattern_difference(out, base);
  return out;
}

SparseMatrix assign_weights(const SparseMatrix& s, const WeightStrategy& strategy,
                            std::uint64_t seed) {
  std::vector<double> values(s.nnz(), 1.0);
  Rng rng(seed);
  switch (strategy.kind) {
    case WeightStrategy::Kind::ones:
      break;
    case WeightStrategy::Kind::uniform: {
      if (!(strategy.lo < strategy.hi)) {
        throw std::invalid_argument("assign_weights: uniform range needs lo < hi");
      }
      std::uniform_real_distribution<double> dist(strategy.lo, strategy.hi);
      for (double& v : values) v = dist(rng);
      break;
    }
    case WeightStrategy::Kind::mixture: {
      if (strategy.peaks.empty() || strategy.peaks.size() != strategy.weights.size()) {
        throw std::invalid_argument("assign_weights: mixture needs one weight per peak");
      }
      double total = std::accumulate(strategy.weights.begin(), strategy.weights.end(), 0.0);
      if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("assign_weights: mixture weights must sum to 1");
      }
      if (!(strategy.spread > 0.0)) throw std::invalid_argument("assign_weights: spread <= 0");
      std::discrete_distribution<std::size_t> pick(strategy.weights.begin(),
                                                   strategy.weights.end());
      std::normal_distribution<double> jitter(0.0, strategy.spread);
      for (double& v : values) v = std::max(0.0, strategy.peaks[pick(rng)] + jitter(rng));
      break;
    }
  }
  std::vector<std::size_t> offsets(s.row_offsets().begin(), s.row_offsets().end());
  std::vector<Index> cols(s.col_indices().begin(), s.col_indices().end());
  return SparseMatrix::from_csr(s.n_rows(), s.n_cols(), std::move(offsets), std::move(cols),
                                std::move(values));
}

ScaleSet ScaleSet::compute(const SparseMatrix& adjacency) {
  ScaleSet set;
  set.a = adjacency.pattern();
  set.at = transpose(set.a);
  set.a_at = spgemm(set.a, set.at, Semiring::pattern);
  set.at_a = spgemm(set.at, set.a, Semiring::pattern);
  set.a_a = spgemm(set.a, set.a, Semiring::pattern);
  set.at_at = spgemm(set.at, set.at, Semiring::pattern);
  return set;
}

}  // namespace scalenet
