#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scalenet/sparse.hpp"

namespace scalenet {

// One hop of a scaled edge: along A (forward) or along A^T (backward).
enum class Hop : char { forward = 'A', backward = 'T' };

// A word over {A, T}. Its length is the scale of the resulting graph.
struct ScaleSpec {
  std::vector<Hop> word;
  SelfLoopMode selfloop_mode = SelfLoopMode::keep;

  // Parses "A", "AT", "TTA", ... Throws std::invalid_argument on anything else.
  static ScaleSpec parse(const std::string& word, SelfLoopMode mode = SelfLoopMode::keep);
  std::string word_string() const;
  std::size_t scale() const noexcept { return word.size(); }
};

struct ScaledGraph {
  ScaleSpec spec;
  SparseMatrix matrix;                  // pattern
  std::optional<SparseMatrix> weighted;  // set by assign_weights callers
};

// Left-to-right pattern product of A / A^T following `spec.word`, then the
// self-loop mode. Throws on an empty word or a non-square input.
ScaledGraph build_scaled_adjacency(const SparseMatrix& adjacency, const ScaleSpec& spec);

enum class Combine { intersect, union_ };

std::string to_string(Combine c);
Combine parse_combine(const std::string& text);

// One side of the k-th order proximity pair:
//   M(k) = A^{k-1} (A^T)^{k-1}   (meeting side)
//   D(k) = (A^T)^{k-1} A^{k-1}   (diffusion side)
// When `prune` is set the order-k matrix is built as A * M(k-1) * A^T (resp.
// A^T * D(k-1) * A) from the pruned order k-1 matrix, and each order has its
// diagonal removed, so no generated self-loop leaks into higher orders.
SparseMatrix proximity_meeting(const SparseMatrix& adjacency, std::size_t k, bool prune);
SparseMatrix proximity_diffusion(const SparseMatrix& adjacency, std::size_t k, bool prune);

// combine(M(k), D(k)) as a pattern. Throws for k < 2.
SparseMatrix proximity_matrix(const SparseMatrix& adjacency, std::size_t k, Combine combine,
                              bool prune_generated_selfloops);

// Support of `scaled` minus the union of the supports of `bases`.
SparseMatrix remove_shared_edges(const SparseMatrix& scaled, std::span<const SparseMatrix> bases);

struct WeightStrategy {
  enum class Kind { ones, uniform, mixture };
  Kind kind = Kind::ones;
  double lo = 0.0001;
  double hi = 10000.0;
  // Mixture of Gaussians centred at `peaks` with mixing `weights`, clamped
  // to be non-negative.
  std::vector<double> peaks;
  std::vector<double> weights;
  double spread = 0.05;

  static WeightStrategy ones() { return {}; }
  static WeightStrategy uniform(double lo = 0.0001, double hi = 10000.0) {
    WeightStrategy w;
    w.kind = Kind::uniform;
    w.lo = lo;
    w.hi = hi;
    return w;
  }
  static WeightStrategy mixture(std::vector<double> peaks, std::vector<double> weights,
                                double spread) {
    WeightStrategy w;
    w.kind = Kind::mixture;
    w.peaks = std::move(peaks);
    w.weights = std::move(weights);
    w.spread = spread;
    return w;
  }
};

// Same support as `s`, values drawn per `strategy` in storage order.
SparseMatrix assign_weights(const SparseMatrix& s, const WeightStrategy& strategy,
                            std::uint64_t seed);

// The six raw pattern matrices consumed by the models, computed once per
// graph: A, A^T, AA^T, A^TA, AA, A^TA^T (self-loop mode not yet applied).
struct ScaleSet {
  SparseMatrix a, at, a_at, at_a, a_a, at_at;

  static ScaleSet compute(const SparseMatrix& adjacency);
};

}  // namespace scalenet
