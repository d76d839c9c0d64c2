#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scalenet/dense.hpp"
#include "scalenet/sparse.hpp"

namespace scalenet {

// A node-labelled directed graph with dense node features.
struct DirectedGraph {
  SparseMatrix adjacency;  // n x n pattern, A[i][j] = 1 for the edge i -> j
  Matrix features;         // n x d
  std::vector<int> labels;  // n entries in [0, num_classes)
  std::size_t num_classes = 0;

  std::size_t num_nodes() const noexcept { return labels.size(); }
  std::size_t num_features() const noexcept { return features.cols(); }

  // Throws std::invalid_argument if any container invariant is broken.
  void validate() const;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

struct SplitSet {
  std::vector<Split> splits;

  // Throws DataError on overlapping sets, out-of-range indices or an empty
  // training set.
  void validate(std::size_t num_nodes) const;
};

struct Dataset {
  DirectedGraph graph;
  SplitSet splits;
};

struct DatasetPaths {
  std::filesystem::path edges;
  std::filesystem::path features;
  std::filesystem::path labels;
  std::filesystem::path splits;

  // edges.tsv, features.csv, labels.txt, splits.json inside `dir`.
  static DatasetPaths in_directory(const std::filesystem::path& dir);
};

Dataset load_dataset(const DatasetPaths& paths);
// Writes the canonical form of every file; loading the output and dumping
// again reproduces the same bytes.
void dump_dataset(const Dataset& data, const DatasetPaths& paths);

std::vector<double> read_features_csv(std::istream& in, std::size_t* n_rows, std::size_t* n_cols);
std::vector<int> read_labels(std::istream& in);
SplitSet read_splits_json(std::istream& in);
void write_splits_json(std::ostream& out, const SplitSet& splits);

// ---- Graph statistics -----------------------------------------------------

enum class Direction {
  out,  // neighbours reached through A (rows of A)
  in,   // neighbours reached through A^T (rows of A^T)
};

struct NeighborLabelCounts {
  std::size_t homophilic = 0;
  std::size_t heterophilic = 0;
  std::size_t no_neighbor = 0;
};

// Classifies each node by the most frequent label among its 1-hop neighbours
// in `direction`. A tie for the most frequent label counts as heterophilic.
NeighborLabelCounts neighbor_label_table(const DirectedGraph& g, Direction direction);

struct StatsReport {
  std::size_t num_nodes = 0;
  std::size_t num_edges = 0;
  std::size_t num_features = 0;
  std::size_t num_classes = 0;
  double imbalance_ratio = 1.0;
  double pct_no_in = 0.0;
  double pct_in_homo = 0.0;
  double pct_no_out = 0.0;
  double pct_out_homo = 0.0;
  NeighborLabelCounts out_table;  // direction A
  NeighborLabelCounts in_table;   // direction A^T
};

StatsReport compute_stats(const DirectedGraph& g, const Split& split);
std::string stats_to_json(const StatsReport& report);

// ---- Synthetic graphs -----------------------------------------------------

// Which direction carries class signal in a directed stochastic block model.
struct DirectionProfile {
  // Edge u -> v is "on-pattern" when label(v) == (label(u) + class_offset) % C.
  // 0 gives homophily, 1 a cyclic heterophilic pattern.
  std::size_t class_offset = 0;
  // Fraction of nodes (per class) that may receive edges. Everyone else has
  // in-degree zero, which starves aggregation over A^T.
  double receiver_fraction = 1.0;
};

struct DsbmParams {
  std::size_t num_nodes = 300;
  std::size_t num_classes = 5;
  double p_in = 0.05;   // on-pattern edge probability
  double p_out = 0.005;  // off-pattern edge probability
  DirectionProfile profile;
  double feature_noise = 1.0;  // stddev of Gaussian noise added to one-hot features
  std::uint64_t seed = 0;
};

// Labels are assigned in contiguous blocks, so class c has exactly
// floor((c+1)n/C) - floor(cn/C) members. Deterministic in `seed`.
DirectedGraph generate_dsbm(const DsbmParams& params);

// Class sizes produced by generate_dsbm.
std::vector<std::size_t> dsbm_class_sizes(std::size_t num_nodes, std::size_t num_classes);

// Stratified random splits: per class, `train_fraction` / `val_fraction` of the
// members go to train / val and the rest to test.
SplitSet make_random_splits(const std::vector<int>& labels, std::size_t num_classes,
                            std::size_t count, double train_fraction, double val_fraction,
                            std::uint64_t seed);

// Subsamples each training set so that largest:smallest class count equals
// `ratio` (see README for the exact rule). Validation and test are untouched.
SplitSet make_imbalanced_split(const DirectedGraph& g, const SplitSet& base, double ratio,
                               std::uint64_t seed);

}  // namespace scalenet
