#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scalenet/training.hpp"

namespace scalenet {

// One column of the per-scale accuracy table. Words are over {A, T}; two
// words mean the aggregation outputs of both are added. No words: the
// None control (empty adjacency, zero features).
struct ScaleColumn {
  std::string name;
  std::vector<std::string> words;
};

// A, A^T, A+A^T, AA^T, A^TA, AA^T+A^TA, AA, A^TA^T, AA+A^TA^T, None.
std::vector<ScaleColumn> default_scale_columns();

struct ScaleReportOptions {
  // Uses layers, hidden, bn, relu, dropout, lr, comb2 and both self-loop modes.
  ModelConfig model;
  TrainHyper hyper;
  // Also train on each 2nd-scale column with the edges of A and A^T removed.
  bool remove_shared = true;
  std::size_t threads = 1;
  std::uint64_t seed = 0;
};

struct ScaleCell {
  std::vector<double> test_acc;  // one per split
  double mean = 0.0;
  double std = 0.0;
};

struct ScaleColumnResult {
  std::string name;
  ScaleCell plain;
  std::optional<ScaleCell> shared_removed;
};

struct ScaleReport {
  std::vector<ScaleColumnResult> columns;

  // Throws std::out_of_range for an unknown column.
  const ScaleColumnResult& column(const std::string& name) const;
  nlohmann::ordered_json to_json() const;
  // Header row of column names, then one row of "mean±std" cells with the
  // shared-edge-removed value in parentheses where computed.
  std::string to_tsv() const;
};

// Trains one model per (column, split). All columns of a split share the
// same seed so they differ only in the matrices they see.
ScaleReport per_scale_report(const DirectedGraph& g, const SplitSet& splits,
                             const std::vector<ScaleColumn>& columns,
                             const ScaleReportOptions& options);

enum class JumpingKnowledge { max, cat, none };
std::string to_string(JumpingKnowledge jk);
JumpingKnowledge parse_jk(const std::string& text);
// max -> (jk_max, jk_max), cat -> (jk_cat, jk_cat), none -> (add, last).
void apply_jk(ModelConfig& cfg, JumpingKnowledge jk);

// Lists of values to enumerate; everything else comes from `base`. The
// self-loop list sets both self-loop modes.
struct GridSpace {
  ModelConfig base;
  std::vector<std::size_t> layers{1, 2, 3, 4, 5};
  std::vector<double> lr{0.1, 0.01, 0.005};
  std::vector<double> dropout{0.0, 0.5};
  std::vector<bool> bn{false, true};
  std::vector<bool> relu{false, true};
  std::vector<JumpingKnowledge> jk{JumpingKnowledge::max, JumpingKnowledge::cat,
                                   JumpingKnowledge::none};
  std::vector<SelfLoopMode> selfloop{SelfLoopMode::add, SelfLoopMode::remove, SelfLoopMode::keep};
  std::vector<double> alpha{0.0, 0.5, 1.0, 2.0, 3.0};
  std::vector<double> beta;   // empty: base.beta
  std::vector<double> gamma;  // empty: base.gamma

  std::size_t size() const;
  // Fixed nesting order, layers outermost.
  std::vector<ModelConfig> enumerate() const;
  nlohmann::ordered_json to_json() const;
  static GridSpace from_json(const nlohmann::json& doc, GridSpace base);
  static GridSpace from_json(const nlohmann::json& doc);
};

struct GridEntry {
  ModelConfig config;
  std::uint64_t seed = 0;
  std::vector<double> val_acc;
  std::vector<double> test_acc;
  double mean_val = 0.0;
  double mean_test = 0.0;
  double std_test = 0.0;
};

struct GridResult {
  std::vector<GridEntry> ranked;  // best first

  nlohmann::ordered_json to_json() const;
  std::string leaderboard_tsv() const;
};

// Seed for one config: hash of its canonical JSON mixed with `base_seed`.
std::uint64_t config_seed(const ModelConfig& cfg, std::uint64_t base_seed);

// Ranking: higher mean val accuracy, then fewer layers, then lower lr, then
// enumeration order.
bool grid_entry_better(const GridEntry& a, const GridEntry& b);

// Trains every config on every split. Throws on an empty space.
GridResult grid_search(const GridSpace& space, const DirectedGraph& g, const SplitSet& splits,
                       const TrainHyper& hyper, std::uint64_t base_seed, std::size_t threads = 1);

// Same, over an explicit config list.
GridResult grid_search(const std::vector<ModelConfig>& configs, const DirectedGraph& g,
                       const SplitSet& splits, const TrainHyper& hyper, std::uint64_t base_seed,
                       std::size_t threads = 1);

}  // namespace scalenet
