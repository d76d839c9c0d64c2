#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scalenet/graph_data.hpp"
#include "scalenet/nn.hpp"
#include "scalenet/scales.hpp"

namespace scalenet {

enum class Family { scalenet, one_ig, one_igi2, one_igu2, one_igu3, one_ym, gcn, mlp, dirgnn_lite };
// Intra-layer fusion of block outputs.
enum class Comb1 { jk_max, jk_cat, add };
// Cross-layer fusion of per-layer outputs.
enum class Comb2 { jk_max, jk_cat, last };

std::string to_string(Family f);
std::string to_string(Comb1 c);
std::string to_string(Comb2 c);
Family parse_family(const std::string& text);
Comb1 parse_comb1(const std::string& text);
Comb2 parse_comb2(const std::string& text);

struct ModelConfig {
  Family family = Family::scalenet;
  // Direction parameters of the three AGG-B blocks, each in
  // {-1, 0, 0.5, 1, 2, 3}: alpha drives (A, A^T), beta (AA^T, A^TA) and
  // gamma (AA, A^TA^T). -1 drops the block.
  double alpha = 0.5;
  double beta = -1.0;
  double gamma = -1.0;
  std::size_t layers = 2;
  std::size_t hidden = 64;
  Comb1 comb1 = Comb1::add;
  Comb2 comb2 = Comb2::last;
  SelfLoopMode selfloop_first = SelfLoopMode::keep;   // A, A^T
  SelfLoopMode selfloop_second = SelfLoopMode::keep;  // 2nd-scale matrices
  bool use_bn = false;
  bool use_relu = true;
  double dropout = 0.5;
  double lr = 0.01;

  // Throws std::invalid_argument when a field is outside its domain.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  // Missing keys keep the values already in `base`.
  static ModelConfig from_json(const nlohmann::json& doc, ModelConfig base);
  static ModelConfig from_json(const nlohmann::json& doc);
  std::string canonical() const { return to_json().dump(); }
};

bool is_valid_direction_parameter(double v);

// (coefficient on M, coefficient on N) of the AGG-B blend for alpha not in
// {2, 3}: ((1 + a) a, (1 + a)(1 - a)).
std::pair<double, double> aggb_coefficients(double alpha);

// A normalized matrix pair plus the normalized union / intersection of their
// supports, for the alpha = 2 / alpha = 3 modes.
struct AggPair {
  std::shared_ptr<const SparseMatrix> m;
  std::shared_ptr<const SparseMatrix> n;
  std::shared_ptr<const SparseMatrix> m_or_n;
  std::shared_ptr<const SparseMatrix> m_and_n;

  // Takes raw (unnormalized) patterns with self-loop handling already applied.
  static AggPair from_patterns(const SparseMatrix& m_raw, const SparseMatrix& n_raw);
};

// Bidirectional aggregation with a shared weight W:
//   alpha = -1 -> zeros; alpha = 2 -> AGG(M u N); alpha = 3 -> AGG(M n N);
//   otherwise coefM * AGG(M) + coefN * AGG(N), AGG(S) = S (X W).
// Terms with a zero coefficient are skipped.
Var agg_b(Tape& tape, double alpha, const AggPair& pair, Var x, const Linear& weight);

// A matrix fed to a model channel, before and after normalization.
struct Channel {
  std::string name;
  std::shared_ptr<const SparseMatrix> raw;         // nullptr: identity (features only)
  std::shared_ptr<const SparseMatrix> normalized;  // nullptr: identity
  double coefficient = 1.0;
};

// How a channel-based layer fuses its channel outputs.
enum class ChannelFusion { sum, concat };

class Model {
 public:
  virtual ~Model() = default;

  // Logits, n x num_classes.
  virtual Var forward(Tape& tape, const Matrix& features, bool training, Rng& rng) = 0;
  // Matrices fed to the first layer, by name, in channel order.
  virtual std::vector<Channel> channels() const = 0;

  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }
  const ModelConfig& config() const { return config_; }

 protected:
  explicit Model(ModelConfig config) : config_(std::move(config)) {}
  ParameterStore store_;
  ModelConfig config_;
};

// Builds the family's wiring on graph `g`. Initialization is deterministic in
// `seed` and independent of the graph, so equal configs give equal weights.
// `scales`, if given, must come from g.adjacency and saves recomputing the
// six base products.
std::unique_ptr<Model> build_model(const ModelConfig& cfg, const DirectedGraph& g,
                                   std::uint64_t seed, const ScaleSet* scales = nullptr);

// A model whose layers aggregate over caller-supplied patterns (normalized
// inside), fused by `fusion`. Uses cfg's layers, hidden, bn, relu, dropout and
// comb2; the family field is ignored.
std::unique_ptr<Model> build_channel_model(const ModelConfig& cfg,
                                           std::vector<std::pair<std::string, SparseMatrix>> patterns,
                                           ChannelFusion fusion, std::size_t num_features,
                                           std::size_t num_classes, std::uint64_t seed);

}  // namespace scalenet
