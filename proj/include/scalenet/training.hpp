#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "scalenet/graph_data.hpp"
#include "scalenet/models.hpp"

namespace scalenet {

inline constexpr std::size_t kMaxEpochs = 1500;

struct TrainHyper {
  std::size_t max_epochs = kMaxEpochs;
  // Early stopping: stop once validation accuracy has failed to strictly
  // improve for more than `patience` consecutive epochs.
  std::size_t patience = 410;
  // Plateau scheduler: multiply the rate by `lr_factor` (floored at
  // `min_lr`) once validation accuracy has not improved for more than
  // `lr_patience` epochs.
  std::size_t lr_patience = 80;
  double lr_factor = 0.5;
  double min_lr = 1e-5;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static TrainHyper from_json(const nlohmann::json& doc, TrainHyper base);
  static TrainHyper from_json(const nlohmann::json& doc);
};

struct EpochRecord {
  double loss = 0.0;
  double val_acc = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  double best_val_acc = 0.0;
  double test_acc_at_best_val = 0.0;
  double train_acc_at_best_val = 0.0;
  std::size_t best_epoch = 0;  // 1-based
  std::size_t epochs_run = 0;
  std::vector<EpochRecord> history;
  std::uint64_t seed = 0;

  nlohmann::ordered_json to_json(bool with_history = true) const;
};

// Full-batch Adam training with early stopping on validation accuracy and a
// plateau learning-rate schedule. On return the model holds the parameters
// (and batch-norm statistics) of the best validation epoch.
TrainResult train(Model& model, const DirectedGraph& g, const Split& split,
                  const TrainHyper& hyper);

// Evaluation-mode logits (no dropout, running batch-norm statistics).
Matrix predict(Model& model, const DirectedGraph& g);

struct CrossValidation {
  std::vector<TrainResult> runs;  // one per split
  double mean_test_acc = 0.0;
  double std_test_acc = 0.0;  // sample standard deviation, 0 for one split
  double mean_val_acc = 0.0;

  nlohmann::ordered_json to_json() const;
};

// Mean and sample standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& xs);

// Trains a fresh model per split. `seeds` holds one seed per split, or a
// single seed from which per-split seeds are derived.
CrossValidation cross_validate(const ModelConfig& cfg, const DirectedGraph& g,
                               const SplitSet& splits, const std::vector<std::uint64_t>& seeds,
                               const TrainHyper& hyper, std::size_t threads = 1,
                               const ScaleSet* scales = nullptr);

// Formats as "mean±std" in percent with one decimal, e.g. "82.2±1.2".
std::string format_mean_std(double mean, double std);

}  // namespace scalenet
