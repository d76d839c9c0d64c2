#include "scalenet/training.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "scalenet/parallel.hpp"
#include "scalenet/random.hpp"

namespace scalenet {

void TrainHyper::validate() const {
  if (max_epochs == 0 || max_epochs > kMaxEpochs) {
    throw std::invalid_argument("max_epochs must be in 1.." + std::to_string(kMaxEpochs));
  }
  if (!(lr_factor > 0.0 && lr_factor < 1.0)) throw std::invalid_argument("lr_factor must be in (0, 1)");
  if (!(min_lr > 0.0)) throw std::invalid_argument("min_lr must be positive");
}

nlohmann::ordered_json TrainHyper::to_json() const {
  return {{"max_epochs", max_epochs}, {"patience", patience},   {"lr_patience", lr_patience},
          {"lr_factor", lr_factor},   {"min_lr", min_lr},       {"seed", seed}};
}

TrainHyper TrainHyper::from_json(const nlohmann::json& doc, TrainHyper h) {
  try {
    if (doc.contains("max_epochs")) h.max_epochs = doc["max_epochs"].get<std::size_t>();
    if (doc.contains("patience")) h.patience = doc["patience"].get<std::size_t>();
    if (doc.contains("lr_patience")) h.lr_patience = doc["lr_patience"].get<std::size_t>();
    if (doc.contains("lr_factor")) h.lr_factor = doc["lr_factor"].get<double>();
    if (doc.contains("min_lr")) h.min_lr = doc["min_lr"].get<double>();
    if (doc.contains("seed")) h.seed = doc["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("training hyperparameters: ") + e.what());
  }
  return h;
}

TrainHyper TrainHyper::from_json(const nlohmann::json& doc) { return from_json(doc, TrainHyper{}); }

nlohmann::ordered_json TrainResult::to_json(bool with_history) const {
  nlohmann::ordered_json doc{{"best_val_acc", best_val_acc},
                             {"test_acc_at_best_val", test_acc_at_best_val},
                             {"train_acc_at_best_val", train_acc_at_best_val},
                             {"best_epoch", best_epoch},
                             {"epochs_run", epochs_run},
                             {"seed", seed}};
  if (with_history) {
    auto& hist = doc["history"] = nlohmann::ordered_json::array();
    for (const auto& e : history) hist.push_back({{"loss", e.loss}, {"val_acc", e.val_acc}, {"lr", e.lr}});
  }
  return doc;
}

Matrix predict(Model& model, const DirectedGraph& g) {
  Tape tape;
  Rng unused(0);
  return model.forward(tape, g.features, false, unused).value();
}

TrainResult train(Model& model, const DirectedGraph& g, const Split& split,
                  const TrainHyper& hyper) {
  hyper.validate();
  if (split.train.empty()) throw std::invalid_argument("train: empty training set");
  if (split.val.empty()) throw std::invalid_argument("train: empty validation set");

  auto params = model.store().parameters();
  AdamState adam;
  adam.lr = model.config().lr;
  Rng dropout_rng(derive_seed(hyper.seed, 2));

  TrainResult result;
  result.seed = hyper.seed;
  double best_val = -1.0;
  std::size_t since_best = 0, since_lr_best = 0;
  double lr_best = -1.0;
  ParameterStore::Snapshot best;

  for (std::size_t epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
    model.store().zero_grad();
    double loss_value = 0.0;
    {
      Tape tape;
      Var logits = model.forward(tape, g.features, true, dropout_rng);
      Var loss = ops::softmax_cross_entropy(logits, g.labels, split.train);
      loss_value = loss.value()(0, 0);
      tape.backward(loss);
    }
    adam_step(params, adam);

    const Matrix logits = predict(model, g);
    const double val_acc = accuracy(logits, g.labels, split.val);
    result.history.push_back({loss_value, val_acc, adam.lr});
    result.epochs_run = epoch;

    if (val_acc > best_val) {
      best_val = val_acc;
      since_best = 0;
      best = model.store().snapshot();
      result.best_epoch = epoch;
      result.best_val_acc = val_acc;
      result.test_acc_at_best_val = split.test.empty() ? 0.0 : accuracy(logits, g.labels, split.test);
      result.train_acc_at_best_val = accuracy(logits, g.labels, split.train);
    } else {
      ++since_best;
    }

    if (val_acc > lr_best) {
      lr_best = val_acc;
      since_lr_best = 0;
    } else if (++since_lr_best > hyper.lr_patience) {
      adam.lr = std::max(hyper.min_lr, adam.lr * hyper.lr_factor);
      since_lr_best = 0;
    }

    if (since_best > hyper.patience) break;
  }
  model.store().restore(best);
  return result;
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

nlohmann::ordered_json CrossValidation::to_json() const {
  nlohmann::ordered_json accs = nlohmann::ordered_json::array();
  nlohmann::ordered_json vals = nlohmann::ordered_json::array();
  nlohmann::ordered_json per_run = nlohmann::ordered_json::array();
  for (const auto& r : runs) {
    accs.push_back(r.test_acc_at_best_val);
    vals.push_back(r.best_val_acc);
    per_run.push_back(r.to_json(false));
  }
  nlohmann::ordered_json doc;
  doc["test_acc"] = std::move(accs);
  doc["val_acc"] = std::move(vals);
  doc["mean"] = mean_test_acc;
  doc["std"] = std_test_acc;
  doc["mean_val"] = mean_val_acc;
  doc["summary"] = format_mean_std(mean_test_acc, std_test_acc);
  doc["runs"] = std::move(per_run);
  return doc;
}

CrossValidation cross_validate(const ModelConfig& cfg, const DirectedGraph& g,
                               const SplitSet& splits, const std::vector<std::uint64_t>& seeds,
                               const TrainHyper& hyper, std::size_t threads,
                               const ScaleSet* scales) {
  if (splits.splits.empty()) throw std::invalid_argument("cross_validate: no splits");
  if (seeds.empty() || (seeds.size() != 1 && seeds.size() != splits.splits.size())) {
    throw std::invalid_argument("cross_validate: need one seed or one seed per split");
  }
  std::optional<ScaleSet> local;
  if (!scales && cfg.family != Family::mlp) {
    local = ScaleSet::compute(g.adjacency);
    scales = &*local;
  }
  CrossValidation cv;
  cv.runs.resize(splits.splits.size());
  parallel_for(splits.splits.size(), threads, [&](std::size_t i) {
    const std::uint64_t seed = seeds.size() == 1 ? derive_seed(seeds[0], i) : seeds[i];
    auto model = build_model(cfg, g, derive_seed(seed, 1), scales);
    TrainHyper h = hyper;
    h.seed = seed;
    cv.runs[i] = train(*model, g, splits.splits[i], h);
  });
  std::vector<double> test, val;
  for (const auto& r : cv.runs) {
    test.push_back(r.test_acc_at_best_val);
    val.push_back(r.best_val_acc);
  }
  std::tie(cv.mean_test_acc, cv.std_test_acc) = mean_std(test);
  cv.mean_val_acc = mean_std(val).first;
  return cv;
}

std::string format_mean_std(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f±%.1f", 100.0 * mean, 100.0 * std);
  return buf;
}

}  // namespace scalenet
