#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "scalenet/autodiff.hpp"

namespace scalenet {

// Owns every Parameter and BatchNorm buffer of a model so they can be
// snapshotted and restored as one unit (early stopping restores the best).
class ParameterStore {
 public:
  Parameter& create(std::string name, Matrix init);
  ops::BatchNormState& create_batch_norm(std::size_t cols);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t num_scalars() const;
  void zero_grad();

  struct Snapshot {
    std::vector<Matrix> values;
    std::vector<ops::BatchNormState> buffers;
  };
  Snapshot snapshot() const;
  void restore(const Snapshot& snap);

 private:
  // unique_ptr keeps addresses stable for layers holding references.
  std::vector<std::unique_ptr<Parameter>> params_;
  std::vector<std::unique_ptr<ops::BatchNormState>> buffers_;
};

// Uniform Glorot initialization: limit sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

class Linear {
 public:
  Linear(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
         bool bias, Rng& rng);

  Var operator()(Tape& tape, Var x) const;
  std::size_t in_features() const { return weight_->value.rows(); }
  std::size_t out_features() const { return weight_->value.cols(); }
  Parameter& weight() const { return *weight_; }

 private:
  Parameter* weight_;
  Parameter* bias_ = nullptr;
};

class BatchNorm {
 public:
  BatchNorm(ParameterStore& store, const std::string& name, std::size_t cols);
  Var operator()(Tape& tape, Var x, bool training) const;

 private:
  Parameter* gamma_;
  Parameter* beta_;
  ops::BatchNormState* state_;
};

struct AdamState {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step_count = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

// One bias-corrected Adam update using each parameter's accumulated grad.
// Throws std::invalid_argument for lr <= 0 or inconsistent moment shapes.
void adam_step(std::span<Parameter* const> params, AdamState& state);

// Builds a scalar loss on the given tape. Must be deterministic.
using LossBuilder = std::function<Var(Tape&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t entries_checked = 0;
  std::string worst_parameter;
};

// Compares backprop gradients with central differences (step `eps`) on up to
// `max_entries_per_param` randomly chosen entries of each parameter.
// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
// Throws std::runtime_error if two identical forward passes disagree.
GradCheckResult finite_diff_check(const LossBuilder& build_loss,
                                  std::span<Parameter* const> params, double eps = 1e-5,
                                  std::size_t max_entries_per_param = 32,
                                  std::uint64_t seed = 0);

}  // namespace scalenet
