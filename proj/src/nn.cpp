#include "scalenet/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace scalenet {

Parameter& ParameterStore::create(std::string name, Matrix init) {
  params_.push_back(std::make_unique<Parameter>(std::move(name), std::move(init)));
  return *params_.back();
}

ops::BatchNormState& ParameterStore::create_batch_norm(std::size_t cols) {
  buffers_.push_back(std::make_unique<ops::BatchNormState>(cols));
  return *buffers_.back();
}

std::vector<Parameter*> ParameterStore::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterStore::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParameterStore::num_scalars() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p->value.size();
  return total;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

ParameterStore::Snapshot ParameterStore::snapshot() const {
  Snapshot snap;
  for (const auto& p : params_) snap.values.push_back(p->value);
  for (const auto& b : buffers_) snap.buffers.push_back(*b);
  return snap;
}

void ParameterStore::restore(const Snapshot& snap) {
  if (snap.values.size() != params_.size() || snap.buffers.size() != buffers_.size()) {
    throw std::invalid_argument("ParameterStore::restore: snapshot from a different model");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i]->value = snap.values[i];
  for (std::size_t i = 0; i < buffers_.size(); ++i) *buffers_[i] = snap.buffers[i];
}

Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(fan_in, fan_out, 0.0);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

Linear::Linear(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
               bool bias, Rng& rng)
    : weight_(&store.create(name + ".weight", glorot_uniform(in, out, rng))) {
  if (bias) bias_ = &store.create(name + ".bias", Matrix(1, out, 0.0));
}

Var Linear::operator()(Tape& tape, Var x) const {
  Var y = ops::matmul(x, tape.parameter(*weight_));
  if (bias_) y = ops::add_row_bias(y, tape.parameter(*bias_));
  return y;
}

BatchNorm::BatchNorm(ParameterStore& store, const std::string& name, std::size_t cols)
    : gamma_(&store.create(name + ".gamma", Matrix(1, cols, 1.0))),
      beta_(&store.create(name + ".beta", Matrix(1, cols, 0.0))),
      state_(&store.create_batch_norm(cols)) {}

Var BatchNorm::operator()(Tape& tape, Var x, bool training) const {
  return ops::batch_norm(x, tape.parameter(*gamma_), tape.parameter(*beta_), *state_, training);
}

void adam_step(std::span<Parameter* const> params, AdamState& state) {
  if (!(state.lr > 0.0)) throw std::invalid_argument("adam_step: learning rate must be > 0");
  if (state.first_moment.empty() && state.second_moment.empty()) {
    for (const Parameter* p : params) {
      state.first_moment.emplace_back(p->value.rows(), p->value.cols(), 0.0);
      state.second_moment.emplace_back(p->value.rows(), p->value.cols(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: moment count does not match parameters");
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(state.beta1, t);
  const double bias2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    if (!m.same_shape(p.value) || !v.same_shape(p.value) || !p.grad.same_shape(p.value)) {
      throw std::invalid_argument("adam_step: shape mismatch for " + p.name);
    }
    auto w = p.value.data();
    auto g = p.grad.data();
    auto md = m.data();
    auto vd = v.data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      md[k] = state.beta1 * md[k] + (1.0 - state.beta1) * g[k];
      vd[k] = state.beta2 * vd[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = md[k] / bias1;
      const double v_hat = vd[k] / bias2;
      w[k] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

namespace {

double evaluate(const LossBuilder& build_loss) {
  Tape tape;
  return build_loss(tape).value()(0, 0);
}

}  // namespace

GradCheckResult finite_diff_check(const LossBuilder& build_loss,
                                  std::span<Parameter* const> params, double eps,
                                  std::size_t max_entries_per_param, std::uint64_t seed) {
  const double first = evaluate(build_loss);
  const double second = evaluate(build_loss);
  if (first != second) {
    throw std::runtime_error("finite_diff_check: forward pass is not deterministic");
  }

  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var loss = build_loss(tape);
    tape.backward(loss);
  }
  std::vector<Matrix> analytic;
  for (const Parameter* p : params) analytic.push_back(p->grad);

  GradCheckResult result;
  Rng rng(seed);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    std::vector<std::size_t> entries(p.value.size());
    std::iota(entries.begin(), entries.end(), 0);
    if (entries.size() > max_entries_per_param) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(max_entries_per_param);
    }
    for (std::size_t k : entries) {
      double& slot = p.value.data()[k];
      const double saved = slot;
      slot = saved + eps;
      const double plus = evaluate(build_loss);
      slot = saved - eps;
      const double minus = evaluate(build_loss);
      slot = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double exact = analytic[i].data()[k];
      const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-6});
      const double err = std::abs(exact - numeric) / denom;
      ++result.entries_checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = p.name;
      }
    }
  }
  for (Parameter* p : params) p->zero_grad();
  return result;
}

}  // namespace scalenet
