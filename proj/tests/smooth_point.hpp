#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <stdexcept>

#include "scalenet/nn.hpp"

namespace testing_support {

// Moves `params` to a jittered point where the loss is smooth at scale `eps`
// around every coordinate: central differences at eps and eps / 10 agree.
// Uses only forward evaluations, so it knows nothing about the backward
// pass under test. Returns the number of jitter attempts used.
inline int jitter_to_smooth_point(const scalenet::LossBuilder& build_loss,
                                  std::span<scalenet::Parameter* const> params, double eps,
                                  std::uint64_t seed, int max_attempts = 20) {
  auto eval = [&] {
    scalenet::Tape t;
    return build_loss(t).value()(0, 0);
  };
  auto slope = [&](double& slot, double h) {
    const double saved = slot;
    slot = saved + h;
    const double plus = eval();
    slot = saved - h;
    const double minus = eval();
    slot = saved;
    return (plus - minus) / (2.0 * h);
  };
  std::vector<scalenet::Matrix> origin;
  for (auto* p : params) origin.push_back(p->value);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i]->value = origin[i];
      for (double& v : params[i]->value.data()) v += u(rng);
    }
    bool smooth = true;
    for (auto* p : params) {
      for (double& v : p->value.data()) {
        const double a = slope(v, eps), b = slope(v, eps / 10);
        if (std::abs(a - b) > 1e-6 * std::max({1.0, std::abs(a), std::abs(b)})) {
          smooth = false;
          break;
        }
      }
      if (!smooth) break;
    }
    if (smooth) return attempt;
  }
  throw std::runtime_error("no smooth evaluation point found");
}

}  // namespace testing_support
