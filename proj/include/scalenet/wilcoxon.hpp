#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace scalenet {

enum class WilcoxonMethod { exact, normal_approx };
std::string to_string(WilcoxonMethod m);

struct ComparisonResult {
  double statistic = 0.0;  // W = min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  double p_value = 1.0;  // two-sided
  std::size_t n_pairs = 0;  // after dropping zero differences
  WilcoxonMethod method = WilcoxonMethod::exact;

  nlohmann::ordered_json to_json() const;
};

// Largest n for which the exact null distribution is used.
inline constexpr std::size_t kWilcoxonExactMax = 25;
inline constexpr std::size_t kWilcoxonMinPairs = 5;

// Average ranks (1-based) of |d| for the nonzero differences, in input order
// of the kept pairs. |d| values within a relative 1e-12 of each other are
// tied, and |d| <= 1e-12 counts as zero.
std::vector<double> signed_rank_ranks(std::span<const double> diffs, std::vector<double>* kept);

// P(T <= w) * 2, capped at 1, where T is the sum of a random subset of
// `ranks` (each included with probability 1/2). Ranks must be multiples of
// 1/2. Exact, by dynamic programming over doubled ranks.
double wilcoxon_exact_pvalue(std::span<const double> ranks, double w);

// Two-sided normal approximation with the tie correction to the variance
// and a 1/2 continuity correction.
double wilcoxon_normal_pvalue(std::span<const double> ranks, double w);

// Paired two-sided test. Throws std::invalid_argument on a length mismatch,
// when every difference is zero, or when fewer than five nonzero pairs
// remain.
ComparisonResult wilcoxon_signed_rank(std::span<const double> xs, std::span<const double> ys);

}  // namespace scalenet
