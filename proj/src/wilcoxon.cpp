#include "scalenet/wilcoxon.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace scalenet {

namespace {

constexpr double kTieTol = 1e-12;

bool tied(double a, double b) { return std::abs(a - b) <= kTieTol * std::max({1.0, a, b}); }

// Rank counts as integers (2 * rank) so the DP is exact.
std::vector<long> doubled(std::span<const double> ranks) {
  std::vector<long> out;
  out.reserve(ranks.size());
  for (double r : ranks) {
    const double d = 2.0 * r;
    const long v = std::lround(d);
    if (std::abs(d - static_cast<double>(v)) > 1e-9 || v <= 0) {
      throw std::invalid_argument("ranks must be positive multiples of 1/2");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

std::string to_string(WilcoxonMethod m) {
  return m == WilcoxonMethod::exact ? "exact" : "normal_approx";
}

nlohmann::ordered_json ComparisonResult::to_json() const {
  return {{"statistic", statistic}, {"w_plus", w_plus},   {"w_minus", w_minus},
          {"p_value", p_value},     {"n_pairs", n_pairs}, {"method", to_string(method)}};
}

std::vector<double> signed_rank_ranks(std::span<const double> diffs, std::vector<double>* kept) {
  std::vector<double> nonzero;
  for (double d : diffs) {
    if (!std::isfinite(d)) throw std::invalid_argument("non-finite difference");
    if (std::abs(d) > kTieTol) nonzero.push_back(d);
  }
  const std::size_t n = nonzero.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(nonzero[a]) < std::abs(nonzero[b]);
  });
  std::vector<double> ranks(n, 0.0);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && tied(std::abs(nonzero[order[j - 1]]), std::abs(nonzero[order[j]]))) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  if (kept) *kept = std::move(nonzero);
  return ranks;
}

double wilcoxon_exact_pvalue(std::span<const double> ranks, double w) {
  const auto r = doubled(ranks);
  const long total = std::accumulate(r.begin(), r.end(), 0L);
  // count[s] = number of subsets whose doubled rank sum is s.
  std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
  count[0] = 1.0;
  long reach = 0;
  for (long v : r) {
    for (long s = reach; s >= 0; --s) count[static_cast<std::size_t>(s + v)] += count[static_cast<std::size_t>(s)];
    reach += v;
  }
  const long limit = static_cast<long>(std::floor(2.0 * w + 1e-9));
  double tail = 0.0;
  for (long s = 0; s <= std::min(limit, total); ++s) tail += count[static_cast<std::size_t>(s)];
  const double p = 2.0 * tail / std::ldexp(1.0, static_cast<int>(r.size()));
  return std::min(1.0, p);
}

double wilcoxon_normal_pvalue(std::span<const double> ranks, double w) {
  const double n = static_cast<double>(ranks.size());
  const double mean = n * (n + 1.0) / 4.0;
  double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
  // Tie correction: sum over tie groups of (t^3 - t) / 48.
  std::vector<double> sorted(ranks.begin(), ranks.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    var -= (t * t * t - t) / 48.0;
    i = j;
  }
  if (var <= 0.0) return 1.0;
  const double diff = std::abs(w - mean);
  const double z = std::max(0.0, diff - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

ComparisonResult wilcoxon_signed_rank(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("wilcoxon: length mismatch");
  std::vector<double> diffs(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) diffs[i] = xs[i] - ys[i];
  std::vector<double> kept;
  const auto ranks = signed_rank_ranks(diffs, &kept);
  if (kept.empty()) throw std::invalid_argument("wilcoxon: all differences are zero");
  if (kept.size() < kWilcoxonMinPairs) {
    throw std::invalid_argument("wilcoxon: need at least 5 nonzero differences, got " +
                                std::to_string(kept.size()));
  }
  ComparisonResult out;
  for (std::size_t i = 0; i < kept.size(); ++i) (kept[i] > 0 ? out.w_plus : out.w_minus) += ranks[i];
  out.statistic = std::min(out.w_plus, out.w_minus);
  out.n_pairs = kept.size();
  if (out.n_pairs <= kWilcoxonExactMax) {
    out.method = WilcoxonMethod::exact;
    out.p_value = wilcoxon_exact_pvalue(ranks, out.statistic);
  } else {
    out.method = WilcoxonMethod::normal_approx;
    out.p_value = wilcoxon_normal_pvalue(ranks, out.statistic);
  }
  return out;
}

}  // namespace scalenet
