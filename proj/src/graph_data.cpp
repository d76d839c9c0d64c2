#include "scalenet/graph_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "scalenet/error.hpp"
#include "scalenet/random.hpp"

namespace scalenet {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::string trim(const std::string& s) {
  auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double percent(std::size_t count, std::size_t total) {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(total);
}

}  // namespace

void DirectedGraph::validate() const {
  const std::size_t n = labels.size();
  if (adjacency.n_rows() != n || adjacency.n_cols() != n) {
    throw std::invalid_argument("graph: adjacency must be " + std::to_string(n) + "x" +
                                std::to_string(n));
  }
  if (features.rows() != n) {
    throw std::invalid_argument("graph: feature rows (" + std::to_string(features.rows()) +
                                ") differ from node count (" + std::to_string(n) + ")");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw std::invalid_argument("graph: label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(num_classes) + ")");
    }
  }
}

void SplitSet::validate(std::size_t num_nodes) const {
  for (std::size_t s = 0; s < splits.size(); ++s) {
    const Split& split = splits[s];
    const std::string where = "split " + std::to_string(s);
    if (split.train.empty()) throw DataError(where + ": empty training set");
    std::vector<int> owner(num_nodes, -1);
    auto mark = [&](const std::vector<std::size_t>& idx, int tag, const char* name) {
      for (std::size_t v : idx) {
        if (v >= num_nodes) {
          throw DataError(where + ": " + name + " index " + std::to_string(v) +
                          " out of range for " + std::to_string(num_nodes) + " nodes");
        }
        if (owner[v] != -1) {
          throw DataError(where + ": node " + std::to_string(v) + " appears twice");
        }
        owner[v] = tag;
      }
    };
    mark(split.train, 0, "train");
    mark(split.val, 1, "val");
    mark(split.test, 2, "test");
  }
}

DatasetPaths DatasetPaths::in_directory(const std::filesystem::path& dir) {
  return {dir / "edges.tsv", dir / "features.csv", dir / "labels.txt", dir / "splits.json"};
}

std::vector<double> read_features_csv(std::istream& in, std::size_t* n_rows,
                                      std::size_t* n_cols) {
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::size_t row_cols = 0;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      cell = trim(cell);
      char* end = nullptr;
      double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v)) {
        throw DataError("features", line_no, "bad number '" + cell + "'");
      }
      values.push_back(v);
      ++row_cols;
    }
    if (rows == 0) {
      cols = row_cols;
    } else if (row_cols != cols) {
      throw DataError("features", line_no,
                      "expected " + std::to_string(cols) + " columns, got " +
                          std::to_string(row_cols));
    }
    ++rows;
  }
  *n_rows = rows;
  *n_cols = cols;
  return values;
}

std::vector<int> read_labels(std::istream& in) {
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    char* end = nullptr;
    long v = std::strtol(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size()) throw DataError("labels", line_no, "bad label '" + t + "'");
    if (v < 0) throw DataError("labels", line_no, "negative label");
    labels.push_back(static_cast<int>(v));
  }
  return labels;
}

SplitSet read_splits_json(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("splits: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("splits") || !doc["splits"].is_array()) {
    throw DataError("splits: expected {\"splits\": [...]}");
  }
  SplitSet out;
  for (const auto& entry : doc["splits"]) {
    Split split;
    auto read = [&](const char* key, std::vector<std::size_t>& dst) {
      if (!entry.contains(key)) return;
      for (const auto& v : entry[key]) {
        if (!v.is_number_integer() || v.get<long long>() < 0) {
          throw DataError(std::string("splits: non-index value in '") + key + "'");
        }
        dst.push_back(v.get<std::size_t>());
      }
    };
    read("train", split.train);
    read("val", split.val);
    read("test", split.test);
    out.splits.push_back(std::move(split));
  }
  return out;
}

void write_splits_json(std::ostream& out, const SplitSet& splits) {
  nlohmann::json doc;
  doc["splits"] = nlohmann::json::array();
  for (const auto& s : splits.splits) {
    doc["splits"].push_back({{"train", s.train}, {"val", s.val}, {"test", s.test}});
  }
  out << doc.dump() << '\n';
}

Dataset load_dataset(const DatasetPaths& paths) {
  Dataset data;
  DirectedGraph& g = data.graph;
  {
    auto in = open_input(paths.labels);
    g.labels = read_labels(in);
  }
  const std::size_t n = g.labels.size();
  g.num_classes = n == 0 ? 0 : static_cast<std::size_t>(*std::max_element(g.labels.begin(), g.labels.end())) + 1;
  {
    auto in = open_input(paths.features);
    std::size_t rows = 0, cols = 0;
    auto values = read_features_csv(in, &rows, &cols);
    if (rows != n) {
      throw DataError("features: " + std::to_string(rows) + " rows for " + std::to_string(n) +
                      " labelled nodes");
    }
    g.features = Matrix(rows, cols, std::move(values));
  }
  {
    auto in = open_input(paths.edges);
    auto edges = read_edge_list(in);
    for (std::size_t k = 0; k < edges.size(); ++k) {
      if (edges[k].first >= n || edges[k].second >= n) {
        throw DataError("edges: edge (" + std::to_string(edges[k].first) + ", " +
                        std::to_string(edges[k].second) + ") references a node >= " +
                        std::to_string(n));
      }
    }
    g.adjacency = SparseMatrix::from_edges(n, edges);
  }
  {
    auto in = open_input(paths.splits);
    data.splits = read_splits_json(in);
    data.splits.validate(n);
  }
  g.validate();
  return data;
}

void dump_dataset(const Dataset& data, const DatasetPaths& paths) {
  const DirectedGraph& g = data.graph;
  {
    auto out = open_output(paths.edges);
    write_edge_list(out, g.adjacency);
  }
  {
    auto out = open_output(paths.features);
    out.precision(17);
    for (std::size_t r = 0; r < g.features.rows(); ++r) {
      auto row = g.features.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out << ',';
        out << row[c];
      }
      out << '\n';
    }
  }
  {
    auto out = open_output(paths.labels);
    for (int y : g.labels) out << y << '\n';
  }
  {
    auto out = open_output(paths.splits);
    write_splits_json(out, data.splits);
  }
}

NeighborLabelCounts neighbor_label_table(const DirectedGraph& g, Direction direction) {
  const SparseMatrix adj = direction == Direction::out ? g.adjacency : transpose(g.adjacency);
  NeighborLabelCounts counts;
  std::vector<std::size_t> tally(g.num_classes, 0);
  for (std::size_t v = 0; v < adj.n_rows(); ++v) {
    auto nbrs = adj.row_cols(v);
    if (nbrs.empty()) {
      ++counts.no_neighbor;
      continue;
    }
    std::fill(tally.begin(), tally.end(), 0);
    for (Index u : nbrs) ++tally[static_cast<std::size_t>(g.labels[u])];
    std::size_t best = *std::max_element(tally.begin(), tally.end());
    std::size_t winners = static_cast<std::size_t>(std::count(tally.begin(), tally.end(), best));
    bool homo = winners == 1 && tally[static_cast<std::size_t>(g.labels[v])] == best;
    ++(homo ? counts.homophilic : counts.heterophilic);
  }
  return counts;
}

StatsReport compute_stats(const DirectedGraph& g, const Split& split) {
  if (split.train.empty()) throw std::invalid_argument("compute_stats: empty training split");
  StatsReport r;
  r.num_nodes = g.num_nodes();
  r.num_edges = g.adjacency.nnz();
  r.num_features = g.num_features();
  r.num_classes = g.num_classes;

  std::vector<std::size_t> class_count(g.num_classes, 0);
  for (std::size_t v : split.train) {
    if (v >= g.num_nodes()) throw std::invalid_argument("compute_stats: split index out of range");
    ++class_count[static_cast<std::size_t>(g.labels[v])];
  }
  std::size_t largest = 0, smallest = 0;
  for (std::size_t c : class_count) {
    if (c == 0) continue;
    largest = std::max(largest, c);
    smallest = smallest == 0 ? c : std::min(smallest, c);
  }
  r.imbalance_ratio = static_cast<double>(largest) / static_cast<double>(smallest);

  r.out_table = neighbor_label_table(g, Direction::out);
  r.in_table = neighbor_label_table(g, Direction::in);
  r.pct_no_out = percent(r.out_table.no_neighbor, r.num_nodes);
  r.pct_no_in = percent(r.in_table.no_neighbor, r.num_nodes);
  r.pct_out_homo = percent(r.out_table.homophilic, r.num_nodes);
  r.pct_in_homo = percent(r.in_table.homophilic, r.num_nodes);
  return r;
}

std::string stats_to_json(const StatsReport& r) {
  auto table = [](const NeighborLabelCounts& t) {
    return nlohmann::ordered_json{
        {"homo", t.homophilic}, {"hetero", t.heterophilic}, {"no_neighbor", t.no_neighbor}};
  };
  nlohmann::ordered_json doc{{"num_nodes", r.num_nodes},
                             {"num_edges", r.num_edges},
                             {"num_features", r.num_features},
                             {"num_classes", r.num_classes},
                             {"imbalance_ratio", r.imbalance_ratio},
                             {"pct_no_in", r.pct_no_in},
                             {"pct_in_homo", r.pct_in_homo},
                             {"pct_no_out", r.pct_no_out},
                             {"pct_out_homo", r.pct_out_homo},
                             {"table_A", table(r.out_table)},
                             {"table_AT", table(r.in_table)}};
  return doc.dump(2);
}

std::vector<std::size_t> dsbm_class_sizes(std::size_t num_nodes, std::size_t num_classes) {
  std::vector<std::size_t> sizes(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    sizes[c] = (c + 1) * num_nodes / num_classes - c * num_nodes / num_classes;
  }
  return sizes;
}

DirectedGraph generate_dsbm(const DsbmParams& p) {
  auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!in_unit(p.p_in) || !in_unit(p.p_out) || !in_unit(p.profile.receiver_fraction)) {
    throw std::invalid_argument("generate_dsbm: probabilities must lie in [0, 1]");
  }
  if (p.num_classes == 0 || p.num_nodes < p.num_classes) {
    throw std::invalid_argument("generate_dsbm: need num_nodes >= num_classes >= 1");
  }
  if (p.feature_noise < 0.0) throw std::invalid_argument("generate_dsbm: negative noise");

  const std::size_t n = p.num_nodes, C = p.num_classes;
  DirectedGraph g;
  g.num_classes = C;
  g.labels.resize(n);
  for (std::size_t v = 0; v < n; ++v) g.labels[v] = static_cast<int>(v * C / n);

  Rng rng(p.seed);
  // Receivers: the first ceil(fraction * size) members of each class after a
  // seeded shuffle.
  std::vector<bool> receiver(n, false);
  {
    std::vector<std::size_t> start(C + 1, 0);
    for (std::size_t c = 0; c < C; ++c) start[c + 1] = start[c] + dsbm_class_sizes(n, C)[c];
    for (std::size_t c = 0; c < C; ++c) {
      std::vector<std::size_t> members(start[c + 1] - start[c]);
      std::iota(members.begin(), members.end(), start[c]);
      std::shuffle(members.begin(), members.end(), rng);
      auto k = static_cast<std::size_t>(
          std::ceil(p.profile.receiver_fraction * static_cast<double>(members.size())));
      for (std::size_t i = 0; i < std::min(k, members.size()); ++i) receiver[members[i]] = true;
    }
  }

  std::bernoulli_distribution on_pattern(p.p_in), off_pattern(p.p_out);
  std::vector<std::pair<Index, Index>> edges;
  for (std::size_t u = 0; u < n; ++u) {
    const auto target = (static_cast<std::size_t>(g.labels[u]) + p.profile.class_offset) % C;
    for (std::size_t v = 0; v < n; ++v) {
      if (u == v || !receiver[v]) continue;
      bool hit = static_cast<std::size_t>(g.labels[v]) == target ? on_pattern(rng) : off_pattern(rng);
      if (hit) edges.emplace_back(static_cast<Index>(u), static_cast<Index>(v));
    }
  }
  g.adjacency = SparseMatrix::from_edges(n, edges);

  std::normal_distribution<double> noise(0.0, 1.0);
  g.features = Matrix(n, C, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t c = 0; c < C; ++c) {
      double base = static_cast<std::size_t>(g.labels[v]) == c ? 1.0 : 0.0;
      g.features(v, c) = base + p.feature_noise * noise(rng);
    }
  }
  return g;
}

SplitSet make_random_splits(const std::vector<int>& labels, std::size_t num_classes,
                            std::size_t count, double train_fraction, double val_fraction,
                            std::uint64_t seed) {
  if (train_fraction <= 0.0 || val_fraction < 0.0 || train_fraction + val_fraction >= 1.0) {
    throw std::invalid_argument("make_random_splits: need 0 < train, 0 <= val, train + val < 1");
  }
  std::vector<std::vector<std::size_t>> members(num_classes);
  for (std::size_t v = 0; v < labels.size(); ++v) {
    members[static_cast<std::size_t>(labels[v])].push_back(v);
  }
  SplitSet out;
  for (std::size_t s = 0; s < count; ++s) {
    Rng rng(derive_seed(seed, s));
    Split split;
    for (auto group : members) {
      std::shuffle(group.begin(), group.end(), rng);
      const double size = static_cast<double>(group.size());
      auto n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(train_fraction * size)));
      auto n_val = static_cast<std::size_t>(std::lround(val_fraction * size));
      n_train = std::min(n_train, group.size());
      n_val = std::min(n_val, group.size() - n_train);
      split.train.insert(split.train.end(), group.begin(), group.begin() + static_cast<long>(n_train));
      split.val.insert(split.val.end(), group.begin() + static_cast<long>(n_train),
                       group.begin() + static_cast<long>(n_train + n_val));
      split.test.insert(split.test.end(), group.begin() + static_cast<long>(n_train + n_val), group.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());
    std::sort(split.test.begin(), split.test.end());
    out.splits.push_back(std::move(split));
  }
  return out;
}

SplitSet make_imbalanced_split(const DirectedGraph& g, const SplitSet& base, double ratio,
                               std::uint64_t seed) {
  if (!(ratio >= 1.0)) throw std::invalid_argument("make_imbalanced_split: ratio must be >= 1");
  SplitSet out;
  for (std::size_t s = 0; s < base.splits.size(); ++s) {
    const Split& split = base.splits[s];
    std::vector<std::vector<std::size_t>> by_class(g.num_classes);
    for (std::size_t v : split.train) by_class[static_cast<std::size_t>(g.labels[v])].push_back(v);

    std::size_t largest_class = 0, smallest_class = 0;
    bool first = true;
    for (std::size_t c = 0; c < g.num_classes; ++c) {
      if (by_class[c].empty()) continue;
      if (first || by_class[c].size() > by_class[largest_class].size()) largest_class = c;
      // Ties go to the highest label so equal-sized classes still get
      // distinct largest and smallest picks.
      if (first || by_class[c].size() <= by_class[smallest_class].size()) smallest_class = c;
      first = false;
    }
    const std::size_t max_avail = by_class[largest_class].size();
    const std::size_t min_avail = by_class[smallest_class].size();
    if (ratio > static_cast<double>(max_avail)) {
      throw std::invalid_argument("make_imbalanced_split: ratio " + std::to_string(ratio) +
                                  " exceeds the largest training class (" +
                                  std::to_string(max_avail) + " nodes)");
    }
    // Keep the largest class as big as the ratio allows, shrink the
    // scarcest class to largest / ratio, and cap every other class at the
    // largest target.
    const std::size_t small_target = std::max<std::size_t>(
        1, std::min(min_avail,
                    static_cast<std::size_t>(std::floor(static_cast<double>(max_avail) / ratio))));
    const std::size_t large_target = std::min(
        max_avail,
        static_cast<std::size_t>(std::floor(static_cast<double>(small_target) * ratio)));

    Rng rng(derive_seed(seed, s));
    Split result;
    for (std::size_t c = 0; c < g.num_classes; ++c) {
      auto group = by_class[c];
      if (group.empty()) continue;
      std::shuffle(group.begin(), group.end(), rng);
      std::size_t keep = c == smallest_class && c != largest_class ? small_target : std::min(group.size(), large_target);
      result.train.insert(result.train.end(), group.begin(), group.begin() + static_cast<long>(keep));
    }
    std::sort(result.train.begin(), result.train.end());
    result.val = split.val;
    result.test = split.test;
    out.splits.push_back(std::move(result));
  }
  return out;
}

}  // namespace scalenet
