#include "scalenet/experiments.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "scalenet/parallel.hpp"
#include "scalenet/random.hpp"

namespace scalenet {

std::vector<ScaleColumn> default_scale_columns() {
  return {{"A", {"A"}},         {"A^T", {"T"}},        {"A+A^T", {"A", "T"}},
          {"AA^T", {"AT"}},     {"A^TA", {"TA"}},      {"AA^T+A^TA", {"AT", "TA"}},
          {"AA", {"AA"}},       {"A^TA^T", {"TT"}},    {"AA+A^TA^T", {"AA", "TT"}},
          {"None", {}}};
}

const ScaleColumnResult& ScaleReport::column(const std::string& name) const {
  for (const auto& c : columns) {
    if (c.name == name) return c;
  }
  throw std::out_of_range("no column named " + name);
}

namespace {

nlohmann::ordered_json cell_json(const ScaleCell& cell) {
  return {{"test_acc", cell.test_acc}, {"mean", cell.mean}, {"std", cell.std}};
}

ScaleCell make_cell(std::vector<double> accs) {
  ScaleCell cell;
  std::tie(cell.mean, cell.std) = mean_std(accs);
  cell.test_acc = std::move(accs);
  return cell;
}

}  // namespace

nlohmann::ordered_json ScaleReport::to_json() const {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& c : columns) {
    nlohmann::ordered_json entry{{"column", c.name}, {"plain", cell_json(c.plain)}};
    if (c.shared_removed) entry["shared_removed"] = cell_json(*c.shared_removed);
    doc.push_back(std::move(entry));
  }
  return doc;
}

std::string ScaleReport::to_tsv() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "\t" : "") << columns[i].name;
  out << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const auto& c = columns[i];
    out << (i ? "\t" : "") << format_mean_std(c.plain.mean, c.plain.std);
    if (c.shared_removed) {
      out << " (" << format_mean_std(c.shared_removed->mean, c.shared_removed->std) << ")";
    }
  }
  out << '\n';
  return out.str();
}

ScaleReport per_scale_report(const DirectedGraph& g, const SplitSet& splits,
                             const std::vector<ScaleColumn>& columns,
                             const ScaleReportOptions& options) {
  if (splits.splits.empty()) throw std::invalid_argument("per_scale_report: no splits");
  splits.validate(g.num_nodes());
  const std::size_t n = g.num_nodes();
  const SparseMatrix& a = g.adjacency;
  const SparseMatrix at = transpose(a);
  const SparseMatrix bases[] = {a, at};

  // Variants: (column index, shared-edge removal). Built up front so the
  // training tasks only read them.
  struct Variant {
    std::size_t column;
    bool removed;
    std::vector<std::pair<std::string, SparseMatrix>> patterns;
    bool zero_features;
  };
  std::vector<Variant> variants;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto& col = columns[c];
    std::vector<std::pair<std::string, SparseMatrix>> plain, removed;
    bool second_scale = !col.words.empty();
    for (const auto& word : col.words) {
      ScaleSpec spec = ScaleSpec::parse(word);
      second_scale = second_scale && spec.scale() >= 2;
      const SparseMatrix raw = build_scaled_adjacency(a, spec).matrix;
      const SelfLoopMode mode =
          spec.scale() == 1 ? options.model.selfloop_first : options.model.selfloop_second;
      plain.emplace_back(word, apply_selfloop_mode(raw, mode));
      if (spec.scale() >= 2) {
        removed.emplace_back(word, apply_selfloop_mode(remove_shared_edges(raw, bases), mode));
      }
    }
    if (col.words.empty()) {
      variants.push_back({c, false, {{"none", SparseMatrix::empty(n, n)}}, true});
      continue;
    }
    variants.push_back({c, false, std::move(plain), false});
    if (options.remove_shared && second_scale) {
      variants.push_back({c, true, std::move(removed), false});
    }
  }

  const Matrix zeros(n, g.num_features(), 0.0);
  const std::size_t n_splits = splits.splits.size();
  std::vector<double> acc(variants.size() * n_splits, 0.0);
  parallel_for(acc.size(), options.threads, [&](std::size_t task) {
    const Variant& v = variants[task / n_splits];
    const std::size_t s = task % n_splits;
    const std::uint64_t seed = derive_seed(options.seed, s);
    auto model = build_channel_model(options.model, v.patterns, ChannelFusion::sum,
                                     g.num_features(), g.num_classes, derive_seed(seed, 1));
    DirectedGraph view{v.zero_features ? SparseMatrix::empty(n, n) : a,
                       v.zero_features ? zeros : g.features, g.labels, g.num_classes};
    TrainHyper h = options.hyper;
    h.seed = seed;
    acc[task] = train(*model, view, splits.splits[s], h).test_acc_at_best_val;
  });

  ScaleReport report;
  for (const auto& col : columns) report.columns.push_back({col.name, {}, std::nullopt});
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    std::vector<double> accs(acc.begin() + static_cast<std::ptrdiff_t>(vi * n_splits),
                             acc.begin() + static_cast<std::ptrdiff_t>((vi + 1) * n_splits));
    auto& out = report.columns[variants[vi].column];
    if (variants[vi].removed) {
      out.shared_removed = make_cell(std::move(accs));
    } else {
      out.plain = make_cell(std::move(accs));
    }
  }
  return report;
}

std::string to_string(JumpingKnowledge jk) {
  switch (jk) {
    case JumpingKnowledge::max: return "max";
    case JumpingKnowledge::cat: return "cat";
    case JumpingKnowledge::none: return "none";
  }
  return "none";
}

JumpingKnowledge parse_jk(const std::string& text) {
  if (text == "max") return JumpingKnowledge::max;
  if (text == "cat") return JumpingKnowledge::cat;
  if (text == "none" || text == "0") return JumpingKnowledge::none;
  throw std::invalid_argument("unknown jumping-knowledge mode: " + text);
}

void apply_jk(ModelConfig& cfg, JumpingKnowledge jk) {
  switch (jk) {
    case JumpingKnowledge::max:
      cfg.comb1 = Comb1::jk_max;
      cfg.comb2 = Comb2::jk_max;
      break;
    case JumpingKnowledge::cat:
      cfg.comb1 = Comb1::jk_cat;
      cfg.comb2 = Comb2::jk_cat;
      break;
    case JumpingKnowledge::none:
      cfg.comb1 = Comb1::add;
      cfg.comb2 = Comb2::last;
      break;
  }
}

std::size_t GridSpace::size() const {
  const std::size_t nb = beta.empty() ? 1 : beta.size();
  const std::size_t ng = gamma.empty() ? 1 : gamma.size();
  return layers.size() * lr.size() * dropout.size() * bn.size() * relu.size() * jk.size() *
         selfloop.size() * alpha.size() * nb * ng;
}

std::vector<ModelConfig> GridSpace::enumerate() const {
  const std::vector<double> betas = beta.empty() ? std::vector<double>{base.beta} : beta;
  const std::vector<double> gammas = gamma.empty() ? std::vector<double>{base.gamma} : gamma;
  std::vector<ModelConfig> out;
  out.reserve(size());
  for (auto l : layers)
    for (auto r : lr)
      for (auto d : dropout)
        for (bool b : bn)
          for (bool u : relu)
            for (auto j : jk)
              for (auto s : selfloop)
                for (auto a : alpha)
                  for (auto be : betas)
                    for (auto ga : gammas) {
                      ModelConfig cfg = base;
                      cfg.layers = l;
                      cfg.lr = r;
                      cfg.dropout = d;
                      cfg.use_bn = b;
                      cfg.use_relu = u;
                      apply_jk(cfg, j);
                      cfg.selfloop_first = s;
                      cfg.selfloop_second = s;
                      cfg.alpha = a;
                      cfg.beta = be;
                      cfg.gamma = ga;
                      out.push_back(cfg);
                    }
  return out;
}

nlohmann::ordered_json GridSpace::to_json() const {
  nlohmann::ordered_json doc;
  doc["base"] = base.to_json();
  doc["layers"] = layers;
  doc["lr"] = lr;
  doc["dropout"] = dropout;
  doc["bn"] = bn;
  doc["relu"] = relu;
  auto& j = doc["jk"] = nlohmann::ordered_json::array();
  for (auto v : jk) j.push_back(to_string(v));
  auto& s = doc["selfloop"] = nlohmann::ordered_json::array();
  for (auto v : selfloop) s.push_back(to_string(v));
  doc["alpha"] = alpha;
  doc["beta"] = beta;
  doc["gamma"] = gamma;
  return doc;
}

GridSpace GridSpace::from_json(const nlohmann::json& doc, GridSpace g) {
  static const char* known[] = {"base", "layers", "lr",       "dropout", "bn",   "relu",
                                "jk",   "selfloop", "alpha", "beta",    "gamma"};
  if (!doc.is_object()) throw std::invalid_argument("grid space must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw std::invalid_argument("unknown grid key: " + key);
    }
  }
  try {
    if (doc.contains("base")) g.base = ModelConfig::from_json(doc["base"], g.base);
    if (doc.contains("layers")) g.layers = doc["layers"].get<std::vector<std::size_t>>();
    if (doc.contains("lr")) g.lr = doc["lr"].get<std::vector<double>>();
    if (doc.contains("dropout")) g.dropout = doc["dropout"].get<std::vector<double>>();
    if (doc.contains("bn")) g.bn = doc["bn"].get<std::vector<bool>>();
    if (doc.contains("relu")) g.relu = doc["relu"].get<std::vector<bool>>();
    if (doc.contains("jk")) {
      g.jk.clear();
      for (const auto& v : doc["jk"]) g.jk.push_back(parse_jk(v.get<std::string>()));
    }
    if (doc.contains("selfloop")) {
      g.selfloop.clear();
      for (const auto& v : doc["selfloop"]) {
        g.selfloop.push_back(parse_selfloop_mode(v.get<std::string>()));
      }
    }
    if (doc.contains("alpha")) g.alpha = doc["alpha"].get<std::vector<double>>();
    if (doc.contains("beta")) g.beta = doc["beta"].get<std::vector<double>>();
    if (doc.contains("gamma")) g.gamma = doc["gamma"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("grid space: ") + e.what());
  }
  return g;
}

GridSpace GridSpace::from_json(const nlohmann::json& doc) { return from_json(doc, GridSpace{}); }

std::uint64_t config_seed(const ModelConfig& cfg, std::uint64_t base_seed) {
  return splitmix64(hash_string(cfg.canonical()) ^ splitmix64(base_seed));
}

bool grid_entry_better(const GridEntry& a, const GridEntry& b) {
  if (a.mean_val != b.mean_val) return a.mean_val > b.mean_val;
  if (a.config.layers != b.config.layers) return a.config.layers < b.config.layers;
  return a.config.lr < b.config.lr;
}

nlohmann::ordered_json GridResult::to_json() const {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& e = ranked[i];
    doc.push_back({{"rank", i + 1},
                   {"config", e.config.to_json()},
                   {"seed", e.seed},
                   {"val_acc", e.val_acc},
                   {"test_acc", e.test_acc},
                   {"mean_val", e.mean_val},
                   {"mean", e.mean_test},
                   {"std", e.std_test}});
  }
  return doc;
}

std::string GridResult::leaderboard_tsv() const {
  std::ostringstream out;
  out << "rank\tmean_val\tmean_test\tstd_test\tsummary\tconfig\n";
  char buf[128];
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& e = ranked[i];
    std::snprintf(buf, sizeof(buf), "%zu\t%.6f\t%.6f\t%.6f\t", i + 1, e.mean_val, e.mean_test,
                  e.std_test);
    out << buf << format_mean_std(e.mean_test, e.std_test) << '\t' << e.config.canonical() << '\n';
  }
  return out.str();
}

GridResult grid_search(const GridSpace& space, const DirectedGraph& g, const SplitSet& splits,
                       const TrainHyper& hyper, std::uint64_t base_seed, std::size_t threads) {
  if (space.size() == 0) throw std::invalid_argument("grid_search: empty search space");
  return grid_search(space.enumerate(), g, splits, hyper, base_seed, threads);
}

GridResult grid_search(const std::vector<ModelConfig>& configs, const DirectedGraph& g,
                       const SplitSet& splits, const TrainHyper& hyper, std::uint64_t base_seed,
                       std::size_t threads) {
  if (configs.empty()) throw std::invalid_argument("grid_search: empty search space");
  if (splits.splits.empty()) throw std::invalid_argument("grid_search: no splits");
  splits.validate(g.num_nodes());
  for (const auto& cfg : configs) cfg.validate();
  const ScaleSet scales = ScaleSet::compute(g.adjacency);
  const std::size_t n_splits = splits.splits.size();

  std::vector<GridEntry> entries(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    entries[i].config = configs[i];
    entries[i].seed = config_seed(configs[i], base_seed);
    entries[i].val_acc.assign(n_splits, 0.0);
    entries[i].test_acc.assign(n_splits, 0.0);
  }
  parallel_for(configs.size() * n_splits, threads, [&](std::size_t task) {
    GridEntry& e = entries[task / n_splits];
    const std::size_t s = task % n_splits;
    const std::uint64_t seed = derive_seed(e.seed, s);
    auto model = build_model(e.config, g, derive_seed(seed, 1), &scales);
    TrainHyper h = hyper;
    h.seed = seed;
    const TrainResult r = train(*model, g, splits.splits[s], h);
    e.val_acc[s] = r.best_val_acc;
    e.test_acc[s] = r.test_acc_at_best_val;
  });
  for (auto& e : entries) {
    e.mean_val = mean_std(e.val_acc).first;
    std::tie(e.mean_test, e.std_test) = mean_std(e.test_acc);
  }
  std::stable_sort(entries.begin(), entries.end(), grid_entry_better);
  return {std::move(entries)};
}

}  // namespace scalenet
