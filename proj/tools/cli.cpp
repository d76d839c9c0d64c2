#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include "scalenet/error.hpp"
#include "scalenet/experiments.hpp"
#include "scalenet/graph_data.hpp"
#include "scalenet/random.hpp"
#include "scalenet/scales.hpp"
#include "scalenet/training.hpp"
#include "scalenet/wilcoxon.hpp"

namespace scalenet::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything a subcommand needs. Serialized verbatim as the run manifest.
struct Run {
  std::string command;
  std::string edges, features, labels, splits;
  ModelConfig model;
  TrainHyper hyper;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string output_dir;
  ojson options = ojson::object();

  ojson to_manifest() const {
    ojson m;
    m["tool"] = "scalenet";
    m["version"] = kToolVersion;
    m["command"] = command;
    m["dataset"] = {{"edges", edges}, {"features", features}, {"labels", labels}, {"splits", splits}};
    m["config"] = model.to_json();
    m["hyper"] = hyper.to_json();
    m["seed"] = seed;
    m["threads"] = threads;
    m["output_dir"] = output_dir;
    m["options"] = options;
    return m;
  }

  static Run from_manifest(const json& m) {
    Run r;
    r.command = m.at("command").get<std::string>();
    const auto& d = m.at("dataset");
    r.edges = d.at("edges").get<std::string>();
    r.features = d.at("features").get<std::string>();
    r.labels = d.at("labels").get<std::string>();
    r.splits = d.at("splits").get<std::string>();
    r.model = ModelConfig::from_json(m.at("config"));
    r.hyper = TrainHyper::from_json(m.at("hyper"));
    r.seed = m.at("seed").get<std::uint64_t>();
    r.threads = m.at("threads").get<std::size_t>();
    r.output_dir = m.at("output_dir").get<std::string>();
    r.options = ojson::parse(m.at("options").dump());
    return r;
  }
};

ojson default_options(const std::string& command) {
  if (command == "synth") {
    return {{"nodes", 300},         {"classes", 5},           {"p_in", 0.05},
            {"p_out", 0.005},       {"class_offset", 0},      {"receiver_fraction", 1.0},
            {"feature_noise", 1.0}, {"num_splits", 10},       {"train_fraction", 0.6},
            {"val_fraction", 0.2}};
  }
  if (command == "stats") return {{"split", 0}};
  if (command == "scale") {
    return {{"word", "A"},      {"selfloops", "keep"}, {"nodes", 0},      {"proximity", 0},
            {"combine", "intersect"}, {"prune", true}, {"remove_shared", false}, {"out", ""}};
  }
  if (command == "train") return {{"split", 0}, {"all_splits", false}};
  if (command == "report-scales") return {{"num_splits", 1}, {"remove_shared", true}};
  if (command == "gridsearch") return {{"num_splits", 0}, {"grid", json::object()}};
  if (command == "compare") return {{"a", ""}, {"b", ""}};
  return ojson::object();
}

std::string absolute_path(const std::string& p) {
  if (p.empty()) return p;
  return fs::absolute(fs::path(p)).lexically_normal().string();
}

json read_json_file(const std::string& path, bool usage) {
  std::ifstream in(path);
  if (!in) {
    if (usage) throw UsageError("cannot open " + path);
    throw DataError("cannot open " + path);
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    if (usage) throw UsageError(path + ": " + e.what());
    throw DataError(path + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

// Registers flags whose values are applied to a Run only when given, so
// flags override the config file which overrides the defaults.
class Binder {
 public:
  explicit Binder(CLI::App* app) : app_(app) {}

  template <class T, class F>
  CLI::Option* add(const std::string& name, const std::string& desc, F apply) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app_->add_option(name, *value, desc);
    appliers_.push_back([opt, value, apply](Run& r) {
      if (opt->count() > 0) apply(r, *value);
    });
    return opt;
  }

  template <class T>
  CLI::Option* option(const std::string& name, const std::string& key, const std::string& desc) {
    return add<T>(name, desc, [key](Run& r, const T& v) { r.options[key] = v; });
  }

  void apply(Run& r) const {
    for (const auto& f : appliers_) f(r);
  }

  CLI::App* app() const { return app_; }

 private:
  CLI::App* app_;
  std::vector<std::function<void(Run&)>> appliers_;
};

void add_common(Binder& b) {
  b.add<std::uint64_t>("--seed", "Base random seed", [](Run& r, auto v) { r.seed = v; });
  b.add<std::string>("--out-dir", "Directory for the manifest and output files",
                     [](Run& r, const std::string& v) { r.output_dir = v; });
}

void add_dataset(Binder& b) {
  b.add<std::string>("--data", "Dataset directory (edges.tsv, features.csv, labels.txt, splits.json)",
                     [](Run& r, const std::string& v) {
                       auto p = DatasetPaths::in_directory(v);
                       if (r.edges.empty()) r.edges = p.edges.string();
                       if (r.features.empty()) r.features = p.features.string();
                       if (r.labels.empty()) r.labels = p.labels.string();
                       if (r.splits.empty()) r.splits = p.splits.string();
                     });
  b.add<std::string>("--edges", "Edge list file", [](Run& r, const std::string& v) { r.edges = v; });
  b.add<std::string>("--features", "Feature CSV file", [](Run& r, const std::string& v) { r.features = v; });
  b.add<std::string>("--labels", "Label file", [](Run& r, const std::string& v) { r.labels = v; });
  b.add<std::string>("--splits", "Splits JSON file", [](Run& r, const std::string& v) { r.splits = v; });
}

void add_model(Binder& b) {
  b.add<std::string>("--family", "scalenet|one_ig|one_igi2|one_igu2|one_igu3|one_ym|gcn|mlp|dirgnn_lite",
                     [](Run& r, const std::string& v) { r.model.family = parse_family(v); });
  b.add<double>("--alpha", "Direction parameter for (A, A^T)", [](Run& r, double v) { r.model.alpha = v; });
  b.add<double>("--beta", "Direction parameter for (AA^T, A^TA)", [](Run& r, double v) { r.model.beta = v; });
  b.add<double>("--gamma", "Direction parameter for (AA, A^TA^T)", [](Run& r, double v) { r.model.gamma = v; });
  b.add<std::size_t>("--layers", "Number of layers (1-5)", [](Run& r, std::size_t v) { r.model.layers = v; });
  b.add<std::size_t>("--hidden", "Hidden width", [](Run& r, std::size_t v) { r.model.hidden = v; });
  b.add<std::string>("--comb1", "jk_max|jk_cat|add",
                     [](Run& r, const std::string& v) { r.model.comb1 = parse_comb1(v); });
  b.add<std::string>("--comb2", "jk_max|jk_cat|last",
                     [](Run& r, const std::string& v) { r.model.comb2 = parse_comb2(v); });
  b.add<std::string>("--selfloop-first", "add|remove|keep for A and A^T",
                     [](Run& r, const std::string& v) { r.model.selfloop_first = parse_selfloop_mode(v); });
  b.add<std::string>("--selfloop-second", "add|remove|keep for 2nd-scale matrices",
                     [](Run& r, const std::string& v) { r.model.selfloop_second = parse_selfloop_mode(v); });
  b.add<bool>("--bn", "Batch norm (true/false)", [](Run& r, bool v) { r.model.use_bn = v; });
  b.add<bool>("--relu", "ReLU between layers (true/false)", [](Run& r, bool v) { r.model.use_relu = v; });
  b.add<double>("--dropout", "Dropout probability", [](Run& r, double v) { r.model.dropout = v; });
  b.add<double>("--lr", "Learning rate", [](Run& r, double v) { r.model.lr = v; });
}

void add_hyper(Binder& b) {
  b.add<std::size_t>("--max-epochs", "Epoch cap (at most 1500)", [](Run& r, std::size_t v) { r.hyper.max_epochs = v; });
  b.add<std::size_t>("--patience", "Early-stopping patience", [](Run& r, std::size_t v) { r.hyper.patience = v; });
  b.add<std::size_t>("--lr-patience", "Plateau scheduler patience",
                     [](Run& r, std::size_t v) { r.hyper.lr_patience = v; });
  b.add<double>("--lr-factor", "Plateau scheduler factor", [](Run& r, double v) { r.hyper.lr_factor = v; });
  b.add<double>("--min-lr", "Learning-rate floor", [](Run& r, double v) { r.hyper.min_lr = v; });
  b.add<std::size_t>("--threads", "Worker threads", [](Run& r, std::size_t v) { r.threads = v; });
}

// Config file keys: model, hyper, seed, threads, options.
void merge_config_file(Run& r, const std::string& path) {
  const json doc = read_json_file(path, true);
  if (!doc.is_object()) throw UsageError(path + ": expected a JSON object");
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "model") {
        r.model = ModelConfig::from_json(value, r.model);
      } else if (key == "hyper") {
        r.hyper = TrainHyper::from_json(value, r.hyper);
      } else if (key == "seed") {
        r.seed = value.get<std::uint64_t>();
      } else if (key == "threads") {
        r.threads = value.get<std::size_t>();
      } else if (key == "options") {
        for (const auto& [k, v] : value.items()) {
          if (!r.options.contains(k)) throw UsageError(path + ": unknown option '" + k + "'");
          r.options[k] = v;
        }
      } else {
        throw UsageError(path + ": unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

struct Subcommand {
  CLI::App* app = nullptr;
  std::unique_ptr<Binder> binder;
  std::shared_ptr<std::string> config;
};

Subcommand make_subcommand(CLI::App& root, const std::string& name, const std::string& desc,
                           bool dataset, bool model) {
  Subcommand s;
  s.app = root.add_subcommand(name, desc);
  s.binder = std::make_unique<Binder>(s.app);
  s.config = std::make_shared<std::string>();
  s.app->add_option("--config", *s.config, "JSON config file (flags take precedence)");
  add_common(*s.binder);
  if (dataset) add_dataset(*s.binder);
  if (model) {
    add_model(*s.binder);
    add_hyper(*s.binder);
  }
  return s;
}

// ---- Execution -------------------------------------------------------------

DatasetPaths dataset_paths(const Run& r) {
  if (r.edges.empty() || r.features.empty() || r.labels.empty() || r.splits.empty()) {
    throw UsageError(r.command + ": dataset required (--data DIR or the four file flags)");
  }
  return {r.edges, r.features, r.labels, r.splits};
}

SplitSet first_splits(const SplitSet& all, std::size_t count) {
  if (count == 0 || count >= all.splits.size()) return all;
  SplitSet s;
  s.splits.assign(all.splits.begin(), all.splits.begin() + static_cast<std::ptrdiff_t>(count));
  return s;
}

std::size_t split_index(const Run& r, const SplitSet& splits) {
  const auto i = r.options.at("split").get<std::size_t>();
  if (i >= splits.splits.size()) {
    throw UsageError("--split " + std::to_string(i) + " out of range (" +
                     std::to_string(splits.splits.size()) + " splits)");
  }
  return i;
}

struct Outputs {
  std::ostream& out;
  fs::path dir;  // empty: stdout only

  void emit(const std::string& file, const std::string& text, bool to_stdout = true) const {
    if (to_stdout) out << text;
    if (!dir.empty()) write_text(dir / file, text);
  }
  void save(const std::string& file, const std::string& text) const { emit(file, text, false); }
};

void run_synth(const Run& r, const Outputs& o) {
  if (r.output_dir.empty()) throw UsageError("synth: --out-dir is required");
  const auto& opt = r.options;
  DsbmParams p;
  p.num_nodes = opt.at("nodes").get<std::size_t>();
  p.num_classes = opt.at("classes").get<std::size_t>();
  p.p_in = opt.at("p_in").get<double>();
  p.p_out = opt.at("p_out").get<double>();
  p.profile.class_offset = opt.at("class_offset").get<std::size_t>();
  p.profile.receiver_fraction = opt.at("receiver_fraction").get<double>();
  p.feature_noise = opt.at("feature_noise").get<double>();
  p.seed = r.seed;
  Dataset data;
  data.graph = generate_dsbm(p);
  data.splits = make_random_splits(data.graph.labels, p.num_classes, opt.at("num_splits").get<std::size_t>(),
                                   opt.at("train_fraction").get<double>(),
                                   opt.at("val_fraction").get<double>(), derive_seed(r.seed, 1));
  dump_dataset(data, DatasetPaths::in_directory(r.output_dir));
  ojson summary = {{"nodes", data.graph.num_nodes()},
                   {"edges", data.graph.adjacency.nnz()},
                   {"features", data.graph.num_features()},
                   {"classes", data.graph.num_classes},
                   {"splits", data.splits.splits.size()}};
  o.out << summary.dump() << '\n';
}

void run_stats(const Run& r, const Outputs& o) {
  const Dataset data = load_dataset(dataset_paths(r));
  const auto& split = data.splits.splits[split_index(r, data.splits)];
  o.emit("stats.json", stats_to_json(compute_stats(data.graph, split)) + "\n");
}

void run_scale(const Run& r, const Outputs& o) {
  if (r.edges.empty()) throw UsageError("scale: --edges or --data is required");
  std::ifstream in(r.edges);
  if (!in) throw DataError("cannot open " + r.edges);
  const auto edges = read_edge_list(in);
  const auto& opt = r.options;
  std::size_t n = opt.at("nodes").get<std::size_t>();
  if (n == 0) {
    for (const auto& [u, v] : edges) n = std::max<std::size_t>(n, std::max(u, v) + 1);
  }
  for (const auto& [u, v] : edges) {
    if (u >= n || v >= n) throw DataError(r.edges + ": edge references a node >= " + std::to_string(n));
  }
  const SparseMatrix a = SparseMatrix::from_edges(n, edges);
  const auto k = opt.at("proximity").get<std::size_t>();
  const SelfLoopMode mode = parse_selfloop_mode(opt.at("selfloops").get<std::string>());
  SparseMatrix m;
  if (k > 0) {
    m = apply_selfloop_mode(proximity_matrix(a, k, parse_combine(opt.at("combine").get<std::string>()),
                                          opt.at("prune").get<bool>()),
                         mode);
  } else {
    m = build_scaled_adjacency(a, ScaleSpec::parse(opt.at("word").get<std::string>(), mode)).matrix;
  }
  if (opt.at("remove_shared").get<bool>()) {
    const SparseMatrix bases[] = {a, transpose(a)};
    m = remove_shared_edges(m, bases);
  }
  std::ostringstream text;
  write_matrix_market(text, m);
  const auto target = opt.at("out").get<std::string>();
  if (!target.empty()) write_text(target, text.str());
  o.emit("matrix.mtx", text.str(), target.empty());
}

void run_train(const Run& r, const Outputs& o) {
  const Dataset data = load_dataset(dataset_paths(r));
  ojson result;
  if (r.options.at("all_splits").get<bool>()) {
    result = cross_validate(r.model, data.graph, data.splits, {r.seed}, r.hyper, r.threads).to_json();
  } else {
    const auto& split = data.splits.splits[split_index(r, data.splits)];
    auto model = build_model(r.model, data.graph, derive_seed(r.seed, 1));
    TrainHyper h = r.hyper;
    h.seed = r.seed;
    result = train(*model, data.graph, split, h).to_json();
  }
  o.emit("result.json", result.dump(2) + "\n");
}

void run_report_scales(const Run& r, const Outputs& o) {
  const Dataset data = load_dataset(dataset_paths(r));
  ScaleReportOptions opt;
  opt.model = r.model;
  opt.hyper = r.hyper;
  opt.remove_shared = r.options.at("remove_shared").get<bool>();
  opt.threads = r.threads;
  opt.seed = r.seed;
  const auto splits = first_splits(data.splits, r.options.at("num_splits").get<std::size_t>());
  const ScaleReport report = per_scale_report(data.graph, splits, default_scale_columns(), opt);
  o.emit("report.tsv", report.to_tsv());
  o.save("report.json", report.to_json().dump(2) + "\n");
}

void run_gridsearch(const Run& r, const Outputs& o) {
  const Dataset data = load_dataset(dataset_paths(r));
  const GridSpace space = GridSpace::from_json(json::parse(r.options.at("grid").dump()));
  const auto splits = first_splits(data.splits, r.options.at("num_splits").get<std::size_t>());
  const GridResult result = grid_search(space, data.graph, splits, r.hyper, r.seed, r.threads);
  o.emit("leaderboard.tsv", result.leaderboard_tsv());
  o.save("results.json", result.to_json().dump(2) + "\n");
}

// A score file is either whitespace-separated numbers or JSON: an array, an
// object with "test_acc", or a cross-validation result with "runs".
std::vector<double> read_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  std::vector<double> xs;
  if (first != std::string::npos && (text[first] == '[' || text[first] == '{')) {
    try {
      const json doc = json::parse(text);
      if (doc.is_array()) {
        xs = doc.get<std::vector<double>>();
      } else if (doc.contains("test_acc")) {
        xs = doc.at("test_acc").get<std::vector<double>>();
      } else if (doc.contains("runs")) {
        for (const auto& run : doc.at("runs")) xs.push_back(run.at("test_acc_at_best_val").get<double>());
      } else {
        throw DataError(path + ": no scores found");
      }
    } catch (const json::exception& e) {
      throw DataError(path + ": " + e.what());
    }
    return xs;
  }
  std::istringstream nums(text);
  std::string token;
  std::size_t line = 0;
  while (nums >> token) {
    ++line;
    try {
      std::size_t used = 0;
      xs.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw DataError(path + ": value " + std::to_string(line) + " is not a number: '" + token + "'");
    }
  }
  return xs;
}

void run_compare(const Run& r, const Outputs& o) {
  const auto a = r.options.at("a").get<std::string>();
  const auto b = r.options.at("b").get<std::string>();
  if (a.empty() || b.empty()) throw UsageError("compare: --a and --b are required");
  const auto xs = read_scores(a), ys = read_scores(b);
  ComparisonResult result;
  try {
    result = wilcoxon_signed_rank(xs, ys);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  o.emit("comparison.json", result.to_json().dump(2) + "\n");
}

void execute(const Run& r, std::ostream& out) {
  Outputs o{out, {}};
  if (!r.output_dir.empty()) {
    o.dir = r.output_dir;
    fs::create_directories(o.dir);
    write_text(o.dir / "manifest.json", r.to_manifest().dump(2) + "\n");
  }
  if (r.command == "synth") return run_synth(r, o);
  if (r.command == "stats") return run_stats(r, o);
  if (r.command == "scale") return run_scale(r, o);
  if (r.command == "train") return run_train(r, o);
  if (r.command == "report-scales") return run_report_scales(r, o);
  if (r.command == "gridsearch") return run_gridsearch(r, o);
  if (r.command == "compare") return run_compare(r, o);
  throw UsageError("unknown command '" + r.command + "'");
}

// Fills in defaults, the config file and then the flags.
Run resolve(const std::string& command, const Subcommand& s, const std::string& grid_file) {
  Run r;
  r.command = command;
  r.options = default_options(command);
  if (!s.config->empty()) merge_config_file(r, *s.config);
  s.binder->apply(r);
  r.hyper.seed = r.seed;
  r.edges = absolute_path(r.edges);
  r.features = absolute_path(r.features);
  r.labels = absolute_path(r.labels);
  r.splits = absolute_path(r.splits);
  r.output_dir = absolute_path(r.output_dir);
  if (command == "compare") {
    r.options["a"] = absolute_path(r.options["a"].get<std::string>());
    r.options["b"] = absolute_path(r.options["b"].get<std::string>());
  }
  if (command == "scale") r.options["out"] = absolute_path(r.options["out"].get<std::string>());
  if (command == "gridsearch") {
    GridSpace base;
    base.base = r.model;
    json grid = r.options["grid"].empty() ? json::object() : json::parse(r.options["grid"].dump());
    if (!grid_file.empty()) grid = read_json_file(grid_file, true);
    try {
      r.options["grid"] = GridSpace::from_json(grid, base).to_json();
    } catch (const json::exception& e) {
      throw UsageError(std::string("grid: ") + e.what());
    }
  }
  r.model.validate();
  r.hyper.validate();
  if (r.threads == 0) throw UsageError("--threads must be at least 1");
  return r;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-scale directed graph node classification", "scalenet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::map<std::string, Subcommand> subs;
  subs.emplace("synth", make_subcommand(app, "synth", "Write a directed SBM dataset", false, false));
  subs.emplace("stats", make_subcommand(app, "stats", "Dataset statistics as JSON", true, false));
  subs.emplace("scale", make_subcommand(app, "scale", "Dump a scaled adjacency (Matrix Market)", true, false));
  subs.emplace("train", make_subcommand(app, "train", "Train one model, print the result JSON", true, true));
  subs.emplace("report-scales",
               make_subcommand(app, "report-scales", "Accuracy per scaled graph (TSV)", true, true));
  subs.emplace("gridsearch", make_subcommand(app, "gridsearch", "Grid search leaderboard (TSV)", true, true));
  subs.emplace("compare", make_subcommand(app, "compare", "Wilcoxon signed-rank test (JSON)", false, false));

  {
    Binder& b = *subs.at("synth").binder;
    b.option<std::size_t>("--nodes", "nodes", "Number of nodes");
    b.option<std::size_t>("--classes", "classes", "Number of classes");
    b.option<double>("--p-in", "p_in", "On-pattern edge probability");
    b.option<double>("--p-out", "p_out", "Off-pattern edge probability");
    b.option<std::size_t>("--class-offset", "class_offset", "0 homophilic, 1 cyclic heterophilic");
    b.option<double>("--receiver-fraction", "receiver_fraction", "Fraction of nodes that may receive edges");
    b.option<double>("--feature-noise", "feature_noise", "Feature noise stddev");
    b.option<std::size_t>("--num-splits", "num_splits", "Number of random splits");
    b.option<double>("--train-fraction", "train_fraction", "Per-class training fraction");
    b.option<double>("--val-fraction", "val_fraction", "Per-class validation fraction");
  }
  subs.at("stats").binder->option<std::size_t>("--split", "split", "Split index for the training prior");
  {
    Binder& b = *subs.at("scale").binder;
    b.option<std::string>("--word", "word", "Scale word over {A, T}, e.g. AT");
    b.option<std::string>("--selfloops", "selfloops", "add|remove|keep");
    b.option<std::size_t>("--nodes", "nodes", "Node count (default: largest index + 1)");
    b.option<std::size_t>("--proximity", "proximity", "Order-k proximity matrix instead of a word");
    b.option<std::string>("--combine", "combine", "intersect|union for --proximity");
    b.option<bool>("--prune", "prune", "Prune lower-order pairs for --proximity (true/false)");
    b.option<bool>("--remove-shared", "remove_shared", "Drop edges present in A or A^T (true/false)");
    b.option<std::string>("--out", "out", "Write the matrix here instead of stdout");
  }
  {
    Binder& b = *subs.at("train").binder;
    b.option<std::size_t>("--split", "split", "Split index");
    b.option<bool>("--all-splits", "all_splits", "Cross-validate over every split (true/false)");
  }
  {
    Binder& b = *subs.at("report-scales").binder;
    b.option<std::size_t>("--num-splits", "num_splits", "Use the first N splits (0 = all)");
    b.option<bool>("--remove-shared", "remove_shared", "Also report shared-edge-removed columns");
  }
  auto grid_file = std::make_shared<std::string>();
  {
    Binder& b = *subs.at("gridsearch").binder;
    b.option<std::size_t>("--num-splits", "num_splits", "Use the first N splits (0 = all)");
    b.app()->add_option("--grid", *grid_file, "Grid space JSON file");
  }
  {
    Binder& b = *subs.at("compare").binder;
    b.option<std::string>("--a", "a", "Scores of the first method");
    b.option<std::string>("--b", "b", "Scores of the second method");
  }
  auto* replay = app.add_subcommand("replay", "Re-run a manifest");
  std::string manifest_path, replay_dir;
  replay->add_option("manifest", manifest_path, "manifest.json")->required();
  replay->add_option("--out-dir", replay_dir, "Output directory (default: the manifest's)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto chosen = app.get_subcommands();
    err << (chosen.empty() ? app.help() : chosen.front()->help());
    return kUsageError;
  }

  try {
    Run r;
    if (replay->parsed()) {
      r = Run::from_manifest(read_json_file(manifest_path, true));
      if (!replay_dir.empty()) r.output_dir = absolute_path(replay_dir);
    } else {
      for (const auto& [name, s] : subs) {
        if (s.app->parsed()) r = resolve(name, s, *grid_file);
      }
    }
    execute(r, out);
    return kOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return run(args, out, err);
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace scalenet::cli
