#include "scalenet/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace scalenet {

// ---- config -----------------------------------------------------------------

namespace {

struct FamilyName {
  Family family;
  const char* name;
};
constexpr std::array<FamilyName, 9> kFamilies{{{Family::scalenet, "scalenet"},
                                               {Family::one_ig, "one_ig"},
                                               {Family::one_igi2, "one_igi2"},
                                               {Family::one_igu2, "one_igu2"},
                                               {Family::one_igu3, "one_igu3"},
                                               {Family::one_ym, "one_ym"},
                                               {Family::gcn, "gcn"},
                                               {Family::mlp, "mlp"},
                                               {Family::dirgnn_lite, "dirgnn_lite"}}};

}  // namespace

std::string to_string(Family f) {
  for (const auto& entry : kFamilies) {
    if (entry.family == f) return entry.name;
  }
  return "scalenet";
}

std::string to_string(Comb1 c) {
  switch (c) {
    case Comb1::jk_max: return "jk_max";
    case Comb1::jk_cat: return "jk_cat";
    case Comb1::add: return "add";
  }
  return "add";
}

std::string to_string(Comb2 c) {
  switch (c) {
    case Comb2::jk_max: return "jk_max";
    case Comb2::jk_cat: return "jk_cat";
    case Comb2::last: return "last";
  }
  return "last";
}

Family parse_family(const std::string& text) {
  for (const auto& entry : kFamilies) {
    if (text == entry.name) return entry.family;
  }
  // Short names used in result tables.
  if (text == "1iG") return Family::one_ig;
  if (text == "1iGi2" || text == "1iGib") return Family::one_igi2;
  if (text == "1iGu2") return Family::one_igu2;
  if (text == "1iGu3") return Family::one_igu3;
  if (text == "1ym") return Family::one_ym;
  throw std::invalid_argument("unknown model family '" + text + "'");
}

Comb1 parse_comb1(const std::string& text) {
  if (text == "jk_max" || text == "max") return Comb1::jk_max;
  if (text == "jk_cat" || text == "cat") return Comb1::jk_cat;
  if (text == "add" || text == "0") return Comb1::add;
  throw std::invalid_argument("unknown COMB1 mode '" + text + "'");
}

Comb2 parse_comb2(const std::string& text) {
  if (text == "jk_max" || text == "max") return Comb2::jk_max;
  if (text == "jk_cat" || text == "cat") return Comb2::jk_cat;
  if (text == "last" || text == "0") return Comb2::last;
  throw std::invalid_argument("unknown COMB2 mode '" + text + "'");
}

bool is_valid_direction_parameter(double v) {
  return v == -1.0 || v == 0.0 || v == 0.5 || v == 1.0 || v == 2.0 || v == 3.0;
}

void ModelConfig::validate() const {
  for (auto [name, v] : {std::pair{"alpha", alpha}, {"beta", beta}, {"gamma", gamma}}) {
    if (!is_valid_direction_parameter(v)) {
      throw std::invalid_argument(std::string(name) + " must be one of -1, 0, 0.5, 1, 2, 3");
    }
  }
  if (family == Family::scalenet && alpha == -1.0 && beta == -1.0 && gamma == -1.0) {
    throw std::invalid_argument("scalenet: alpha, beta and gamma cannot all be -1");
  }
  if (layers < 1 || layers > 5) throw std::invalid_argument("layers must be in 1..5");
  if (hidden == 0) throw std::invalid_argument("hidden width must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must be in [0, 1)");
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
}

nlohmann::ordered_json ModelConfig::to_json() const {
  return {{"family", to_string(family)},
          {"alpha", alpha},
          {"beta", beta},
          {"gamma", gamma},
          {"layers", layers},
          {"hidden", hidden},
          {"comb1", to_string(comb1)},
          {"comb2", to_string(comb2)},
          {"selfloop", to_string(selfloop_first)},
          {"selfloop2", to_string(selfloop_second)},
          {"bn", use_bn},
          {"relu", use_relu},
          {"dropout", dropout},
          {"lr", lr}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& doc) { return from_json(doc, ModelConfig{}); }

ModelConfig ModelConfig::from_json(const nlohmann::json& doc, ModelConfig cfg) {
  if (!doc.is_object()) throw std::invalid_argument("model config must be a JSON object");
  static const std::array<const char*, 14> known{"family", "alpha",    "beta",      "gamma", "layers",
                                                 "hidden", "comb1",    "comb2",     "selfloop",
                                                 "selfloop2", "bn",    "relu",      "dropout", "lr"};
  for (const auto& item : doc.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return item.key() == k; }) ==
        known.end()) {
      throw std::invalid_argument("unknown model config key '" + item.key() + "'");
    }
  }
  try {
    if (doc.contains("family")) cfg.family = parse_family(doc["family"].get<std::string>());
    if (doc.contains("alpha")) cfg.alpha = doc["alpha"].get<double>();
    if (doc.contains("beta")) cfg.beta = doc["beta"].get<double>();
    if (doc.contains("gamma")) cfg.gamma = doc["gamma"].get<double>();
    if (doc.contains("layers")) cfg.layers = doc["layers"].get<std::size_t>();
    if (doc.contains("hidden")) cfg.hidden = doc["hidden"].get<std::size_t>();
    if (doc.contains("comb1")) cfg.comb1 = parse_comb1(doc["comb1"].get<std::string>());
    if (doc.contains("comb2")) cfg.comb2 = parse_comb2(doc["comb2"].get<std::string>());
    if (doc.contains("selfloop")) {
      cfg.selfloop_first = parse_selfloop_mode(doc["selfloop"].get<std::string>());
    }
    if (doc.contains("selfloop2")) {
      cfg.selfloop_second = parse_selfloop_mode(doc["selfloop2"].get<std::string>());
    }
    if (doc.contains("bn")) cfg.use_bn = doc["bn"].get<bool>();
    if (doc.contains("relu")) cfg.use_relu = doc["relu"].get<bool>();
    if (doc.contains("dropout")) cfg.dropout = doc["dropout"].get<double>();
    if (doc.contains("lr")) cfg.lr = doc["lr"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("model config: ") + e.what());
  }
  return cfg;
}

// ---- AGG-B --------------------------------------------------------------------

std::pair<double, double> aggb_coefficients(double alpha) {
  return {(1.0 + alpha) * alpha, (1.0 + alpha) * (1.0 - alpha)};
}

AggPair AggPair::from_patterns(const SparseMatrix& m_raw, const SparseMatrix& n_raw) {
  AggPair pair;
  pair.m = std::make_shared<const SparseMatrix>(sym_normalize(m_raw));
  pair.n = std::make_shared<const SparseMatrix>(sym_normalize(n_raw));
  pair.m_or_n = std::make_shared<const SparseMatrix>(sym_normalize(pattern_union(m_raw, n_raw)));
  pair.m_and_n =
      std::make_shared<const SparseMatrix>(sym_normalize(pattern_intersection(m_raw, n_raw)));
  return pair;
}

Var agg_b(Tape& tape, double alpha, const AggPair& pair, Var x, const Linear& weight) {
  if (!is_valid_direction_parameter(alpha)) {
    throw std::invalid_argument("agg_b: alpha must be one of -1, 0, 0.5, 1, 2, 3");
  }
  if (x.rows() != pair.m->n_rows() || pair.m->n_rows() != pair.n->n_rows()) {
    throw std::invalid_argument("agg_b: matrix and feature row counts differ");
  }
  if (alpha == -1.0) return tape.constant(Matrix(x.rows(), weight.out_features(), 0.0));
  Var xw = weight(tape, x);
  if (alpha == 2.0) return ops::spmm(*pair.m_or_n, xw);
  if (alpha == 3.0) return ops::spmm(*pair.m_and_n, xw);

  auto [coef_m, coef_n] = aggb_coefficients(alpha);
  std::vector<Var> terms;
  if (coef_m != 0.0) terms.push_back(ops::scale(ops::spmm(*pair.m, xw), coef_m));
  if (coef_n != 0.0) terms.push_back(ops::scale(ops::spmm(*pair.n, xw), coef_n));
  return terms.size() == 1 ? terms.front() : ops::add_n(terms);
}

// ---- models -------------------------------------------------------------------

namespace {

std::shared_ptr<const SparseMatrix> share(SparseMatrix m) {
  return std::make_shared<const SparseMatrix>(std::move(m));
}

// Per-layer post-processing, COMB2 and the classifier shared by every family.
class LayeredModel : public Model {
 public:
  Var forward(Tape& tape, const Matrix& features, bool training, Rng& rng) override {
    if (features.cols() != num_features_) {
      throw std::invalid_argument("model expects " + std::to_string(num_features_) +
                                  " feature columns, got " + std::to_string(features.cols()));
    }
    Var x = tape.constant(features);
    std::vector<Var> outputs;
    for (std::size_t l = 0; l < config_.layers; ++l) {
      Var y = layer_core(tape, l, x);
      if (config_.use_bn) y = bns_[l](tape, y, training);
      if (config_.use_relu) y = ops::relu(y);
      y = ops::dropout(y, config_.dropout, rng, training);
      outputs.push_back(y);
      x = y;
    }
    Var z;
    switch (config_.comb2) {
      case Comb2::last: z = outputs.back(); break;
      case Comb2::jk_max: z = ops::elementwise_max(outputs); break;
      case Comb2::jk_cat: z = ops::concat_cols(outputs); break;
    }
    return (*classifier_)(tape, z);
  }

 protected:
  LayeredModel(ModelConfig cfg, std::size_t num_features, std::size_t num_classes)
      : Model(std::move(cfg)), num_features_(num_features), num_classes_(num_classes) {}

  // Call after the layer parameters exist so initialization order is fixed.
  void finish(Rng& rng) {
    if (config_.use_bn) {
      for (std::size_t l = 0; l < config_.layers; ++l) {
        bns_.emplace_back(store_, "bn" + std::to_string(l), config_.hidden);
      }
    }
    const std::size_t width =
        config_.comb2 == Comb2::jk_cat ? config_.layers * config_.hidden : config_.hidden;
    classifier_.emplace(store_, "classifier", width, num_classes_, true, rng);
  }

  std::size_t layer_input(std::size_t l) const { return l == 0 ? num_features_ : config_.hidden; }

  virtual Var layer_core(Tape& tape, std::size_t l, Var x) = 0;

  std::size_t num_features_;
  std::size_t num_classes_;

 private:
  std::vector<BatchNorm> bns_;
  std::optional<Linear> classifier_;
};

// Fuses same-width block outputs per COMB1.
class Fuser {
 public:
  Fuser(ParameterStore& store, const std::string& name, Comb1 mode, std::size_t blocks,
        std::size_t hidden, Rng& rng)
      : mode_(mode) {
    if (mode == Comb1::jk_cat) {
      projection_.emplace(store, name + ".proj", blocks * hidden, hidden, true, rng);
    } else {
      bias_ = &store.create(name + ".bias", Matrix(1, hidden, 0.0));
    }
  }

  Var operator()(Tape& tape, const std::vector<Var>& parts) const {
    switch (mode_) {
      case Comb1::jk_cat: return (*projection_)(tape, ops::concat_cols(parts));
      case Comb1::jk_max:
        return ops::add_row_bias(ops::elementwise_max(parts), tape.parameter(*bias_));
      case Comb1::add: break;
    }
    Var sum = parts.size() == 1 ? parts.front() : ops::add_n(parts);
    return ops::add_row_bias(sum, tape.parameter(*bias_));
  }

 private:
  Comb1 mode_;
  std::optional<Linear> projection_;
  Parameter* bias_ = nullptr;
};

class ScaleNetModel final : public LayeredModel {
 public:
  ScaleNetModel(const ModelConfig& cfg, const DirectedGraph& g, const ScaleSet& set, Rng& rng)
      : LayeredModel(cfg, g.num_features(), g.num_classes) {
    const std::array<double, 3> params{cfg.alpha, cfg.beta, cfg.gamma};
    const std::array<std::pair<const SparseMatrix*, const SparseMatrix*>, 3> sources{
        {{&set.a, &set.at}, {&set.a_at, &set.at_a}, {&set.a_a, &set.at_at}}};
    static const std::array<std::pair<const char*, const char*>, 3> names{
        {{"A", "AT"}, {"AAT", "ATA"}, {"AA", "ATAT"}}};
    for (std::size_t b = 0; b < 3; ++b) {
      if (params[b] == -1.0) continue;
      SelfLoopMode mode = b == 0 ? cfg.selfloop_first : cfg.selfloop_second;
      SparseMatrix m_raw = apply_selfloop_mode(*sources[b].first, mode);
      SparseMatrix n_raw = apply_selfloop_mode(*sources[b].second, mode);
      blocks_.push_back({params[b], AggPair::from_patterns(m_raw, n_raw)});
      channels_.push_back({names[b].first, share(std::move(m_raw)), blocks_.back().pair.m, 1.0});
      channels_.push_back({names[b].second, share(std::move(n_raw)), blocks_.back().pair.n, 1.0});
    }
    if (blocks_.empty()) throw std::invalid_argument("scalenet: every AGG-B block is excluded");

    for (std::size_t l = 0; l < cfg.layers; ++l) {
      const std::string prefix = "layer" + std::to_string(l);
      std::vector<Linear> weights;
      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        weights.emplace_back(store_, prefix + ".block" + std::to_string(b), layer_input(l),
                             cfg.hidden, false, rng);
      }
      weights_.push_back(std::move(weights));
      fusers_.emplace_back(store_, prefix + ".comb1", cfg.comb1, blocks_.size(), cfg.hidden, rng);
    }
    finish(rng);
  }

  std::vector<Channel> channels() const override { return channels_; }

 protected:
  Var layer_core(Tape& tape, std::size_t l, Var x) override {
    std::vector<Var> parts;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      parts.push_back(agg_b(tape, blocks_[b].alpha, blocks_[b].pair, x, weights_[l][b]));
    }
    return fusers_[l](tape, parts);
  }

 private:
  struct Block {
    double alpha;
    AggPair pair;
  };
  std::vector<Block> blocks_;
  std::vector<Channel> channels_;
  std::vector<std::vector<Linear>> weights_;
  std::vector<Fuser> fusers_;
};

class ChannelModel final : public LayeredModel {
 public:
  ChannelModel(const ModelConfig& cfg, std::vector<Channel> channels, ChannelFusion fusion,
               std::size_t num_features, std::size_t num_classes, Rng& rng)
      : LayeredModel(cfg, num_features, num_classes), channels_(std::move(channels)) {
    if (channels_.empty()) throw std::invalid_argument("channel model needs at least one channel");
    const Comb1 mode = fusion == ChannelFusion::concat ? Comb1::jk_cat : Comb1::add;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      const std::string prefix = "layer" + std::to_string(l);
      std::vector<Linear> weights;
      for (std::size_t c = 0; c < channels_.size(); ++c) {
        weights.emplace_back(store_, prefix + ".channel" + std::to_string(c), layer_input(l),
                             cfg.hidden, false, rng);
      }
      weights_.push_back(std::move(weights));
      fusers_.emplace_back(store_, prefix + ".fuse", mode, channels_.size(), cfg.hidden, rng);
    }
    finish(rng);
  }

  std::vector<Channel> channels() const override { return channels_; }

 protected:
  Var layer_core(Tape& tape, std::size_t l, Var x) override {
    std::vector<Var> parts;
    for (std::size_t c = 0; c < channels_.size(); ++c) {
      Var xw = weights_[l][c](tape, x);
      Var y = channels_[c].normalized ? ops::spmm(*channels_[c].normalized, xw) : xw;
      if (channels_[c].coefficient != 1.0) y = ops::scale(y, channels_[c].coefficient);
      parts.push_back(y);
    }
    return fusers_[l](tape, parts);
  }

 private:
  std::vector<Channel> channels_;
  std::vector<std::vector<Linear>> weights_;
  std::vector<Fuser> fusers_;
};

Channel make_channel(std::string name, SparseMatrix raw, double coefficient = 1.0) {
  auto normalized = share(sym_normalize(raw));
  return {std::move(name), share(std::move(raw)), std::move(normalized), coefficient};
}

}  // namespace

std::unique_ptr<Model> build_model(const ModelConfig& cfg, const DirectedGraph& g,
                                   std::uint64_t seed, const ScaleSet* scales) {
  cfg.validate();
  g.validate();
  Rng rng(seed);
  std::optional<ScaleSet> local;
  if (!scales) {
    local = ScaleSet::compute(g.adjacency);
    scales = &*local;
  }
  const ScaleSet& s = *scales;
  const std::size_t d = g.num_features(), C = g.num_classes;
  const SelfLoopMode first = cfg.selfloop_first, second = cfg.selfloop_second;

  std::vector<Channel> channels;
  ChannelFusion fusion = ChannelFusion::sum;
  switch (cfg.family) {
    case Family::scalenet:
      return std::make_unique<ScaleNetModel>(cfg, g, s, rng);
    case Family::one_ig:
    case Family::one_igi2:
    case Family::one_igu2:
    case Family::one_igu3:
      channels.push_back(make_channel("A", apply_selfloop_mode(s.a, first)));
      channels.push_back(make_channel("AT", apply_selfloop_mode(s.at, first)));
      if (cfg.family == Family::one_igi2) {
        channels.push_back(make_channel(
            "P2i", apply_selfloop_mode(proximity_matrix(s.a, 2, Combine::intersect, true), second)));
      }
      if (cfg.family == Family::one_igu2 || cfg.family == Family::one_igu3) {
        channels.push_back(make_channel(
            "P2u", apply_selfloop_mode(proximity_matrix(s.a, 2, Combine::union_, true), second)));
      }
      if (cfg.family == Family::one_igu3) {
        channels.push_back(make_channel(
            "P3u", apply_selfloop_mode(proximity_matrix(s.a, 3, Combine::union_, true), second)));
      }
      break;
    case Family::one_ym:
      channels.push_back(make_channel("A+AT", apply_selfloop_mode(pattern_union(s.a, s.at), first)));
      channels.push_back(make_channel("AAT", apply_selfloop_mode(s.a_at, second)));
      channels.push_back(make_channel("ATA", apply_selfloop_mode(s.at_a, second)));
      fusion = ChannelFusion::concat;
      break;
    case Family::gcn:
      channels.push_back(make_channel("A+AT+I", add_self_loops(pattern_union(s.a, s.at))));
      break;
    case Family::mlp:
      channels.push_back({"X", nullptr, nullptr, 1.0});
      break;
    case Family::dirgnn_lite:
      channels.push_back(make_channel("A", apply_selfloop_mode(s.a, first), 0.5));
      channels.push_back(make_channel("AT", apply_selfloop_mode(s.at, first), 0.5));
      break;
  }
  return std::make_unique<ChannelModel>(cfg, std::move(channels), fusion, d, C, rng);
}

std::unique_ptr<Model> build_channel_model(
    const ModelConfig& cfg, std::vector<std::pair<std::string, SparseMatrix>> patterns,
    ChannelFusion fusion, std::size_t num_features, std::size_t num_classes, std::uint64_t seed) {
  ModelConfig checked = cfg;
  checked.family = Family::gcn;  // family-specific checks do not apply
  checked.validate();
  Rng rng(seed);
  std::vector<Channel> channels;
  for (auto& [name, m] : patterns) channels.push_back(make_channel(name, std::move(m)));
  return std::make_unique<ChannelModel>(cfg, std::move(channels), fusion, num_features,
                                        num_classes, rng);
}

}  // namespace scalenet
