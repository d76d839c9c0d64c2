#include "scalenet/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scalenet {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void add_into(Matrix& dst, const Matrix& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

// C (+)= A * B, all dense row-major.
void gemm_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c.row(i).data();
    const double* ai = a.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      const double* bp = b.row(p).data();
      for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
}

// C += A^T * B
void gemm_at_b_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.row(i).data();
    const double* bi = b.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      double* cp = c.row(p).data();
      for (std::size_t j = 0; j < m; ++j) cp[j] += aip * bi[j];
    }
  }
}

// C += A * B^T
void gemm_a_bt_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.row(i).data();
    double* ci = c.row(i).data();
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b.row(j).data();
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

}  // namespace

// ---- Var / Tape -------------------------------------------------------------

const Matrix& Var::value() const {
  if (!tape_) throw std::logic_error("Var: detached handle");
  return tape_->node(*this).value;
}

const Matrix* Var::grad() const {
  if (!tape_) throw std::logic_error("Var: detached handle");
  const auto& n = tape_->node(*this);
  return n.has_grad ? &n.grad : nullptr;
}

bool Var::requires_grad() const { return tape_ && tape_->node(*this).requires_grad; }

const Tape::Node& Tape::node(Var v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) throw std::logic_error("Var from another tape");
  return nodes_[v.id_];
}

Var Tape::constant(Matrix value) { return record(std::move(value), {}, nullptr); }

Var Tape::leaf(Matrix value) {
  Var v = record(std::move(value), {}, nullptr);
  nodes_[v.id_].requires_grad = true;
  return v;
}

Var Tape::parameter(Parameter& p) {
  Var v = leaf(p.value);
  nodes_[v.id_].param = &p;
  return v;
}

Var Tape::record(Matrix value, std::vector<Var> parents, BackwardFn backward) {
  if (consumed_) throw std::logic_error("Tape: cannot record on a consumed tape");
  for (double x : value.data()) {
    if (!std::isfinite(x)) throw std::domain_error("Tape: non-finite value produced");
  }
  Node n;
  n.value = std::move(value);
  n.backward = std::move(backward);
  for (const Var& p : parents) {
    const Node& pn = node(p);
    n.parents.push_back(p.id_);
    n.requires_grad = n.requires_grad || pn.requires_grad;
  }
  if (!n.requires_grad) n.backward = nullptr;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  if (consumed_) throw std::logic_error("Tape::backward: tape already consumed");
  if (loss.tape_ != this || loss.id_ >= nodes_.size()) {
    throw std::logic_error("Tape::backward: loss was not recorded on this tape");
  }
  Node& root = nodes_[loss.id_];
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw std::invalid_argument("Tape::backward: loss must be 1x1, got " + shape(root.value));
  }
  consumed_ = true;
  if (!root.requires_grad) return;
  root.grad = Matrix(1, 1, 1.0);
  root.has_grad = true;

  std::vector<Matrix*> slots;
  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.requires_grad) continue;
    if (n.param) add_into(n.param->grad, n.grad);
    if (!n.backward) continue;
    slots.assign(n.parents.size(), nullptr);
    for (std::size_t k = 0; k < n.parents.size(); ++k) {
      Node& p = nodes_[n.parents[k]];
      if (!p.requires_grad) continue;
      if (!p.has_grad) {
        p.grad = Matrix(p.value.rows(), p.value.cols(), 0.0);
        p.has_grad = true;
      }
      slots[k] = &p.grad;
    }
    n.backward(n.grad, slots);
  }
}

// ---- ops --------------------------------------------------------------------

namespace ops {

Var matmul(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require(av.cols() == bv.rows(), "matmul: " + shape(av) + " * " + shape(bv));
  Matrix out(av.rows(), bv.cols(), 0.0);
  gemm_acc(av, bv, out);
  return a.tape()->record(std::move(out), {a, b}, [a, b](const Matrix& g, std::span<Matrix*> d) {
    if (d[0]) gemm_a_bt_acc(g, b.value(), *d[0]);
    if (d[1]) gemm_at_b_acc(a.value(), g, *d[1]);
  });
}

Var spmm(const SparseMatrix& s, Var x) {
  const Matrix& xv = x.value();
  require(s.n_cols() == xv.rows(),
          "spmm: sparse " + std::to_string(s.n_rows()) + "x" + std::to_string(s.n_cols()) +
              " * dense " + shape(xv));
  const std::size_t h = xv.cols();
  Matrix out(s.n_rows(), h, 0.0);
  for (std::size_t r = 0; r < s.n_rows(); ++r) {
    auto cols = s.row_cols(r);
    auto vals = s.row_values(r);
    double* o = out.row(r).data();
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double* xr = xv.row(cols[k]).data();
      for (std::size_t j = 0; j < h; ++j) o[j] += vals[k] * xr[j];
    }
  }
  const SparseMatrix* sp = &s;
  return x.tape()->record(std::move(out), {x}, [sp, h](const Matrix& g, std::span<Matrix*> d) {
    if (!d[0]) return;
    // d x = S^T g, scattered row by row without materializing S^T.
    Matrix& dx = *d[0];
    for (std::size_t r = 0; r < sp->n_rows(); ++r) {
      auto cols = sp->row_cols(r);
      auto vals = sp->row_values(r);
      const double* gr = g.row(r).data();
      for (std::size_t k = 0; k < cols.size(); ++k) {
        double* dr = dx.row(cols[k]).data();
        for (std::size_t j = 0; j < h; ++j) dr[j] += vals[k] * gr[j];
      }
    }
  });
}

Var add(Var a, Var b) {
  const Var terms[] = {a, b};
  return add_n(terms);
}

Var add_n(std::span<const Var> terms) {
  require(!terms.empty(), "add_n: no terms");
  Matrix out = terms[0].value();
  for (std::size_t k = 1; k < terms.size(); ++k) {
    require(terms[k].value().same_shape(out),
            "add: " + shape(out) + " + " + shape(terms[k].value()));
    add_into(out, terms[k].value());
  }
  std::vector<Var> parents(terms.begin(), terms.end());
  return terms[0].tape()->record(std::move(out), parents,
                                 [](const Matrix& g, std::span<Matrix*> d) {
                                   for (Matrix* slot : d) {
                                     if (slot) add_into(*slot, g);
                                   }
                                 });
}

Var scale(Var x, double c) {
  Matrix out = x.value();
  for (double& v : out.data()) v *= c;
  return x.tape()->record(std::move(out), {x}, [c](const Matrix& g, std::span<Matrix*> d) {
    if (!d[0]) return;
    auto dst = d[0]->data();
    auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += c * src[i];
  });
}

Var add_row_bias(Var x, Var bias) {
  const Matrix& xv = x.value();
  const Matrix& bv = bias.value();
  require(bv.rows() == 1 && bv.cols() == xv.cols(),
          "add_row_bias: bias " + shape(bv) + " for input " + shape(xv));
  Matrix out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv(0, c);
  }
  return x.tape()->record(std::move(out), {x, bias}, [](const Matrix& g, std::span<Matrix*> d) {
    if (d[0]) add_into(*d[0], g);
    if (d[1]) {
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) (*d[1])(0, c) += g(r, c);
      }
    }
  });
}

Var relu(Var x) {
  Matrix out = x.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return x.tape()->record(std::move(out), {x}, [x](const Matrix& g, std::span<Matrix*> d) {
    if (!d[0]) return;
    auto in = x.value().data();
    auto src = g.data();
    auto dst = d[0]->data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (in[i] > 0.0) dst[i] += src[i];
    }
  });
}

Var dropout(Var x, double p, Rng& rng, bool training) {
  require(p >= 0.0 && p < 1.0, "dropout: p must lie in [0, 1)");
  if (!training || p == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - p);
  const double factor = 1.0 / (1.0 - p);
  Matrix mask(x.rows(), x.cols(), 0.0);
  for (double& m : mask.data()) m = keep(rng) ? factor : 0.0;
  Matrix out = x.value();
  auto o = out.data();
  auto m = mask.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= m[i];
  return x.tape()->record(std::move(out), {x},
                          [mask = std::move(mask)](const Matrix& g, std::span<Matrix*> d) {
                            if (!d[0]) return;
                            auto dst = d[0]->data();
                            auto src = g.data();
                            auto mk = mask.data();
                            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += mk[i] * src[i];
                          });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const std::size_t rows = parts[0].rows();
  std::size_t total = 0;
  for (const Var& p : parts) {
    require(p.rows() == rows, "concat_cols: row counts differ");
    total += p.cols();
  }
  Matrix out(rows, total, 0.0);
  std::vector<std::size_t> offsets;
  std::size_t at = 0;
  for (const Var& p : parts) {
    offsets.push_back(at);
    const Matrix& v = p.value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(v.row(r).begin(), v.row(r).end(), out.row(r).begin() + static_cast<long>(at));
    }
    at += v.cols();
  }
  std::vector<Var> parents(parts.begin(), parts.end());
  return parts[0].tape()->record(
      std::move(out), parents, [offsets](const Matrix& g, std::span<Matrix*> d) {
        for (std::size_t k = 0; k < d.size(); ++k) {
          if (!d[k]) continue;
          Matrix& dst = *d[k];
          for (std::size_t r = 0; r < dst.rows(); ++r) {
            for (std::size_t c = 0; c < dst.cols(); ++c) dst(r, c) += g(r, offsets[k] + c);
          }
        }
      });
}

Var elementwise_max(std::span<const Var> parts) {
  require(!parts.empty(), "elementwise_max: no inputs");
  Matrix out = parts[0].value();
  std::vector<std::size_t> winner(out.size(), 0);
  for (std::size_t k = 1; k < parts.size(); ++k) {
    const Matrix& v = parts[k].value();
    require(v.same_shape(out), "elementwise_max: shape mismatch");
    auto o = out.data();
    auto s = v.data();
    for (std::size_t i = 0; i < o.size(); ++i) {
      if (s[i] > o[i]) {
        o[i] = s[i];
        winner[i] = k;
      }
    }
  }
  std::vector<Var> parents(parts.begin(), parts.end());
  return parts[0].tape()->record(
      std::move(out), parents, [winner = std::move(winner)](const Matrix& g, std::span<Matrix*> d) {
        auto src = g.data();
        for (std::size_t i = 0; i < src.size(); ++i) {
          if (Matrix* slot = d[winner[i]]) slot->data()[i] += src[i];
        }
      });
}

Var sum_squares(Var x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v * v;
  return x.tape()->record(Matrix(1, 1, total), {x}, [x](const Matrix& g, std::span<Matrix*> d) {
    if (!d[0]) return;
    auto in = x.value().data();
    auto dst = d[0]->data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += 2.0 * in[i] * g(0, 0);
  });
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels,
                          std::span<const std::size_t> subset) {
  const Matrix& z = logits.value();
  require(!subset.empty(), "softmax_cross_entropy: empty index subset");
  require(labels.size() == z.rows(), "softmax_cross_entropy: one label per row required");
  const std::size_t classes = z.cols();
  Matrix probs(subset.size(), classes, 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < subset.size(); ++k) {
    const std::size_t r = subset[k];
    require(r < z.rows(), "softmax_cross_entropy: index out of range");
    const int y = labels[r];
    require(y >= 0 && static_cast<std::size_t>(y) < classes,
            "softmax_cross_entropy: label outside logits width");
    auto row = z.row(r);
    const double peak = *std::max_element(row.begin(), row.end());
    double norm = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      probs(k, c) = std::exp(row[c] - peak);
      norm += probs(k, c);
    }
    for (std::size_t c = 0; c < classes; ++c) probs(k, c) /= norm;
    total += -(row[static_cast<std::size_t>(y)] - peak - std::log(norm));
  }
  const double inv = 1.0 / static_cast<double>(subset.size());
  std::vector<std::size_t> rows(subset.begin(), subset.end());
  std::vector<int> ys(labels.begin(), labels.end());
  return logits.tape()->record(
      Matrix(1, 1, total * inv), {logits},
      [probs = std::move(probs), rows = std::move(rows), ys = std::move(ys), inv](
          const Matrix& g, std::span<Matrix*> d) {
        if (!d[0]) return;
        const double scale = g(0, 0) * inv;
        for (std::size_t k = 0; k < rows.size(); ++k) {
          auto dst = d[0]->row(rows[k]);
          for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += scale * probs(k, c);
          dst[static_cast<std::size_t>(ys[rows[k]])] -= scale;
        }
      });
}

Var batch_norm(Var x, Var gamma, Var beta, BatchNormState& state, bool training) {
  const Matrix& xv = x.value();
  const std::size_t n = xv.rows(), cols = xv.cols();
  require(gamma.rows() == 1 && gamma.cols() == cols && beta.rows() == 1 && beta.cols() == cols,
          "batch_norm: affine parameters must be 1x" + std::to_string(cols));
  require(state.running_mean.cols() == cols, "batch_norm: state width mismatch");
  require(n > 0, "batch_norm: empty batch");

  Matrix mean(1, cols, 0.0), inv_std(1, cols, 0.0);
  if (training) {
    Matrix var(1, cols, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < cols; ++c) mean(0, c) += xv(r, c);
    }
    for (std::size_t c = 0; c < cols; ++c) mean(0, c) /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double dv = xv(r, c) - mean(0, c);
        var(0, c) += dv * dv;
      }
    }
    for (std::size_t c = 0; c < cols; ++c) {
      var(0, c) /= static_cast<double>(n);
      inv_std(0, c) = 1.0 / std::sqrt(var(0, c) + state.eps);
      const double unbiased = n > 1 ? var(0, c) * static_cast<double>(n) / static_cast<double>(n - 1) : var(0, c);
      state.running_mean(0, c) = (1.0 - state.momentum) * state.running_mean(0, c) + state.momentum * mean(0, c);
      state.running_var(0, c) = (1.0 - state.momentum) * state.running_var(0, c) + state.momentum * unbiased;
    }
  } else {
    for (std::size_t c = 0; c < cols; ++c) {
      mean(0, c) = state.running_mean(0, c);
      inv_std(0, c) = 1.0 / std::sqrt(state.running_var(0, c) + state.eps);
    }
  }

  Matrix xhat(n, cols, 0.0), out(n, cols, 0.0);
  const Matrix& gv = gamma.value();
  const Matrix& bv = beta.value();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      xhat(r, c) = (xv(r, c) - mean(0, c)) * inv_std(0, c);
      out(r, c) = gv(0, c) * xhat(r, c) + bv(0, c);
    }
  }
  return x.tape()->record(
      std::move(out), {x, gamma, beta},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), gamma, training](
          const Matrix& g, std::span<Matrix*> d) {
        const std::size_t n = g.rows(), cols = g.cols();
        const Matrix& gv = gamma.value();
        std::vector<double> sum_g(cols, 0.0), sum_gx(cols, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t c = 0; c < cols; ++c) {
            sum_g[c] += g(r, c);
            sum_gx[c] += g(r, c) * xhat(r, c);
          }
        }
        if (d[1]) {
          for (std::size_t c = 0; c < cols; ++c) (*d[1])(0, c) += sum_gx[c];
        }
        if (d[2]) {
          for (std::size_t c = 0; c < cols; ++c) (*d[2])(0, c) += sum_g[c];
        }
        if (!d[0]) return;
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t c = 0; c < cols; ++c) {
            const double scale = gv(0, c) * inv_std(0, c);
            if (training) {
              (*d[0])(r, c) += scale * (g(r, c) - inv_n * sum_g[c] - inv_n * xhat(r, c) * sum_gx[c]);
            } else {
              (*d[0])(r, c) += scale * g(r, c);
            }
          }
        }
      });
}

}  // namespace ops

std::vector<int> argmax_rows(const Matrix& logits) {
  std::vector<int> out(logits.rows(), 0);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double accuracy(const Matrix& logits, std::span<const int> labels,
                std::span<const std::size_t> subset) {
  if (subset.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t r : subset) {
    auto row = logits.row(r);
    auto pred = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (pred == labels[r]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(subset.size());
}

}  // namespace scalenet
