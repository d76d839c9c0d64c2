#include "scalenet/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "scalenet/error.hpp"

namespace scalenet {

namespace {

void require_same_shape(const SparseMatrix& a, const SparseMatrix& b, const char* op) {
  if (a.n_rows() != b.n_rows() || a.n_cols() != b.n_cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                                std::to_string(a.n_rows()) + "x" + std::to_string(a.n_cols()) +
                                " vs " + std::to_string(b.n_rows()) + "x" +
                                std::to_string(b.n_cols()) + ")");
  }
}

void require_square(const SparseMatrix& s, const char* op) {
  if (!s.is_square()) {
    throw std::invalid_argument(std::string(op) + ": matrix is not square");
  }
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Merges two sorted rows. `keep` decides from (in_a, in_b) whether a column
// survives; surviving entries get value 1.
template <typename Keep>
SparseMatrix merge_patterns(const SparseMatrix& a, const SparseMatrix& b, Keep keep) {
  std::vector<std::size_t> offsets(a.n_rows() + 1, 0);
  std::vector<Index> cols;
  cols.reserve(std::max(a.nnz(), b.nnz()));
  for (std::size_t r = 0; r < a.n_rows(); ++r) {
    auto ra = a.row_cols(r);
    auto rb = b.row_cols(r);
    std::size_t i = 0, j = 0;
    while (i < ra.size() || j < rb.size()) {
      Index c;
      bool in_a = false, in_b = false;
      if (j == rb.size() || (i < ra.size() && ra[i] < rb[j])) {
        c = ra[i++];
        in_a = true;
      } else if (i == ra.size() || rb[j] < ra[i]) {
        c = rb[j++];
        in_b = true;
      } else {
        c = ra[i];
        ++i;
        ++j;
        in_a = in_b = true;
      }
      if (keep(in_a, in_b)) cols.push_back(c);
    }
    offsets[r + 1] = cols.size();
  }
  std::vector<double> values(cols.size(), 1.0);
  return SparseMatrix::from_csr(a.n_rows(), a.n_cols(), std::move(offsets), std::move(cols),
                                std::move(values));
}

}  // namespace

std::string to_string(SelfLoopMode mode) {
  switch (mode) {
    case SelfLoopMode::add: return "add";
    case SelfLoopMode::remove: return "remove";
    case SelfLoopMode::keep: return "keep";
  }
  return "keep";
}

SelfLoopMode parse_selfloop_mode(const std::string& text) {
  if (text == "add") return SelfLoopMode::add;
  if (text == "remove") return SelfLoopMode::remove;
  if (text == "keep" || text == "none" || text == "0") return SelfLoopMode::keep;
  throw std::invalid_argument("unknown self-loop mode '" + text + "'");
}

SparseMatrix SparseMatrix::empty(std::size_t n_rows, std::size_t n_cols) {
  return SparseMatrix(n_rows, n_cols, std::vector<std::size_t>(n_rows + 1, 0), {}, {});
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::size_t> offsets(n + 1);
  std::vector<Index> cols(n);
  for (std::size_t i = 0; i < n; ++i) {
    offsets[i] = i;
    cols[i] = static_cast<Index>(i);
  }
  offsets[n] = n;
  return SparseMatrix(n, n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0));
}

SparseMatrix SparseMatrix::from_triplets(std::size_t n_rows, std::size_t n_cols,
                                         std::vector<Triplet> entries, DuplicatePolicy policy) {
  for (const auto& t : entries) {
    if (t.row >= n_rows || t.col >= n_cols) {
      throw std::out_of_range("triplet (" + std::to_string(t.row) + ", " +
                              std::to_string(t.col) + ") outside " + std::to_string(n_rows) +
                              "x" + std::to_string(n_cols));
    }
    if (!std::isfinite(t.value)) throw std::invalid_argument("non-finite matrix value");
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> offsets(n_rows + 1, 0);
  std::vector<Index> cols;
  std::vector<double> values;
  cols.reserve(entries.size());
  values.reserve(entries.size());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& t = entries[k];
    bool repeat = k > 0 && entries[k - 1].row == t.row && entries[k - 1].col == t.col;
    if (repeat) {
      if (policy == DuplicatePolicy::sum) values.back() += t.value;
      continue;
    }
    cols.push_back(t.col);
    values.push_back(policy == DuplicatePolicy::pattern ? 1.0 : t.value);
    ++offsets[t.row + 1];
  }
  for (std::size_t r = 0; r < n_rows; ++r) offsets[r + 1] += offsets[r];
  return SparseMatrix(n_rows, n_cols, std::move(offsets), std::move(cols), std::move(values));
}

SparseMatrix SparseMatrix::from_edges(std::size_t n,
                                      std::span<const std::pair<Index, Index>> edges) {
  std::vector<Triplet> entries;
  entries.reserve(edges.size());
  for (auto [s, d] : edges) entries.push_back({s, d, 1.0});
  return from_triplets(n, n, std::move(entries), DuplicatePolicy::pattern);
}

SparseMatrix SparseMatrix::from_csr(std::size_t n_rows, std::size_t n_cols,
                                    std::vector<std::size_t> row_offsets,
                                    std::vector<Index> col_indices, std::vector<double> values) {
  if (row_offsets.size() != n_rows + 1 || row_offsets.front() != 0 ||
      row_offsets.back() != col_indices.size() || values.size() != col_indices.size()) {
    throw std::invalid_argument("from_csr: inconsistent array lengths");
  }
  for (std::size_t r = 0; r < n_rows; ++r) {
    if (row_offsets[r] > row_offsets[r + 1]) {
      throw std::invalid_argument("from_csr: row_offsets must be non-decreasing");
    }
    for (std::size_t k = row_offsets[r]; k < row_offsets[r + 1]; ++k) {
      if (col_indices[k] >= n_cols) throw std::invalid_argument("from_csr: column out of range");
      if (k > row_offsets[r] && col_indices[k - 1] >= col_indices[k]) {
        throw std::invalid_argument("from_csr: columns must be strictly increasing per row");
      }
      if (!std::isfinite(values[k])) throw std::invalid_argument("from_csr: non-finite value");
    }
  }
  return SparseMatrix(n_rows, n_cols, std::move(row_offsets), std::move(col_indices),
                      std::move(values));
}

SparseMatrix SparseMatrix::from_dense(std::size_t n_rows, std::size_t n_cols,
                                      std::span<const double> row_major) {
  if (row_major.size() != n_rows * n_cols) {
    throw std::invalid_argument("from_dense: buffer size does not match shape");
  }
  std::vector<Triplet> entries;
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (std::size_t c = 0; c < n_cols; ++c) {
      double v = row_major[r * n_cols + c];
      if (v != 0.0) entries.push_back({static_cast<Index>(r), static_cast<Index>(c), v});
    }
  }
  return from_triplets(n_rows, n_cols, std::move(entries));
}

bool SparseMatrix::is_pattern() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 1.0; });
}

double SparseMatrix::at(std::size_t row, std::size_t col) const {
  if (row >= n_rows_ || col >= n_cols_) throw std::out_of_range("SparseMatrix::at");
  auto cols = row_cols(row);
  auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<Index>(col));
  if (it == cols.end() || *it != col) return 0.0;
  return values_[row_offsets_[row] + static_cast<std::size_t>(it - cols.begin())];
}

bool SparseMatrix::contains(std::size_t row, std::size_t col) const {
  auto cols = row_cols(row);
  return std::binary_search(cols.begin(), cols.end(), static_cast<Index>(col));
}

std::vector<double> SparseMatrix::to_dense() const {
  std::vector<double> dense(n_rows_ * n_cols_, 0.0);
  for (std::size_t r = 0; r < n_rows_; ++r) {
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      dense[r * n_cols_ + col_indices_[k]] = values_[k];
    }
  }
  return dense;
}

std::vector<Triplet> SparseMatrix::to_triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::size_t r = 0; r < n_rows_; ++r) {
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      out.push_back({static_cast<Index>(r), col_indices_[k], values_[k]});
    }
  }
  return out;
}

SparseMatrix SparseMatrix::pattern() const {
  return SparseMatrix(n_rows_, n_cols_, row_offsets_, col_indices_,
                      std::vector<double>(values_.size(), 1.0));
}

SparseMatrix transpose(const SparseMatrix& s) {
  const std::size_t n_out_rows = s.n_cols();
  std::vector<std::size_t> offsets(n_out_rows + 1, 0);
  for (Index c : s.col_indices()) ++offsets[c + 1];
  for (std::size_t r = 0; r < n_out_rows; ++r) offsets[r + 1] += offsets[r];

  std::vector<Index> cols(s.nnz());
  std::vector<double> values(s.nnz());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  // Visiting source rows in order keeps each output row sorted.
  for (std::size_t r = 0; r < s.n_rows(); ++r) {
    auto rc = s.row_cols(r);
    auto rv = s.row_values(r);
    for (std::size_t k = 0; k < rc.size(); ++k) {
      std::size_t dst = cursor[rc[k]]++;
      cols[dst] = static_cast<Index>(r);
      values[dst] = rv[k];
    }
  }
  return SparseMatrix::from_csr(n_out_rows, s.n_rows(), std::move(offsets), std::move(cols),
                                std::move(values));
}

SparseMatrix spgemm(const SparseMatrix& a, const SparseMatrix& b, Semiring semiring) {
  if (a.n_cols() != b.n_rows()) {
    throw std::invalid_argument("spgemm: inner dimensions differ (" + std::to_string(a.n_cols()) +
                                " vs " + std::to_string(b.n_rows()) + ")");
  }
  const std::size_t n_cols = b.n_cols();
  std::vector<double> accumulator(n_cols, 0.0);
  std::vector<std::size_t> marker(n_cols, std::numeric_limits<std::size_t>::max());
  std::vector<Index> touched;

  std::vector<std::size_t> offsets(a.n_rows() + 1, 0);
  std::vector<Index> cols;
  std::vector<double> values;
  for (std::size_t r = 0; r < a.n_rows(); ++r) {
    touched.clear();
    auto ac = a.row_cols(r);
    auto av = a.row_values(r);
    for (std::size_t ka = 0; ka < ac.size(); ++ka) {
      auto bc = b.row_cols(ac[ka]);
      auto bv = b.row_values(ac[ka]);
      for (std::size_t kb = 0; kb < bc.size(); ++kb) {
        Index c = bc[kb];
        if (marker[c] != r) {
          marker[c] = r;
          accumulator[c] = 0.0;
          touched.push_back(c);
        }
        accumulator[c] += av[ka] * bv[kb];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (Index c : touched) {
      // Counted products of non-negative inputs never cancel, but signed
      // inputs can; drop exact zeros so the support stays honest.
      if (accumulator[c] == 0.0) continue;
      cols.push_back(c);
      values.push_back(semiring == Semiring::pattern ? 1.0 : accumulator[c]);
    }
    offsets[r + 1] = cols.size();
  }
  return SparseMatrix::from_csr(a.n_rows(), n_cols, std::move(offsets), std::move(cols),
                                std::move(values));
}

SparseMatrix pattern_union(const SparseMatrix& a, const SparseMatrix& b) {
  require_same_shape(a, b, "pattern_union");
  return merge_patterns(a, b, [](bool, bool) { return true; });
}

SparseMatrix pattern_intersection(const SparseMatrix& a, const SparseMatrix& b) {
  require_same_shape(a, b, "pattern_intersection");
  return merge_patterns(a, b, [](bool in_a, bool in_b) { return in_a && in_b; });
}

SparseMatrix pattern_difference(const SparseMatrix& a, const SparseMatrix& b) {
  require_same_shape(a, b, "pattern_difference");
  std::vector<std::size_t> offsets(a.n_rows() + 1, 0);
  std::vector<Index> cols;
  std::vector<double> values;
  for (std::size_t r = 0; r < a.n_rows(); ++r) {
    auto ac = a.row_cols(r);
    auto av = a.row_values(r);
    auto bc = b.row_cols(r);
    for (std::size_t k = 0; k < ac.size(); ++k) {
      if (!std::binary_search(bc.begin(), bc.end(), ac[k])) {
        cols.push_back(ac[k]);
        values.push_back(av[k]);
      }
    }
    offsets[r + 1] = cols.size();
  }
  return SparseMatrix::from_csr(a.n_rows(), a.n_cols(), std::move(offsets), std::move(cols),
                                std::move(values));
}

SparseMatrix add_self_loops(const SparseMatrix& s) {
  require_square(s, "add_self_loops");
  std::vector<Triplet> entries = s.to_triplets();
  for (auto& t : entries) {
    if (t.row == t.col) t.value = 1.0;
  }
  for (std::size_t i = 0; i < s.n_rows(); ++i) {
    if (!s.contains(i, i)) entries.push_back({static_cast<Index>(i), static_cast<Index>(i), 1.0});
  }
  return SparseMatrix::from_triplets(s.n_rows(), s.n_cols(), std::move(entries));
}

SparseMatrix remove_self_loops(const SparseMatrix& s) {
  require_square(s, "remove_self_loops");
  return pattern_difference(s, SparseMatrix::identity(s.n_rows()));
}

SparseMatrix apply_selfloop_mode(const SparseMatrix& s, SelfLoopMode mode) {
  switch (mode) {
    case SelfLoopMode::add: return add_self_loops(s);
    case SelfLoopMode::remove: return remove_self_loops(s);
    case SelfLoopMode::keep: break;
  }
  return s;
}

std::vector<std::size_t> degrees(const SparseMatrix& s, Axis axis) {
  if (axis == Axis::row) {
    std::vector<std::size_t> out(s.n_rows());
    for (std::size_t r = 0; r < s.n_rows(); ++r) out[r] = s.row_cols(r).size();
    return out;
  }
  std::vector<std::size_t> out(s.n_cols(), 0);
  for (Index c : s.col_indices()) ++out[c];
  return out;
}

SparseMatrix sym_normalize(const SparseMatrix& s, SelfLoopMode mode) {
  require_square(s, "sym_normalize");
  for (double v : s.values()) {
    if (v < 0.0) throw std::invalid_argument("sym_normalize: negative entry");
  }
  SparseMatrix looped = apply_selfloop_mode(s, mode);
  const std::size_t n = looped.n_rows();
  std::vector<double> row_sum(n, 0.0), col_sum(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    auto rc = looped.row_cols(r);
    auto rv = looped.row_values(r);
    for (std::size_t k = 0; k < rc.size(); ++k) {
      row_sum[r] += rv[k];
      col_sum[rc[k]] += rv[k];
    }
  }
  auto inv_sqrt = [](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; };

  std::vector<std::size_t> offsets(looped.row_offsets().begin(), looped.row_offsets().end());
  std::vector<Index> cols(looped.col_indices().begin(), looped.col_indices().end());
  std::vector<double> values(looped.nnz());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
      values[k] = inv_sqrt(row_sum[r]) * looped.values()[k] * inv_sqrt(col_sum[cols[k]]);
    }
  }
  return SparseMatrix::from_csr(n, n, std::move(offsets), std::move(cols), std::move(values));
}

void write_matrix_market(std::ostream& out, const SparseMatrix& s) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << s.n_rows() << ' ' << s.n_cols() << ' ' << s.nnz() << '\n';
  for (const auto& t : s.to_triplets()) {
    out << (t.row + 1) << ' ' << (t.col + 1) << ' ' << format_double(t.value) << '\n';
  }
}

SparseMatrix read_matrix_market(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t rows = 0, cols = 0, nnz = 0;
  std::vector<Triplet> entries;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream ls(line);
    if (!have_header) {
      if (!(ls >> rows >> cols >> nnz)) throw DataError("matrix", line_no, "bad size line");
      have_header = true;
      continue;
    }
    std::size_t r = 0, c = 0;
    double v = 1.0;
    if (!(ls >> r >> c)) throw DataError("matrix", line_no, "bad entry");
    if (!(ls >> v)) v = 1.0;
    if (r == 0 || c == 0 || r > rows || c > cols) {
      throw DataError("matrix", line_no, "entry index out of range");
    }
    entries.push_back({static_cast<Index>(r - 1), static_cast<Index>(c - 1), v});
  }
  if (!have_header) throw DataError("matrix: missing size line");
  if (entries.size() != nnz) throw DataError("matrix: entry count does not match header");
  return SparseMatrix::from_triplets(rows, cols, std::move(entries));
}

std::vector<std::pair<Index, Index>> read_edge_list(std::istream& in) {
  std::vector<std::pair<Index, Index>> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    long long src = -1, dst = -1;
    std::string rest;
    if (!(ls >> src >> dst) || (ls >> rest)) {
      throw DataError("edges", line_no, "expected 'src<TAB>dst'");
    }
    if (src < 0 || dst < 0 || src > std::numeric_limits<Index>::max() ||
        dst > std::numeric_limits<Index>::max()) {
      throw DataError("edges", line_no, "node index out of range");
    }
    edges.emplace_back(static_cast<Index>(src), static_cast<Index>(dst));
  }
  return edges;
}

void write_edge_list(std::ostream& out, const SparseMatrix& adjacency) {
  for (std::size_t r = 0; r < adjacency.n_rows(); ++r) {
    for (Index c : adjacency.row_cols(r)) out << r << '\t' << c << '\n';
  }
}

}  // namespace scalenet
