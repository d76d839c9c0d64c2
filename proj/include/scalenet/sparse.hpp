#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace scalenet {

using Index = std::uint32_t;

struct Triplet {
  Index row;
  Index col;
  double value = 1.0;
};

enum class Semiring { counted, pattern };
enum class SelfLoopMode { add, remove, keep };
enum class Axis { row, col };

// How repeated (row, col) pairs are merged when building from triplets.
enum class DuplicatePolicy { sum, pattern };

std::string to_string(SelfLoopMode mode);
SelfLoopMode parse_selfloop_mode(const std::string& text);

// Compressed sparse row matrix with sorted, duplicate-free column indices.
// Every constructor canonicalizes, so two matrices with the same entries
// compare equal.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  static SparseMatrix empty(std::size_t n_rows, std::size_t n_cols);
  static SparseMatrix identity(std::size_t n);
  static SparseMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                    std::vector<Triplet> entries,
                                    DuplicatePolicy policy = DuplicatePolicy::sum);
  // Builds a pattern matrix (all values 1) from directed edges.
  static SparseMatrix from_edges(std::size_t n,
                                 std::span<const std::pair<Index, Index>> edges);
  // Validates the raw arrays and takes ownership; throws on any broken
  // CSR invariant.
  static SparseMatrix from_csr(std::size_t n_rows, std::size_t n_cols,
                               std::vector<std::size_t> row_offsets,
                               std::vector<Index> col_indices,
                               std::vector<double> values);
  static SparseMatrix from_dense(std::size_t n_rows, std::size_t n_cols,
                                 std::span<const double> row_major);

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return n_cols_; }
  std::size_t nnz() const noexcept { return col_indices_.size(); }
  bool is_square() const noexcept { return n_rows_ == n_cols_; }
  bool is_pattern() const noexcept;

  std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const Index> col_indices() const noexcept { return col_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const Index> row_cols(std::size_t row) const noexcept {
    return {col_indices_.data() + row_offsets_[row], row_offsets_[row + 1] - row_offsets_[row]};
  }
  std::span<const double> row_values(std::size_t row) const noexcept {
    return {values_.data() + row_offsets_[row], row_offsets_[row + 1] - row_offsets_[row]};
  }

  // Stored value at (row, col), 0 when absent. O(log row length).
  double at(std::size_t row, std::size_t col) const;
  bool contains(std::size_t row, std::size_t col) const;

  std::vector<double> to_dense() const;
  std::vector<Triplet> to_triplets() const;
  // Same support, every value set to 1.
  SparseMatrix pattern() const;

  friend bool operator==(const SparseMatrix& a, const SparseMatrix& b) = default;

 private:
  SparseMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<std::size_t> offsets,
               std::vector<Index> cols, std::vector<double> values)
      : n_rows_(n_rows),
        n_cols_(n_cols),
        row_offsets_(std::move(offsets)),
        col_indices_(std::move(cols)),
        values_(std::move(values)) {}

  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<Index> col_indices_;
  std::vector<double> values_;
};

SparseMatrix transpose(const SparseMatrix& s);

// Row-by-row Gustavson product with a dense accumulator.
SparseMatrix spgemm(const SparseMatrix& a, const SparseMatrix& b,
                    Semiring semiring = Semiring::counted);

SparseMatrix pattern_union(const SparseMatrix& a, const SparseMatrix& b);
SparseMatrix pattern_intersection(const SparseMatrix& a, const SparseMatrix& b);
// Support of `a` minus support of `b`, values taken from `a`.
SparseMatrix pattern_difference(const SparseMatrix& a, const SparseMatrix& b);

SparseMatrix add_self_loops(const SparseMatrix& s);
SparseMatrix remove_self_loops(const SparseMatrix& s);
SparseMatrix apply_selfloop_mode(const SparseMatrix& s, SelfLoopMode mode);

// Number of stored entries per row (out-degree) or per column (in-degree).
std::vector<std::size_t> degrees(const SparseMatrix& s, Axis axis);

// D_r^{-1/2} S' D_c^{-1/2}, with S' = S after `mode` and D_r / D_c the row and
// column value sums of S'. Rows or columns with zero sum stay zero.
SparseMatrix sym_normalize(const SparseMatrix& s, SelfLoopMode mode = SelfLoopMode::keep);

// Matrix Market coordinate text, 1-based, values printed round-trip exact.
void write_matrix_market(std::ostream& out, const SparseMatrix& s);
SparseMatrix read_matrix_market(std::istream& in);

// Tab-separated "src<TAB>dst" lines, 0-based, '#' starts a comment.
std::vector<std::pair<Index, Index>> read_edge_list(std::istream& in);
void write_edge_list(std::ostream& out, const SparseMatrix& adjacency);

}  // namespace scalenet
