#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace clonegraph {

/// Tall-skinny dense blocks (n x d) are stored row-major so one row is contiguous.
using DenseRows = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Triplet {
    std::uint32_t row;
    std::uint32_t col;
    double value;
};

/// Compressed sparse row matrix. Products are parallel over rows; every output
/// row is accumulated in stored column order, so results do not depend on the
/// worker count.
class CsrMatrix {
public:
    CsrMatrix() = default;

    /// Duplicate (row, col) entries are summed.
    static CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return values_.size(); }

    const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
    const std::vector<std::uint32_t>& col_idx() const noexcept { return col_idx_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::vector<double>& values() noexcept { return values_; }

    /// this * x, with x of shape cols() x k.
    DenseRows multiply(const DenseRows& x) const;

    CsrMatrix transpose() const;

    /// Rows scaled to unit L1 norm (rows summing to zero are left untouched).
    CsrMatrix row_normalized() const;

    Eigen::MatrixXd to_dense() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::uint32_t> col_idx_;
    std::vector<double> values_;
};

}  // namespace clonegraph
