#include "clonegraph/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "clonegraph/error.hpp"
#include "clonegraph/parallel.hpp"

namespace clonegraph {

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
    for (const auto& t : triplets) {
        if (t.row >= rows || t.col >= cols) throw Error("sparse triplet out of range");
    }
    std::sort(triplets.begin(), triplets.end(),
              [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });

    CsrMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.row_ptr_.assign(rows + 1, 0);
    m.col_idx_.reserve(triplets.size());
    m.values_.reserve(triplets.size());
    for (std::size_t i = 0; i < triplets.size(); ++i) {
        const auto& t = triplets[i];
        if (i > 0 && triplets[i - 1].row == t.row && triplets[i - 1].col == t.col) {
            m.values_.back() += t.value;
            continue;
        }
        m.col_idx_.push_back(t.col);
        m.values_.push_back(t.value);
        ++m.row_ptr_[t.row + 1];
    }
    for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
    return m;
}

DenseRows CsrMatrix::multiply(const DenseRows& x) const {
    if (static_cast<std::size_t>(x.rows()) != cols_) throw Error("sparse product dimension mismatch");
    DenseRows out = DenseRows::Zero(static_cast<Eigen::Index>(rows_), x.cols());
    parallel_for(0, rows_, 1024, [&](std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r) {
            auto row = out.row(static_cast<Eigen::Index>(r));
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
                row.noalias() += values_[k] * x.row(col_idx_[k]);
            }
        }
    });
    return out;
}

CsrMatrix CsrMatrix::transpose() const {
    std::vector<Triplet> t;
    t.reserve(nnz());
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            t.push_back({col_idx_[k], static_cast<std::uint32_t>(r), values_[k]});
        }
    }
    return from_triplets(cols_, rows_, std::move(t));
}

CsrMatrix CsrMatrix::row_normalized() const {
    CsrMatrix m = *this;
    for (std::size_t r = 0; r < rows_; ++r) {
        double sum = 0.0;
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) sum += std::abs(values_[k]);
        if (sum == 0.0) continue;
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) m.values_[k] /= sum;
    }
    return m;
}

Eigen::MatrixXd CsrMatrix::to_dense() const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            d(static_cast<Eigen::Index>(r), col_idx_[k]) += values_[k];
        }
    }
    return d;
}

}  // namespace clonegraph
