#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace qc {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Immutable n x d matrix of finite coordinates, one point per row.
class Dataset {
public:
    /// Throws DataError if the matrix is empty or holds a non-finite entry.
    explicit Dataset(Matrix points);

    const Matrix& points() const noexcept { return points_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(points_.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(points_.cols()); }

    Eigen::Map<const Vector> point(std::size_t i) const {
        return Eigen::Map<const Vector>(points_.row(static_cast<Eigen::Index>(i)).data(),
                                        points_.cols());
    }

private:
    Matrix points_;
};

}  // namespace qc
