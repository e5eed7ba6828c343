#include "qc/dataset.hpp"

#include "qc/error.hpp"

#include <cmath>
#include <string>

namespace qc {

Dataset::Dataset(Matrix points) : points_(std::move(points)) {
    if (points_.rows() < 1 || points_.cols() < 1) {
        throw DataError("dataset must contain at least one point of dimension >= 1");
    }
    for (Eigen::Index i = 0; i < points_.rows(); ++i) {
        for (Eigen::Index j = 0; j < points_.cols(); ++j) {
            if (!std::isfinite(points_(i, j))) {
                throw DataError("non-finite coordinate at row " + std::to_string(i) +
                                ", column " + std::to_string(j));
            }
        }
    }
}

}  // namespace qc
