#pragma once

#include "qc/dataset.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace qc {

struct Standardized {
    Matrix data;
    Vector mean;      // per retained column
    Vector stddev;    // population standard deviation, per retained column
    std::vector<std::size_t> kept_columns;
    std::vector<std::size_t> dropped_columns;   // constant columns
};

/// Centres every column and scales it to unit population standard deviation.
/// Constant columns are dropped and listed in dropped_columns.
Standardized standardize(const Matrix& matrix);

struct Imputed {
    Matrix data;
    std::vector<std::size_t> kept_columns;
    std::vector<std::size_t> dropped_columns;   // columns holding only the sentinel
    std::size_t replaced = 0;
};

/// Replaces exact matches of `sentinel` with the mean of the other entries in
/// the same column. Columns made only of sentinels are dropped.
Imputed impute_missing(const Matrix& matrix, double sentinel);

struct PcaModel {
    Vector mean;
    Matrix components;                        // m x d, orthonormal rows
    std::vector<double> explained_variance;   // eigenvalues, descending
    std::vector<double> explained_variance_ratio;
    std::vector<std::string> diagnostics;

    std::size_t component_count() const noexcept {
        return static_cast<std::size_t>(components.rows());
    }
    double total_ratio() const;
};

/// Top-m principal directions of the sample covariance (n - 1 denominator).
/// Each component is signed so its largest-magnitude entry is positive.
/// Directions with numerically zero variance are not returned; a diagnostic
/// records the shortfall.
PcaModel pca_fit(const Matrix& matrix, std::size_t m);

/// (matrix - mean) * components^T.
Matrix pca_project(const PcaModel& model, const Matrix& matrix);

}  // namespace qc
