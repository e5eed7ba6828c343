#include "qc/preprocess.hpp"

#include "qc/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qc {

namespace {

Matrix select_columns(const Matrix& m, const std::vector<std::size_t>& cols) {
    Matrix out(m.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        out.col(static_cast<Eigen::Index>(j)) = m.col(static_cast<Eigen::Index>(cols[j]));
    }
    return out;
}

}  // namespace

Standardized standardize(const Matrix& matrix) {
    if (matrix.rows() < 1 || matrix.cols() < 1) {
        throw DataError("cannot standardize an empty matrix");
    }
    const double n = static_cast<double>(matrix.rows());
    Standardized out;
    std::vector<double> means;
    std::vector<double> sds;
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
        const auto col = matrix.col(j);
        const double mean = col.sum() / n;
        const double var = (col.array() - mean).square().sum() / n;
        const double sd = std::sqrt(var);
        const double scale = std::max(1.0, col.cwiseAbs().maxCoeff());
        if (!(sd > 1e-12 * scale)) {
            out.dropped_columns.push_back(static_cast<std::size_t>(j));
            continue;
        }
        out.kept_columns.push_back(static_cast<std::size_t>(j));
        means.push_back(mean);
        sds.push_back(sd);
    }
    if (out.kept_columns.empty()) {
        throw DataError("every column is constant; nothing left to standardize");
    }
    out.data = select_columns(matrix, out.kept_columns);
    out.mean = Eigen::Map<const Vector>(means.data(), static_cast<Eigen::Index>(means.size()));
    out.stddev = Eigen::Map<const Vector>(sds.data(), static_cast<Eigen::Index>(sds.size()));
    for (Eigen::Index j = 0; j < out.data.cols(); ++j) {
        out.data.col(j) = (out.data.col(j).array() - out.mean[j]) / out.stddev[j];
    }
    return out;
}

Imputed impute_missing(const Matrix& matrix, double sentinel) {
    Imputed out;
    std::vector<double> fill;
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
        double sum = 0.0;
        std::size_t count = 0;
        for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
            if (matrix(i, j) != sentinel) {
                sum += matrix(i, j);
                ++count;
            }
        }
        if (count == 0) {
            out.dropped_columns.push_back(static_cast<std::size_t>(j));
            continue;
        }
        out.kept_columns.push_back(static_cast<std::size_t>(j));
        fill.push_back(sum / static_cast<double>(count));
    }
    out.data = select_columns(matrix, out.kept_columns);
    for (Eigen::Index j = 0; j < out.data.cols(); ++j) {
        for (Eigen::Index i = 0; i < out.data.rows(); ++i) {
            if (out.data(i, j) == sentinel) {
                out.data(i, j) = fill[static_cast<std::size_t>(j)];
                ++out.replaced;
            }
        }
    }
    return out;
}

double PcaModel::total_ratio() const {
    return std::accumulate(explained_variance_ratio.begin(), explained_variance_ratio.end(), 0.0);
}

PcaModel pca_fit(const Matrix& matrix, std::size_t m) {
    const auto n = static_cast<std::size_t>(matrix.rows());
    const auto d = static_cast<std::size_t>(matrix.cols());
    if (n < 2 || d < 1) {
        throw DataError("PCA needs at least two rows and one column");
    }
    if (m < 1 || m > std::min(n - 1, d)) {
        throw InvalidArgument("component count must lie in [1, " + std::to_string(std::min(n - 1, d)) +
                              "], got " + std::to_string(m));
    }
    if (!matrix.allFinite()) {
        throw DataError("PCA input contains non-finite values");
    }

    PcaModel model;
    model.mean = matrix.colwise().mean().transpose();
    const Eigen::MatrixXd centered = matrix.rowwise() - model.mean.transpose();
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw DataError("covariance eigendecomposition did not converge");
    }
    // Eigen returns ascending eigenvalues.
    const Vector evals = solver.eigenvalues().reverse().cwiseMax(0.0);
    const Eigen::MatrixXd evecs = solver.eigenvectors().rowwise().reverse();
    const double total = evals.sum();
    if (!(total > 0.0)) {
        throw DataError("PCA input has zero total variance");
    }

    const double floor = 1e-12 * evals[0];
    std::size_t available = 0;
    while (available < m && evals[static_cast<Eigen::Index>(available)] > floor) ++available;
    if (available < m) {
        model.diagnostics.push_back("covariance has rank " + std::to_string(available) + " < " +
                                    std::to_string(m) + " requested components; returning " +
                                    std::to_string(available));
    }

    model.components.resize(static_cast<Eigen::Index>(available), static_cast<Eigen::Index>(d));
    for (std::size_t c = 0; c < available; ++c) {
        Vector v = evecs.col(static_cast<Eigen::Index>(c));
        Eigen::Index pivot = 0;
        v.cwiseAbs().maxCoeff(&pivot);
        if (v[pivot] < 0.0) v = -v;
        model.components.row(static_cast<Eigen::Index>(c)) = v.normalized().transpose();
        const double lambda = evals[static_cast<Eigen::Index>(c)];
        model.explained_variance.push_back(lambda);
        model.explained_variance_ratio.push_back(lambda / total);
    }
    return model;
}

Matrix pca_project(const PcaModel& model, const Matrix& matrix) {
    if (matrix.cols() != model.mean.size()) {
        throw InvalidArgument("matrix has " + std::to_string(matrix.cols()) + " columns, model expects " +
                              std::to_string(model.mean.size()));
    }
    return (matrix.rowwise() - model.mean.transpose()) * model.components.transpose();
}

}  // namespace qc
