#include "qc/potential.hpp"

#include "qc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace qc {

KernelWidth::KernelWidth(double sigma) : sigma_(sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw InvalidArgument("kernel width must satisfy sigma > 0 and be finite, got " +
                              std::to_string(sigma));
    }
}

PotentialField::PotentialField(Dataset dataset, KernelWidth sigma, PotentialMode mode)
    : dataset_(std::move(dataset)),
      sigma_(sigma.value()),
      inv_two_sigma2_(1.0 / (2.0 * sigma.value() * sigma.value())),
      mode_(mode) {}

void PotentialField::check_query(const Eigen::Ref<const Vector>& x) const {
    if (static_cast<std::size_t>(x.size()) != dim()) {
        throw InvalidArgument("query has dimension " + std::to_string(x.size()) +
                              ", dataset has dimension " + std::to_string(dim()));
    }
    if (!x.allFinite()) {
        throw DataError("query point has a non-finite coordinate");
    }
}

double PotentialField::nearest_r2(const Eigen::Ref<const Vector>& x) const {
    const auto& pts = dataset_.points();
    const Eigen::Index d = pts.cols();
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        const double* row = pts.row(i).data();
        double r2 = 0.0;
        for (Eigen::Index k = 0; k < d; ++k) {
            const double diff = x[k] - row[k];
            r2 += diff * diff;
        }
        best = std::min(best, r2);
    }
    return best;
}

PotentialField::Sums PotentialField::sums(const Eigen::Ref<const Vector>& x, double shift) const {
    const auto& pts = dataset_.points();
    const Eigen::Index d = pts.cols();
    Sums s;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        const double* row = pts.row(i).data();
        double r2 = 0.0;
        for (Eigen::Index k = 0; k < d; ++k) {
            const double diff = x[k] - row[k];
            r2 += diff * diff;
        }
        const double w = std::exp(-(r2 - shift) * inv_two_sigma2_);
        s.psi += w;
        s.weighted_r2 += r2 * w;
    }
    return s;
}

double PotentialField::wave_function(const Eigen::Ref<const Vector>& x) const {
    check_query(x);
    return sums(x, 0.0).psi;
}

double PotentialField::potential(const Eigen::Ref<const Vector>& x) const {
    check_query(x);
    Sums s = sums(x, 0.0);
    if (!(s.psi >= kWaveFunctionFloor)) {
        s = sums(x, nearest_r2(x));
    }
    const double v = inv_two_sigma2_ * s.weighted_r2 / s.psi;
    if (!std::isfinite(v)) {
        throw DataError("potential query is outside the support of the wave function");
    }
    return sign() * v;
}

PotentialValue PotentialField::evaluate(const Eigen::Ref<const Vector>& x) const {
    check_query(x);
    const auto& pts = dataset_.points();
    const Eigen::Index d = pts.cols();

    // psi, S = sum r^2 w, g1 = sum w (x - x_i), g2 = sum w r^2 (x - x_i).
    // grad psi = -2a g1, grad S = 2 g1 - 2a g2, v = a S / psi with a = 1/(2 sigma^2).
    auto accumulate = [&](double shift, double& psi, double& s, Vector& g1, Vector& g2) {
        psi = 0.0;
        s = 0.0;
        g1.setZero(d);
        g2.setZero(d);
        for (Eigen::Index i = 0; i < pts.rows(); ++i) {
            const double* row = pts.row(i).data();
            double r2 = 0.0;
            for (Eigen::Index k = 0; k < d; ++k) {
                const double diff = x[k] - row[k];
                r2 += diff * diff;
            }
            const double w = std::exp(-(r2 - shift) * inv_two_sigma2_);
            const double wr2 = w * r2;
            psi += w;
            s += wr2;
            for (Eigen::Index k = 0; k < d; ++k) {
                const double diff = x[k] - row[k];
                g1[k] += w * diff;
                g2[k] += wr2 * diff;
            }
        }
    };

    double psi = 0.0;
    double s = 0.0;
    Vector g1;
    Vector g2;
    accumulate(0.0, psi, s, g1, g2);
    if (!(psi >= kWaveFunctionFloor)) {
        accumulate(nearest_r2(x), psi, s, g1, g2);
    }

    const double a = inv_two_sigma2_;
    const double ratio = s / psi;
    PotentialValue out;
    out.value = a * ratio;
    out.gradient = a * ((2.0 * g1 - 2.0 * a * g2) / psi + (2.0 * a * ratio / psi) * g1);
    if (!std::isfinite(out.value) || !out.gradient.allFinite()) {
        throw DataError("potential query is outside the support of the wave function");
    }
    if (mode_ == PotentialMode::Inverse) {
        out.value = -out.value;
        out.gradient = -out.gradient;
    }
    return out;
}

Vector PotentialField::gradient(const Eigen::Ref<const Vector>& x) const {
    return evaluate(x).gradient;
}

Vector PotentialField::potential_at_data() const {
    const auto& pts = dataset_.points();
    Vector out(pts.rows());
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        out[i] = potential(pts.row(i).transpose());
    }
    return out;
}

PotentialGrid potential_grid(const PotentialField& field, const GridSpec& spec) {
    if (field.dim() != 2) {
        throw InvalidArgument("potential grids require 2-D data, dataset has dimension " +
                              std::to_string(field.dim()));
    }
    for (int axis = 0; axis < 2; ++axis) {
        if (!std::isfinite(spec.lo[axis]) || !std::isfinite(spec.hi[axis]) ||
            !(spec.lo[axis] < spec.hi[axis])) {
            throw InvalidArgument("grid bounds must satisfy lo < hi on every axis");
        }
        if (spec.resolution[axis] < 2) {
            throw InvalidArgument("grid resolution must be at least 2 on every axis");
        }
    }

    auto axis_points = [&](int axis) {
        const std::size_t count = spec.resolution[axis];
        const double step = (spec.hi[axis] - spec.lo[axis]) / static_cast<double>(count - 1);
        std::vector<double> coords(count);
        for (std::size_t j = 0; j < count; ++j) {
            coords[j] = spec.lo[axis] + step * static_cast<double>(j);
        }
        coords.back() = spec.hi[axis];
        return coords;
    };

    PotentialGrid grid;
    grid.xs = axis_points(0);
    grid.ys = axis_points(1);
    grid.values.resize(static_cast<Eigen::Index>(grid.ys.size()),
                       static_cast<Eigen::Index>(grid.xs.size()));
    Vector q(2);
    for (std::size_t iy = 0; iy < grid.ys.size(); ++iy) {
        for (std::size_t ix = 0; ix < grid.xs.size(); ++ix) {
            q << grid.xs[ix], grid.ys[iy];
            grid.values(static_cast<Eigen::Index>(iy), static_cast<Eigen::Index>(ix)) =
                field.potential(q);
        }
    }
    return grid;
}

}  // namespace qc
