#pragma once

#include "qc/dataset.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace qc {

enum class PotentialMode { Direct, Inverse };

/// Gaussian kernel width. Always positive and finite.
class KernelWidth {
public:
    /// Throws InvalidArgument unless 0 < sigma < inf.
    explicit KernelWidth(double sigma);
    double value() const noexcept { return sigma_; }

private:
    double sigma_;
};

/// Below this the plain kernel sum is considered underflowed and the
/// evaluation is redone with every exponent shifted by the nearest point.
inline constexpr double kWaveFunctionFloor = 1e-300;

struct PotentialValue {
    double value = 0.0;
    Vector gradient;
};

struct GridSpec {
    std::array<double, 2> lo{};
    std::array<double, 2> hi{};
    std::array<std::size_t, 2> resolution{};
};

/// Potential sampled on a regular lattice. values(iy, ix) is the potential at
/// (xs[ix], ys[iy]); rows run along the second axis.
struct PotentialGrid {
    std::vector<double> xs;
    std::vector<double> ys;
    Matrix values;
};

/// Quantum potential induced by a Gaussian-kernel wave function centred on the
/// dataset points.
///
///   psi(x) = sum_i exp(-|x - x_i|^2 / 2 sigma^2)
///   v(x)   = sum_i |x - x_i|^2 exp(-|x - x_i|^2 / 2 sigma^2) / (2 sigma^2 psi(x))
///
/// Inverse mode reports -v (and -grad v), so minimizers of the field are the
/// maxima of v. All members are const and safe to call concurrently.
class PotentialField {
public:
    PotentialField(Dataset dataset, KernelWidth sigma, PotentialMode mode = PotentialMode::Direct);

    const Dataset& dataset() const noexcept { return dataset_; }
    double sigma() const noexcept { return sigma_; }
    PotentialMode mode() const noexcept { return mode_; }
    std::size_t dim() const noexcept { return dataset_.dim(); }

    /// psi(x). Independent of mode. May underflow to 0 far from the data.
    double wave_function(const Eigen::Ref<const Vector>& x) const;

    double potential(const Eigen::Ref<const Vector>& x) const;
    Vector gradient(const Eigen::Ref<const Vector>& x) const;
    PotentialValue evaluate(const Eigen::Ref<const Vector>& x) const;

    /// Potential at every dataset point, in row order. Theta(n^2 d).
    Vector potential_at_data() const;

private:
    // Sums shared by value and gradient. Exponents are offset by `shift`
    // (a squared distance) so the ratios are unaffected.
    struct Sums {
        double psi = 0.0;
        double weighted_r2 = 0.0;
    };

    void check_query(const Eigen::Ref<const Vector>& x) const;
    Sums sums(const Eigen::Ref<const Vector>& x, double shift) const;
    double nearest_r2(const Eigen::Ref<const Vector>& x) const;
    double sign() const noexcept { return mode_ == PotentialMode::Inverse ? -1.0 : 1.0; }

    Dataset dataset_;
    double sigma_;
    double inv_two_sigma2_;
    PotentialMode mode_;
};

/// Samples the field on a 2-D lattice. Each cell equals field.potential().
/// Throws InvalidArgument for d != 2, lo >= hi, or resolution < 2.
PotentialGrid potential_grid(const PotentialField& field, const GridSpec& spec);

}  // namespace qc
