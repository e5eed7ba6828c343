#pragma once

#include "qc/dataset.hpp"
#include "qc/potential.hpp"

#include <cstddef>
#include <functional>
#include <limits>

namespace qc {

struct BfgsConfig {
    double grad_tol = 1e-7;
    double step_tol = 1e-10;
    std::size_t max_iters = 200;
    double armijo_c = 1e-4;
    double backtrack_factor = 0.5;
    double max_step = std::numeric_limits<double>::infinity();   // longest step per iteration

    /// Throws InvalidArgument if any field is outside its domain.
    void validate() const;
};

enum class StopReason {
    GradientTolerance,
    StepTolerance,
    LineSearchStalled,   // no step longer than step_tol decreases f
    MaxIterations,
};

struct MinimizeOutcome {
    Vector x_star;
    double f_star = 0.0;
    std::size_t iterations = 0;
    bool converged = false;   // stopped on grad_tol or step_tol
    StopReason reason = StopReason::MaxIterations;
};

/// One accepted BFGS step, reported to an optional observer.
struct IterationRecord {
    std::size_t iteration = 0;
    double f_before = 0.0;
    double f_after = 0.0;
    double step_size = 0.0;       // line-search multiplier alpha
    double step_length = 0.0;     // |x_{t+1} - x_t|
    double directional = 0.0;     // grad^T p at the start of the step, < 0
    bool hessian_reset = false;   // inverse Hessian was reset to identity after this step
};

using Objective = std::function<double(const Vector&)>;
using Gradient = std::function<Vector(const Vector&)>;
using IterationObserver = std::function<void(const IterationRecord&)>;

/// Full-memory BFGS with identity start and Armijo backtracking.
///
/// Stops when |grad| <= grad_tol or the accepted step is <= step_tol
/// (converged), or when the line search stalls or max_iters is reached (not
/// converged). The inverse
/// Hessian is reset to identity whenever s^T y <= 1e-12 |s| |y|. Trial points
/// with non-finite objective are rejected by the line search; a non-finite
/// value or gradient at an accepted point throws NumericalError.
MinimizeOutcome minimize(const Objective& f, const Gradient& grad, const Vector& x0,
                         const BfgsConfig& cfg = {}, const IterationObserver& observer = {});

/// Largest step descend_point takes, as a multiple of sigma. Longer steps can
/// hop over a ridge into a neighbouring basin.
inline constexpr double kDescentStepPerSigma = 0.5;

/// Descends x0 on the field's potential (or its negation in inverse mode),
/// with max_step lowered to kDescentStepPerSigma * sigma if it is larger.
MinimizeOutcome descend_point(const PotentialField& field, const Vector& x0,
                              const BfgsConfig& cfg = {});

}  // namespace qc
