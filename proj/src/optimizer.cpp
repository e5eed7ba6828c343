#include "qc/optimizer.hpp"

#include "qc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace qc {

void BfgsConfig::validate() const {
    if (!(grad_tol > 0.0) || !std::isfinite(grad_tol)) {
        throw InvalidArgument("grad_tol must be positive");
    }
    if (!(step_tol > 0.0) || !std::isfinite(step_tol)) {
        throw InvalidArgument("step_tol must be positive");
    }
    if (max_iters < 1) {
        throw InvalidArgument("max_iters must be at least 1");
    }
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) {
        throw InvalidArgument("armijo_c must lie in (0, 1)");
    }
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
        throw InvalidArgument("backtrack_factor must lie in (0, 1)");
    }
    if (!(max_step > 0.0)) {
        throw InvalidArgument("max_step must be positive");
    }
}

namespace {

constexpr double kCurvatureEps = 1e-12;

struct LineSearchResult {
    double alpha = 0.0;
    Vector x;
    double f = 0.0;
};

constexpr int kMaxExpansions = 40;
constexpr double kMaxStep = 1099511627776.0;  // 2^40, matching the expansion cap

bool armijo_ok(double ft, double fx, double alpha, double gtp, const BfgsConfig& cfg) {
    return std::isfinite(ft) && ft <= fx + cfg.armijo_c * alpha * gtp;
}

double eval_trial(const Objective& f, const Vector& trial) {
    return trial.allFinite() ? f(trial) : std::numeric_limits<double>::infinity();
}

// Minimizer of the quadratic through f(0) = fx, f'(0) = gtp and f(alpha) = ft,
// or a non-positive value when that quadratic has no minimum.
double interpolate(double fx, double gtp, double alpha, double ft) {
    const double curvature = ft - fx - gtp * alpha;
    return curvature > 0.0 ? -gtp * alpha * alpha / (2.0 * curvature) : -1.0;
}

// Armijo backtracking from alpha = 1. A rejected trial shrinks alpha by the
// interpolated minimizer, clamped to [0.1, backtrack_factor] of the current
// alpha. An accepted unit step is refined once by interpolation when that
// lowers f, which makes the search exact on quadratics. When `expand` is set
// and the step ends in a concave stretch, it is doubled while the Armijo
// condition holds and f keeps decreasing, so steepest-descent steps do not
// crawl across flat regions.
std::optional<LineSearchResult> line_search(const Objective& f, const Vector& x, double fx,
                                            const Vector& p, double gtp, bool expand,
                                            const BfgsConfig& cfg) {
    const double p_norm = p.norm();
    const double alpha_max = cfg.max_step / p_norm;
    double alpha = std::min(1.0, alpha_max);
    bool first = true;
    while (alpha * p_norm > cfg.step_tol) {
        Vector trial = x + alpha * p;
        const double ft = eval_trial(f, trial);
        if (armijo_ok(ft, fx, alpha, gtp, cfg)) {
            LineSearchResult best{alpha, std::move(trial), ft};
            if (!first) return best;
            const double aq = interpolate(fx, gtp, alpha, ft);
            if (aq > 0.0) {
                if (std::abs(aq - alpha) > 1e-3 * alpha && aq <= alpha_max && aq < kMaxStep) {
                    Vector tq = x + aq * p;
                    const double fq = eval_trial(f, tq);
                    if (armijo_ok(fq, fx, aq, gtp, cfg) && fq < best.f) best = LineSearchResult{aq, std::move(tq), fq};
                }
            } else if (expand) {
                for (int e = 0; e < kMaxExpansions; ++e) {
                    const double a2 = 2.0 * best.alpha;
                    if (a2 > alpha_max) break;
                    Vector t2 = x + a2 * p;
                    const double f2 = eval_trial(f, t2);
                    if (!armijo_ok(f2, fx, a2, gtp, cfg) || !(f2 < best.f)) break;
                    best = LineSearchResult{a2, std::move(t2), f2};
                }
            }
            return best;
        }
        first = false;
        double next = alpha * cfg.backtrack_factor;
        if (std::isfinite(ft)) {
            const double aq = interpolate(fx, gtp, alpha, ft);
            if (aq > 0.1 * alpha && aq < next) next = aq;
        }
        alpha = next;
    }
    return std::nullopt;
}

}  // namespace

MinimizeOutcome minimize(const Objective& f, const Gradient& grad, const Vector& x0,
                         const BfgsConfig& cfg, const IterationObserver& observer) {
    cfg.validate();
    const Eigen::Index d = x0.size();

    Vector x = x0;
    double fx = f(x);
    Vector g = grad(x);
    if (!std::isfinite(fx) || !g.allFinite()) {
        throw NumericalError("objective or gradient is non-finite at the starting point");
    }

    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(d, d);
    bool h_is_identity = true;

    MinimizeOutcome out;
    std::size_t iter = 0;
    while (true) {
        if (g.norm() <= cfg.grad_tol) {
            out.reason = StopReason::GradientTolerance;
            break;
        }
        if (iter >= cfg.max_iters) {
            out.reason = StopReason::MaxIterations;
            break;
        }

        Vector p = -(h * g);
        double gtp = g.dot(p);
        if (!(gtp < 0.0)) {
            h.setIdentity();
            h_is_identity = true;
            p = -g;
            gtp = -g.squaredNorm();
        }

        auto step = line_search(f, x, fx, p, gtp, h_is_identity, cfg);
        if (!step && !h_is_identity) {
            h.setIdentity();
            h_is_identity = true;
            p = -g;
            gtp = -g.squaredNorm();
            step = line_search(f, x, fx, p, gtp, true, cfg);
        }
        if (!step) {
            out.reason = StopReason::LineSearchStalled;
            break;
        }

        Vector g_new = grad(step->x);
        if (!g_new.allFinite()) {
            throw NumericalError("gradient is non-finite at iteration " + std::to_string(iter));
        }
        const Vector s = step->x - x;
        const Vector y = g_new - g;

        IterationRecord rec;
        rec.iteration = iter;
        rec.f_before = fx;
        rec.f_after = step->f;
        rec.step_size = step->alpha;
        rec.directional = gtp;
        rec.step_length = s.norm();

        x = std::move(step->x);
        fx = step->f;
        g = std::move(g_new);
        ++iter;

        const double s_norm = rec.step_length;
        const double sy = s.dot(y);
        if (sy <= kCurvatureEps * s_norm * y.norm()) {
            h.setIdentity();
            h_is_identity = true;
            rec.hessian_reset = true;
        } else {
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T, expanded.
            const double rho = 1.0 / sy;
            const Vector hy = h * y;
            const double yhy = y.dot(hy);
            h += (rho * rho * yhy + rho) * (s * s.transpose()) -
                 rho * (hy * s.transpose() + s * hy.transpose());
            h_is_identity = false;
        }
        if (observer) {
            observer(rec);
        }
        if (s_norm <= cfg.step_tol) {
            out.reason = StopReason::StepTolerance;
            break;
        }
    }

    out.converged = out.reason == StopReason::GradientTolerance ||
                    out.reason == StopReason::StepTolerance;
    out.x_star = std::move(x);
    out.f_star = fx;
    out.iterations = iter;
    return out;
}

MinimizeOutcome descend_point(const PotentialField& field, const Vector& x0, const BfgsConfig& cfg) {
    // The line search asks for f at the point whose gradient is requested
    // next, so one combined evaluation is cached and reused.
    struct Cache {
        Vector x;
        PotentialValue value;
    } cache;
    auto lookup = [&](const Vector& x) -> const PotentialValue& {
        if (cache.x.size() != x.size() || cache.x != x) {
            cache.value = field.evaluate(x);
            cache.x = x;
        }
        return cache.value;
    };
    // Points the field cannot evaluate (coordinates far past the data in
    // inverse mode) are rejected by the line search rather than aborting.
    const Objective f = [&](const Vector& x) {
        try {
            return lookup(x).value;
        } catch (const DataError&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    const Gradient g = [&](const Vector& x) { return lookup(x).gradient; };
    BfgsConfig capped = cfg;
    capped.max_step = std::min(cfg.max_step, kDescentStepPerSigma * field.sigma());
    return minimize(f, g, x0, capped);
}

}  // namespace qc
