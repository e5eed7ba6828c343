#include "qc/clustering.hpp"

#include "qc/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

namespace qc {

namespace {

double pair_distance(const Matrix& pts, Eigen::Index i, Eigen::Index j) {
    return (pts.row(i) - pts.row(j)).norm();
}

class DisjointSet {
public:
    explicit DisjointSet(std::size_t n) : parent_(n), rank_(n, 0) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t i) {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<unsigned char> rank_;
};

}  // namespace

SigmaEstimate estimate_sigma(const Dataset& dataset, std::size_t num_bins) {
    if (num_bins == 0) {
        throw InvalidArgument("histogram needs at least one bin");
    }
    const auto& pts = dataset.points();
    const auto n = pts.rows();
    if (n < 2) {
        throw DataError("sigma estimation needs at least two points");
    }

    double max_dist = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            max_dist = std::max(max_dist, pair_distance(pts, i, j));
        }
    }
    if (!(max_dist > 0.0)) {
        throw DataError("sigma estimation failed: all points coincide");
    }

    DistanceHistogram hist;
    hist.bin_edges.resize(num_bins + 1);
    for (std::size_t b = 0; b <= num_bins; ++b) {
        hist.bin_edges[b] = max_dist * static_cast<double>(b) / static_cast<double>(num_bins);
    }
    hist.bin_edges.back() = max_dist;
    hist.counts.assign(num_bins, 0);

    const double width = max_dist / static_cast<double>(num_bins);
    const auto& edges = hist.bin_edges;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double dist = pair_distance(pts, i, j);
            const double guess = std::ceil(dist / width) - 1.0;
            std::size_t b = guess <= 0.0 ? 0 : std::min(static_cast<std::size_t>(guess), num_bins - 1);
            while (b > 0 && dist <= edges[b]) --b;
            while (b + 1 < num_bins && dist > edges[b + 1]) ++b;
            ++hist.counts[b];
        }
    }

    const auto mode = static_cast<std::size_t>(
        std::max_element(hist.counts.begin(), hist.counts.end()) - hist.counts.begin());
    hist.mode_bin_center = 0.5 * (edges[mode] + edges[mode + 1]);
    return SigmaEstimate{KernelWidth(hist.mode_bin_center), std::move(hist)};
}

Partition assign_clusters(const Matrix& converged, double merge_radius) {
    if (!(merge_radius > 0.0) || !std::isfinite(merge_radius)) {
        throw InvalidArgument("merge radius must be positive and finite");
    }
    const auto n = static_cast<std::size_t>(converged.rows());
    if (n > 0 && converged.cols() < 1) {
        throw DataError("converged positions have no coordinates");
    }
    for (Eigen::Index i = 0; i < converged.rows(); ++i) {
        if (!converged.row(i).allFinite()) {
            throw DataError("converged position " + std::to_string(i) + " is non-finite");
        }
    }

    // Sweep along the first coordinate: only pairs within merge_radius on that
    // axis can be within merge_radius overall.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return converged(static_cast<Eigen::Index>(a), 0) < converged(static_cast<Eigen::Index>(b), 0);
    });

    DisjointSet sets(n);
    const double r2 = merge_radius * merge_radius;
    for (std::size_t a = 0; a < n; ++a) {
        const auto ia = static_cast<Eigen::Index>(order[a]);
        for (std::size_t b = a + 1; b < n; ++b) {
            const auto ib = static_cast<Eigen::Index>(order[b]);
            if (converged(ib, 0) - converged(ia, 0) > merge_radius) break;
            if ((converged.row(ia) - converged.row(ib)).squaredNorm() <= r2) {
                sets.unite(order[a], order[b]);
            }
        }
    }

    Partition out;
    out.labels.resize(n);
    std::vector<std::size_t> label_of_root(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = sets.find(i);
        if (label_of_root[root] == n) {
            label_of_root[root] = out.cluster_sizes.size();
            out.cluster_sizes.push_back(0);
        }
        out.labels[i] = label_of_root[root];
        ++out.cluster_sizes[out.labels[i]];
    }
    return out;
}

std::vector<bool> label_outliers(const std::vector<std::size_t>& labels,
                                 const std::vector<std::size_t>& cluster_sizes, std::size_t k) {
    std::vector<bool> flags(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= cluster_sizes.size()) {
            throw InvalidArgument("label " + std::to_string(labels[i]) + " has no cluster size");
        }
        flags[i] = cluster_sizes[labels[i]] < k;
    }
    return flags;
}

std::size_t default_outlier_threshold(std::size_t n) {
    const auto five_percent = static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(n)));
    return std::max<std::size_t>(2, five_percent);
}

std::size_t ClusterResult::outlier_count() const {
    return static_cast<std::size_t>(std::count(outlier_flags.begin(), outlier_flags.end(), true));
}

ResolvedParams resolve_params(const Dataset& dataset, const QcParams& params) {
    params.opt.validate();
    ResolvedParams out;
    out.mode = params.mode;
    if (params.sigma) {
        out.sigma = KernelWidth(*params.sigma).value();
    } else {
        out.sigma = estimate_sigma(dataset, params.num_bins).sigma.value();
        out.sigma_estimated = true;
    }
    if (params.k) {
        if (*params.k < 1) throw InvalidArgument("outlier threshold k must be at least 1");
        out.k = *params.k;
    } else {
        out.k = default_outlier_threshold(dataset.size());
    }
    if (params.merge_radius) {
        if (!(*params.merge_radius > 0.0) || !std::isfinite(*params.merge_radius)) {
            throw InvalidArgument("merge radius must satisfy merge_radius > 0");
        }
        out.merge_radius = *params.merge_radius;
    } else {
        out.merge_radius = out.sigma / 4.0;
    }
    return out;
}

ClusterResult detect(const Dataset& dataset, const QcParams& params) {
    ClusterResult result;
    result.params = resolve_params(dataset, params);
    const PotentialField field(dataset, KernelWidth(result.params.sigma), result.params.mode);

    const std::size_t n = dataset.size();
    result.converged.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dataset.dim()));
    std::vector<unsigned char> converged_flag(n, 0);

    std::size_t workers = params.threads != 0 ? params.threads : std::thread::hardware_concurrency();
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));

    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Vector x0 = dataset.point(i);
            const MinimizeOutcome m = descend_point(field, x0, params.opt);
            result.converged.row(static_cast<Eigen::Index>(i)) = m.x_star.transpose();
            converged_flag[i] = m.converged ? 1 : 0;
        }
    };

    if (workers == 1) {
        run_range(0, n);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = std::min(n, w * chunk);
            const std::size_t end = std::min(n, begin + chunk);
            pool.emplace_back([&, w, begin, end] {
                try {
                    run_range(begin, end);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    result.non_converged =
        static_cast<std::size_t>(std::count(converged_flag.begin(), converged_flag.end(), 0));
    if (result.non_converged > 0) {
        result.warnings.push_back(std::to_string(result.non_converged) + " of " + std::to_string(n) +
                                  " descents stopped at max_iters without converging");
    }

    Partition part = assign_clusters(result.converged, result.params.merge_radius);
    result.labels = std::move(part.labels);
    result.cluster_sizes = std::move(part.cluster_sizes);
    result.outlier_flags = label_outliers(result.labels, result.cluster_sizes, result.params.k);
    return result;
}

}  // namespace qc
