#pragma once

#include "qc/dataset.hpp"
#include "qc/optimizer.hpp"
#include "qc/potential.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace qc {

inline constexpr std::size_t kDefaultHistogramBins = 50;

/// Uniform histogram of pairwise distances over [0, max distance]. Bins are
/// right-closed, (edge[j], edge[j+1]], except the first which includes 0.
struct DistanceHistogram {
    std::vector<double> bin_edges;
    std::vector<std::size_t> counts;
    double mode_bin_center = 0.0;
};

struct SigmaEstimate {
    KernelWidth sigma;
    DistanceHistogram histogram;
};

/// Picks sigma as the centre of the most populated pairwise-distance bin,
/// ties going to the smaller bin. Throws DataError for n < 2 or when every
/// point coincides, InvalidArgument for num_bins == 0.
SigmaEstimate estimate_sigma(const Dataset& dataset, std::size_t num_bins = kDefaultHistogramBins);

struct Partition {
    std::vector<std::size_t> labels;
    std::vector<std::size_t> cluster_sizes;
};

/// Single-linkage grouping of converged positions: i and j share a label iff a
/// chain of positions with consecutive distances <= merge_radius joins them.
/// Labels are numbered in order of first appearance.
Partition assign_clusters(const Matrix& converged, double merge_radius);

/// flag[i] = cluster_sizes[labels[i]] < k.
std::vector<bool> label_outliers(const std::vector<std::size_t>& labels,
                                 const std::vector<std::size_t>& cluster_sizes, std::size_t k);

/// Default outlier threshold max(2, ceil(0.05 n)).
std::size_t default_outlier_threshold(std::size_t n);

struct QcParams {
    std::optional<double> sigma;          // nullopt: estimate from the distance histogram
    std::optional<std::size_t> k;         // nullopt: default_outlier_threshold(n)
    std::optional<double> merge_radius;   // nullopt: sigma / 4
    PotentialMode mode = PotentialMode::Direct;
    BfgsConfig opt;
    std::size_t num_bins = kDefaultHistogramBins;
    std::size_t threads = 0;              // 0: hardware concurrency
};

/// Parameters after "auto" values were filled in.
struct ResolvedParams {
    double sigma = 0.0;
    std::size_t k = 0;
    double merge_radius = 0.0;
    PotentialMode mode = PotentialMode::Direct;
    bool sigma_estimated = false;
};

ResolvedParams resolve_params(const Dataset& dataset, const QcParams& params);

struct ClusterResult {
    ResolvedParams params;
    Matrix converged;
    std::vector<std::size_t> labels;
    std::vector<std::size_t> cluster_sizes;
    std::vector<bool> outlier_flags;
    std::size_t non_converged = 0;
    std::vector<std::string> warnings;

    std::size_t cluster_count() const noexcept { return cluster_sizes.size(); }
    std::size_t outlier_count() const;
};

/// Descends every point on the potential, merges the basin minima and flags
/// members of clusters smaller than k. Deterministic regardless of threads.
ClusterResult detect(const Dataset& dataset, const QcParams& params);

}  // namespace qc
