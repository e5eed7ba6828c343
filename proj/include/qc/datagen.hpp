#pragma once

#include "qc/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qc {

/// Counter-based generator: the i-th draw for a seed is
/// splitmix64_mix(mix(seed) + i * 0x9E3779B97F4A7C15), with the standard
/// splitmix64 finalizer as mix. Reproducible across platforms and languages.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed);

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);
    /// Standard normal by Box-Muller; consumes two draws, keeps no spare.
    double normal();

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64_mix(std::uint64_t z);

enum class ScenarioId { A, B, C, D, E, F };

char scenario_letter(ScenarioId id);
/// Accepts "A".."F" (case-insensitive). Throws InvalidArgument otherwise.
ScenarioId parse_scenario_id(std::string_view text);

/// Named numeric knobs of a scenario, in a fixed documented order.
class ScenarioParams {
public:
    static ScenarioParams defaults(ScenarioId id);

    double get(std::string_view name) const;
    std::size_t count(std::string_view name) const;   // get() checked to be a non-negative integer
    void set(std::string_view name, double value);
    /// Applies "name=value,name=value". Unknown names throw InvalidArgument.
    void apply_overrides(std::string_view spec);

    const std::vector<std::pair<std::string, double>>& entries() const noexcept { return entries_; }

private:
    std::vector<std::pair<std::string, double>> entries_;
};

struct Scenario {
    ScenarioId id;
    std::uint64_t seed;
    ScenarioParams params;
    Dataset dataset;
    std::vector<bool> truth;   // planted anomalies

    std::size_t planted_count() const;
};

/// Micro-cluster offsets (C, E) are Gaussian truncated at this many spreads.
inline constexpr double kMicroClusterTruncation = 3.0;

/// Normal points come first, planted anomalies last. Throws InvalidArgument
/// for out-of-range knobs. Lengths below are in units of the scenario spread s.
///
///   A  blob N(0, s^2 I); anomalies at uniform angle, radius in
///      [outlier_min_radius, outlier_max_radius].
///   B  ring of radius ring_radius with normal radial jitter ring_width;
///      anomalies uniform in the disk of radius outlier_max_radius.
///   C  blob; micro-cluster centred cluster_distance away at a random angle,
///      so every planted point is >= cluster_distance - 3 cluster_spread from
///      the blob centre.
///   D  dense blob at the origin, sparse blob (spread sparse_spread_ratio)
///      centred at (sparse_offset, 0); P1 at (-outlier_distance, 0).
///   E  blob; two micro-clusters at radius cluster_radius, angles t0 and
///      t0 + cluster_angle_gap.
///   F  dense_count points uniform on the square of side `side` outside the
///      hole of radius hole_radius; sparse points uniform in the disk of
///      radius sparse_fill * hole_radius.
Scenario generate(ScenarioId id, std::uint64_t seed, const ScenarioParams& params);
Scenario generate(ScenarioId id, std::uint64_t seed);

}  // namespace qc
