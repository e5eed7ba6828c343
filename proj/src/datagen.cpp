#include "qc/datagen.hpp"

#include "qc/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>

namespace qc {

std::uint64_t splitmix64_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

CounterRng::CounterRng(std::uint64_t seed) : key_(splitmix64_mix(seed)) {}

std::uint64_t CounterRng::next_u64() {
    const std::uint64_t out = splitmix64_mix(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
    ++counter_;
    return out;
}

double CounterRng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double CounterRng::normal() {
    const double u1 = 1.0 - uniform();   // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

char scenario_letter(ScenarioId id) {
    return static_cast<char>('A' + static_cast<int>(id));
}

ScenarioId parse_scenario_id(std::string_view text) {
    if (text.size() == 1) {
        const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
        if (c >= 'A' && c <= 'F') return static_cast<ScenarioId>(c - 'A');
    }
    throw InvalidArgument("unknown scenario '" + std::string(text) + "', expected one of A..F");
}

ScenarioParams ScenarioParams::defaults(ScenarioId id) {
    ScenarioParams p;
    switch (id) {
        case ScenarioId::A:
            p.entries_ = {{"normal_count", 200}, {"spread", 1.0}, {"outlier_count", 5},
                          {"outlier_min_radius", 6.0}, {"outlier_max_radius", 8.0}};
            break;
        case ScenarioId::B:
            p.entries_ = {{"ring_count", 300}, {"ring_radius", 6.0}, {"ring_width", 0.3},
                          {"outlier_count", 4}, {"outlier_max_radius", 2.5}};
            break;
        case ScenarioId::C:
            p.entries_ = {{"normal_count", 200}, {"spread", 1.0}, {"cluster_count", 8},
                          {"cluster_spread", 0.05}, {"cluster_distance", 10.0}};
            break;
        case ScenarioId::D:
            p.entries_ = {{"dense_count", 150}, {"dense_spread", 1.0}, {"sparse_count", 150},
                          {"sparse_spread_ratio", 8.0}, {"sparse_offset", 40.0},
                          {"outlier_distance", 3.0}};
            break;
        case ScenarioId::E:
            p.entries_ = {{"normal_count", 200}, {"spread", 1.0}, {"cluster_count", 8},
                          {"cluster_spread", 0.05}, {"cluster_radius", 4.5},
                          {"cluster_angle_gap", 1.5}};
            break;
        case ScenarioId::F:
            p.entries_ = {{"dense_count", 400}, {"side", 10.0}, {"hole_radius", 2.0},
                          {"sparse_count", 6}, {"sparse_fill", 0.7}};
            break;
    }
    return p;
}

double ScenarioParams::get(std::string_view name) const {
    for (const auto& [key, value] : entries_) {
        if (key == name) return value;
    }
    throw InvalidArgument("unknown scenario parameter '" + std::string(name) + "'");
}

std::size_t ScenarioParams::count(std::string_view name) const {
    const double v = get(name);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e7) {
        throw InvalidArgument("scenario parameter '" + std::string(name) +
                              "' must be a non-negative integer");
    }
    return static_cast<std::size_t>(v);
}

void ScenarioParams::set(std::string_view name, double value) {
    for (auto& [key, v] : entries_) {
        if (key == name) {
            v = value;
            return;
        }
    }
    throw InvalidArgument("unknown scenario parameter '" + std::string(name) + "'");
}

void ScenarioParams::apply_overrides(std::string_view spec) {
    while (!spec.empty()) {
        const auto comma = spec.find(',');
        const std::string_view item = spec.substr(0, comma);
        spec = comma == std::string_view::npos ? std::string_view{} : spec.substr(comma + 1);
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) {
            throw InvalidArgument("scenario override '" + std::string(item) + "' is not name=value");
        }
        const std::string_view name = item.substr(0, eq);
        const std::string_view text = item.substr(eq + 1);
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc{} || ptr != text.data() + text.size()) {
            throw InvalidArgument("scenario override '" + std::string(item) + "' has a non-numeric value");
        }
        set(name, value);
    }
}

std::size_t Scenario::planted_count() const {
    return static_cast<std::size_t>(std::count(truth.begin(), truth.end(), true));
}

namespace {

struct Builder {
    std::vector<double> xy;
    std::vector<bool> truth;

    void add(double x, double y, bool planted) {
        xy.push_back(x);
        xy.push_back(y);
        truth.push_back(planted);
    }

    Matrix matrix() const {
        const auto n = static_cast<Eigen::Index>(truth.size());
        Matrix m(n, 2);
        for (Eigen::Index i = 0; i < n; ++i) {
            m(i, 0) = xy[static_cast<std::size_t>(2 * i)];
            m(i, 1) = xy[static_cast<std::size_t>(2 * i + 1)];
        }
        return m;
    }
};

void require_positive(const ScenarioParams& p, std::string_view name) {
    const double v = p.get(name);
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw InvalidArgument("scenario parameter '" + std::string(name) + "' must be positive");
    }
}

void gaussian_blob(Builder& b, CounterRng& rng, std::size_t count, double cx, double cy,
                   double spread, bool planted) {
    for (std::size_t i = 0; i < count; ++i) {
        const double x = cx + spread * rng.normal();
        const double y = cy + spread * rng.normal();
        b.add(x, y, planted);
    }
}

// Gaussian blob with every offset redrawn until it lies within
// kMicroClusterTruncation spreads of the centre.
void truncated_blob(Builder& b, CounterRng& rng, std::size_t count, double cx, double cy,
                    double spread, bool planted) {
    const double limit = kMicroClusterTruncation * kMicroClusterTruncation;
    for (std::size_t i = 0; i < count; ++i) {
        double dx = 0.0;
        double dy = 0.0;
        do {
            dx = rng.normal();
            dy = rng.normal();
        } while (dx * dx + dy * dy > limit);
        b.add(cx + spread * dx, cy + spread * dy, planted);
    }
}

// Uniform on the disk of the given radius around (cx, cy).
void uniform_disk(Builder& b, CounterRng& rng, std::size_t count, double cx, double cy,
                  double radius, bool planted) {
    for (std::size_t i = 0; i < count; ++i) {
        const double r = radius * std::sqrt(rng.uniform());
        const double t = 2.0 * std::numbers::pi * rng.uniform();
        b.add(cx + r * std::cos(t), cy + r * std::sin(t), planted);
    }
}

void build_a(Builder& b, CounterRng& rng, const ScenarioParams& p) {
    require_positive(p, "spread");
    const double s = p.get("spread");
    const double r_lo = p.get("outlier_min_radius");
    const double r_hi = p.get("outlier_max_radius");
    if (!(r_lo > 0.0 && r_lo <= r_hi)) {
        throw InvalidArgument("scenario A needs 0 < outlier_min_radius <= outlier_max_radius");
    }
    gaussian_blob(b, rng, p.count("normal_count"), 0.0, 0.0, s, false);
    for (std::size_t i = 0; i < p.count("outlier_count"); ++i) {
        const double r = s * rng.uniform(r_lo, r_hi);
        const double t = 2.0 * std::numbers::pi * rng.uniform();
        b.add(r * std::cos(t), r * std::sin(t), true);
    }
}

void build_b(Builder& b, CounterRng& rng, const ScenarioParams& p) {
    require_positive(p, "ring_radius");
    require_positive(p, "ring_width");
    require_positive(p, "outlier_max_radius");
    const double radius = p.get("ring_radius");
    const double width = p.get("ring_width");
    const double inner = p.get("outlier_max_radius");
    if (!(inner < radius)) {
        throw InvalidArgument("scenario B needs outlier_max_radius < ring_radius");
    }
    for (std::size_t i = 0; i < p.count("ring_count"); ++i) {
        const double t = 2.0 * std::numbers::pi * rng.uniform();
        const double r = radius + width * rng.normal();
        b.add(r * std::cos(t), r * std::sin(t), false);
    }
    uniform_disk(b, rng, p.count("outlier_count"), 0.0, 0.0, inner, true);
}

void build_c(Builder& b, CounterRng& rng, const ScenarioParams& p) {
    require_positive(p, "spread");
    require_positive(p, "cluster_spread");
    require_positive(p, "cluster_distance");
    const double s = p.get("spread");
    gaussian_blob(b, rng, p.count("normal_count"), 0.0, 0.0, s, false);
    const double t = 2.0 * std::numbers::pi * rng.uniform();
    const double dist = s * p.get("cluster_distance");
    truncated_blob(b, rng, p.count("cluster_count"), dist * std::cos(t), dist * std::sin(t),
                   s * p.get("cluster_spread"), true);
}

void build_d(Builder& b, CounterRng& rng, const ScenarioParams& p) {
    require_positive(p, "dense_spread");
    require_positive(p, "sparse_spread_ratio");
    require_positive(p, "sparse_offset");
    require_positive(p, "outlier_distance");
    const double s = p.get("dense_spread");
    gaussian_blob(b, rng, p.count("dense_count"), 0.0, 0.0, s, false);
    gaussian_blob(b, rng, p.count("sparse_count"), s * p.get("sparse_offset"), 0.0,
                  s * p.get("sparse_spread_ratio"), false);
    // P1 sits on the far side of the dense blob, away from the sparse one.
    b.add(-s * p.get("outlier_distance"), 0.0, true);
}

void build_e(Builder& b, CounterRng& rng, const ScenarioParams& p) {
    require_positive(p, "spread");
    require_positive(p, "cluster_spread");
    require_positive(p, "cluster_radius");
    const double s = p.get("spread");
    gaussian_blob(b, rng, p.count("normal_count"), 0.0, 0.0, s, false);
    const double t0 = 2.0 * std::numbers::pi * rng.uniform();
    const double r = s * p.get("cluster_radius");
    for (double t : {t0, t0 + p.get("cluster_angle_gap")}) {
        truncated_blob(b, rng, p.count("cluster_count"), r * std::cos(t), r * std::sin(t),
                       s * p.get("cluster_spread"), true);
    }
}

void build_f(Builder& b, CounterRng& rng, const ScenarioParams& p) {
    require_positive(p, "side");
    require_positive(p, "hole_radius");
    require_positive(p, "sparse_fill");
    const double half = 0.5 * p.get("side");
    const double hole = p.get("hole_radius");
    if (!(hole < half) || !(p.get("sparse_fill") <= 1.0)) {
        throw InvalidArgument("scenario F needs hole_radius < side / 2 and sparse_fill <= 1");
    }
    const std::size_t dense = p.count("dense_count");
    while (b.truth.size() < dense) {
        const double x = rng.uniform(-half, half);
        const double y = rng.uniform(-half, half);
        if (x * x + y * y >= hole * hole) b.add(x, y, false);
    }
    uniform_disk(b, rng, p.count("sparse_count"), 0.0, 0.0, hole * p.get("sparse_fill"), true);
}

}  // namespace

Scenario generate(ScenarioId id, std::uint64_t seed, const ScenarioParams& params) {
    CounterRng rng(seed);
    Builder b;
    switch (id) {
        case ScenarioId::A: build_a(b, rng, params); break;
        case ScenarioId::B: build_b(b, rng, params); break;
        case ScenarioId::C: build_c(b, rng, params); break;
        case ScenarioId::D: build_d(b, rng, params); break;
        case ScenarioId::E: build_e(b, rng, params); break;
        case ScenarioId::F: build_f(b, rng, params); break;
    }
    if (b.truth.empty()) {
        throw InvalidArgument("scenario parameters produce an empty dataset");
    }
    return Scenario{id, seed, params, Dataset(b.matrix()), std::move(b.truth)};
}

Scenario generate(ScenarioId id, std::uint64_t seed) {
    return generate(id, seed, ScenarioParams::defaults(id));
}

}  // namespace qc
