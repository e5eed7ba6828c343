#include "qc/clustering.hpp"
#include "qc/datagen.hpp"
#include "qc/error.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <map>

using namespace qc;

namespace {

Dataset dataset_of(const oracle::Points& pts) { return Dataset(test::to_matrix(pts)); }

// Two label vectors describe the same partition when a bijection maps one
// onto the other.
bool same_partition(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    if (a.size() != b.size()) return false;
    std::map<std::size_t, std::size_t> ab, ba;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto [it1, new1] = ab.emplace(a[i], b[i]);
        auto [it2, new2] = ba.emplace(b[i], a[i]);
        if (it1->second != b[i] || it2->second != a[i]) return false;
    }
    return true;
}

std::vector<std::size_t> flagged(const ClusterResult& r) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < r.outlier_flags.size(); ++i)
        if (r.outlier_flags[i]) out.push_back(i);
    return out;
}

}  // namespace

TEST_CASE("sigma from a one-bin histogram") {
    const auto est = estimate_sigma(dataset_of({{0.0}, {1.0}}), 1);
    CHECK(est.sigma.value() == 0.5);
    CHECK(est.histogram.counts == std::vector<std::size_t>{1});
}

TEST_CASE("sigma from four collinear points") {
    const auto est = estimate_sigma(dataset_of({{0.0}, {1.0}, {2.0}, {3.0}}), 3);
    CHECK(est.sigma.value() == doctest::Approx(0.5));
    CHECK(est.histogram.counts == std::vector<std::size_t>{3, 2, 1});
    CHECK(est.histogram.bin_edges.size() == 4);
}

TEST_CASE("sigma on a Gaussian blob equals the naive histogram mode") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> normal(0.0, 1.0);
    oracle::Points pts(500);
    for (auto& p : pts) p = {normal(rng), normal(rng)};
    const auto est = estimate_sigma(dataset_of(pts));
    const auto want = oracle::distance_histogram(pts, kDefaultHistogramBins);
    CHECK(est.histogram.counts == want.counts);
    CHECK(est.sigma.value() == want.mode_center);
    const auto& h = est.histogram;
    REQUIRE(h.counts.size() + 1 == h.bin_edges.size());
    CHECK(std::is_sorted(h.bin_edges.begin(), h.bin_edges.end()));
    const auto mode = static_cast<std::size_t>(std::max_element(h.counts.begin(), h.counts.end()) - h.counts.begin());
    CHECK(h.mode_bin_center > h.bin_edges[mode]);
    CHECK(h.mode_bin_center < h.bin_edges[mode + 1]);
}

TEST_CASE("sigma histogram ties go to the smaller bin") {
    // Distances {1, 2, 3}: one per bin.
    const auto est = estimate_sigma(dataset_of({{0.0}, {1.0}, {3.0}}), 3);
    CHECK(est.histogram.counts == std::vector<std::size_t>{1, 1, 1});
    CHECK(est.sigma.value() == doctest::Approx(0.5));
}

TEST_CASE("sigma estimation errors") {
    CHECK_THROWS_AS(estimate_sigma(dataset_of({{1.0, 2.0}})), DataError);
    CHECK_THROWS_AS(estimate_sigma(dataset_of({{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}})), DataError);
    CHECK_THROWS_AS(estimate_sigma(dataset_of({{0.0}, {1.0}}), 0), InvalidArgument);
}

TEST_CASE("cluster assignment examples") {
    const auto p = assign_clusters(test::to_matrix({{0.0, 0.0}, {0.01, 0.0}, {5.0, 5.0}}), 0.1);
    CHECK(p.labels == std::vector<std::size_t>{0, 0, 1});
    CHECK(p.cluster_sizes == std::vector<std::size_t>{2, 1});

    const auto chain = assign_clusters(test::to_matrix({{0.0}, {0.09}, {0.18}}), 0.1);
    CHECK(chain.cluster_sizes == std::vector<std::size_t>{3});

    // Labels follow first appearance regardless of coordinate order.
    const auto order = assign_clusters(test::to_matrix({{9.0}, {0.0}, {9.05}}), 0.1);
    CHECK(order.labels == std::vector<std::size_t>{0, 1, 0});
}

TEST_CASE("cluster assignment matches brute-force union-find") {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 10; ++trial) {
        const auto pts = oracle::random_points(rng, 200, 2, 0.0, 10.0);
        const double radius = test::log_uniform(rng, 0.2, 1.0);
        const auto got = assign_clusters(test::to_matrix(pts), radius);
        CHECK(got.labels == oracle::brute_force_partition(pts, radius));
        std::size_t total = 0;
        for (std::size_t s : got.cluster_sizes) {
            CHECK(s > 0);
            total += s;
        }
        CHECK(total == pts.size());
    }
}

TEST_CASE("cluster assignment validation") {
    CHECK_THROWS_AS(assign_clusters(test::to_matrix({{0.0}}), 0.0), InvalidArgument);
    Matrix bad(2, 1);
    bad << 0.0, std::nan("");
    CHECK_THROWS_AS(assign_clusters(bad, 0.1), DataError);
}

TEST_CASE("outlier labelling examples") {
    std::vector<std::size_t> labels(11, 0);
    labels[10] = 1;
    const auto a = label_outliers(labels, {10, 1}, 2);
    CHECK(std::count(a.begin(), a.end(), true) == 1);
    CHECK(a[10]);

    const auto b = label_outliers(std::vector<std::size_t>(6, 0), {6}, 2);
    CHECK(std::count(b.begin(), b.end(), true) == 0);

    std::vector<std::size_t> l3;
    for (std::size_t c : {0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 2}) l3.push_back(c);
    const auto c = label_outliers(l3, {7, 3, 1}, 4);
    CHECK(std::count(c.begin(), c.end(), true) == 4);
}

TEST_CASE("default outlier threshold") {
    CHECK(default_outlier_threshold(1) == 2);
    CHECK(default_outlier_threshold(40) == 2);
    CHECK(default_outlier_threshold(41) == 3);
    CHECK(default_outlier_threshold(205) == 11);
    CHECK(default_outlier_threshold(9358) == 468);
}

TEST_CASE("parameter resolution") {
    const Dataset data = dataset_of({{0.0}, {1.0}, {2.0}, {3.0}});
    QcParams p;
    p.num_bins = 3;
    const auto r = resolve_params(data, p);
    CHECK(r.sigma_estimated);
    CHECK(r.sigma == doctest::Approx(0.5));
    CHECK(r.merge_radius == doctest::Approx(0.125));
    CHECK(r.k == 2);

    p.sigma = 2.0;
    p.k = 3;
    p.merge_radius = 0.7;
    const auto fixed = resolve_params(data, p);
    CHECK_FALSE(fixed.sigma_estimated);
    CHECK(fixed.sigma == 2.0);
    CHECK(fixed.k == 3);
    CHECK(fixed.merge_radius == 0.7);

    QcParams bad;
    bad.k = 0;
    CHECK_THROWS_AS(resolve_params(data, bad), InvalidArgument);
    bad = {};
    bad.merge_radius = -1.0;
    CHECK_THROWS_AS(resolve_params(data, bad), InvalidArgument);
    bad = {};
    bad.sigma = 0.0;
    CHECK_THROWS_AS(resolve_params(data, bad), InvalidArgument);
}

TEST_CASE("blob with planted anomalies") {
    const Scenario sc = generate(ScenarioId::A, 3);
    QcParams p;
    p.k = 5;
    const auto r = detect(sc.dataset, p);
    for (std::size_t i = 0; i < sc.truth.size(); ++i)
        if (sc.truth[i]) CHECK(r.outlier_flags[i]);
    CHECK(static_cast<double>(r.outlier_count()) <= 0.075 * static_cast<double>(sc.dataset.size()));
}

TEST_CASE("singleton dataset is its own outlier") {
    QcParams p;
    p.sigma = 1.0;
    p.k = 2;
    const auto r = detect(dataset_of({{3.0, 4.0}}), p);
    CHECK(r.cluster_sizes == std::vector<std::size_t>{1});
    CHECK(r.outlier_flags == std::vector<bool>{true});
}

TEST_CASE("point beside a dense blob is flagged at a small kernel width") {
    const Scenario sc = generate(ScenarioId::D, 7);
    QcParams p;
    p.sigma = 0.5;
    const auto r = detect(sc.dataset, p);
    const std::size_t p1 = sc.truth.size() - 1;
    REQUIRE(sc.truth[p1]);
    CHECK(r.outlier_flags[p1]);
}

TEST_CASE("result invariants") {
    const Scenario sc = generate(ScenarioId::C, 2);
    const auto r = detect(sc.dataset, {});
    const std::size_t n = sc.dataset.size();
    REQUIRE(r.labels.size() == n);
    REQUIRE(r.converged.rows() == static_cast<Eigen::Index>(n));
    std::size_t total = 0;
    for (std::size_t s : r.cluster_sizes) {
        CHECK(s > 0);
        total += s;
    }
    CHECK(total == n);
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(r.labels[i] < r.cluster_count());
        CHECK(r.outlier_flags[i] == (r.cluster_sizes[r.labels[i]] < r.params.k));
    }
}

TEST_CASE("permutation equivariance") {
    const Scenario sc = generate(ScenarioId::A, 4);
    const Matrix& x = sc.dataset.points();
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(x.rows()));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::mt19937_64 rng(33);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix y(x.rows(), x.cols());
    for (std::size_t i = 0; i < perm.size(); ++i) y.row(static_cast<Eigen::Index>(i)) = x.row(perm[i]);

    QcParams p;
    p.sigma = 1.0;
    const auto a = detect(Dataset(x), p);
    const auto b = detect(Dataset(y), p);
    std::vector<std::size_t> a_perm(perm.size());
    std::vector<bool> flags_perm(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        a_perm[i] = a.labels[static_cast<std::size_t>(perm[i])];
        flags_perm[i] = a.outlier_flags[static_cast<std::size_t>(perm[i])];
    }
    CHECK(same_partition(a_perm, b.labels));
    CHECK(flags_perm == b.outlier_flags);
}

TEST_CASE("rigid-motion invariance") {
    const Scenario sc = generate(ScenarioId::E, 5);
    const double t = 0.7;
    Eigen::Matrix2d rot;
    rot << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
    Matrix moved = sc.dataset.points() * rot.transpose();
    moved.col(0).array() += 12.5;
    moved.col(1).array() -= 3.25;

    QcParams p;
    p.sigma = 0.8;
    const auto a = detect(sc.dataset, p);
    const auto b = detect(Dataset(moved), p);
    CHECK(same_partition(a.labels, b.labels));
    CHECK(a.outlier_flags == b.outlier_flags);
}

TEST_CASE("smaller sigma flags a superset on the planted-anomaly family") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const Scenario sc = generate(ScenarioId::A, seed);
        QcParams wide, narrow;
        wide.sigma = 0.5;
        narrow.sigma = 0.3;
        const auto fw = flagged(detect(sc.dataset, wide));
        const auto fn = flagged(detect(sc.dataset, narrow));
        CHECK(std::includes(fn.begin(), fn.end(), fw.begin(), fw.end()));
        CHECK(fn.size() > fw.size());
    }
}

TEST_CASE("detection is deterministic and independent of thread count") {
    const Scenario sc = generate(ScenarioId::C, 6);
    QcParams one, many;
    one.threads = 1;
    many.threads = 4;
    const auto a = detect(sc.dataset, one);
    const auto b = detect(sc.dataset, many);
    const auto c = detect(sc.dataset, many);
    CHECK(a.converged == b.converged);
    CHECK(b.converged == c.converged);
    CHECK(a.labels == b.labels);
    CHECK(a.outlier_flags == b.outlier_flags);
    CHECK(a.warnings == b.warnings);
}

TEST_CASE("non-converged descents are reported as a warning") {
    const Scenario sc = generate(ScenarioId::A, 1);
    QcParams p;
    p.sigma = 0.3;
    p.opt.max_iters = 1;
    const auto r = detect(sc.dataset, p);
    CHECK(r.non_converged > 0);
    REQUIRE_FALSE(r.warnings.empty());
    CHECK(r.warnings.front().find("max_iters") != std::string::npos);
}
