#include "test_support.hpp"

#include <hashclust/clustering.hpp>
#include <hashclust/error.hpp>

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace hashclust;

namespace {

feature_matrix from_points(const std::vector<std::vector<double>>& pts) {
    std::vector<std::string> cols, ids;
    for (std::size_t c = 0; c < pts.front().size(); ++c) cols.push_back("x" + std::to_string(c));
    for (std::size_t i = 0; i < pts.size(); ++i) ids.push_back("p" + std::to_string(i));
    feature_matrix m(scheme::tlsh, cols, ids);
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t c = 0; c < pts[i].size(); ++c) m.at(i, c) = pts[i][c];
    return m;
}

// Blobs centred at (0,0) and (sep,sep); the first `per` points are blob 0.
feature_matrix two_blobs(std::uint64_t seed, std::size_t per, double sep, double spread) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, spread);
    std::vector<std::vector<double>> pts;
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t i = 0; i < per; ++i) pts.push_back({b * sep + g(rng), b * sep + g(rng)});
    return from_points(pts);
}

// Pair-counting ARI, written independently of the contingency-table form.
double pair_counting_ari(const std::vector<std::size_t>& x, const std::vector<std::size_t>& y) {
    double a = 0, b = 0, c = 0, d = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const bool sx = x[i] == x[j];
            const bool sy = y[i] == y[j];
            if (sx && sy) ++a;
            else if (sx) ++b;
            else if (sy) ++c;
            else ++d;
        }
    }
    const double denom = (a + b) * (b + d) + (a + c) * (c + d);
    return denom == 0 ? 1.0 : 2.0 * (a * d - b * c) / denom;
}

// Silhouette straight from the definition, one pair at a time.
double naive_silhouette(const feature_matrix& m, const std::vector<std::size_t>& labels) {
    double total = 0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        std::map<std::size_t, std::pair<double, int>> acc;
        for (std::size_t j = 0; j < m.rows(); ++j) {
            if (i == j) continue;
            auto& e = acc[labels[j]];
            e.first += euclidean(m.row(i), m.row(j));
            e.second += 1;
        }
        if (!acc.count(labels[i])) continue; // singleton
        const double a = acc[labels[i]].first / acc[labels[i]].second;
        double b = 1e300;
        for (const auto& [l, e] : acc)
            if (l != labels[i]) b = std::min(b, e.first / e.second);
        total += (b - a) / std::max(a, b);
    }
    return total / static_cast<double>(m.rows());
}

double recomputed_inertia(const feature_matrix& m, const clustering_result& r) {
    double s = 0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double d = euclidean(m.row(i), r.centroids[r.labels[i]]);
        s += d * d;
    }
    return s;
}

} // namespace

TEST_CASE("k = n with distinct rows gives zero inertia and singletons") {
    const auto m = from_points({{0, 0}, {1, 5}, {3, 2}, {-4, 1}, {9, 9}});
    const auto r = kmeans_fit(m, {5, 300, 10, 1e-4, 7});
    CHECK(r.inertia == 0.0);
    std::vector<std::size_t> sorted = r.labels;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<std::size_t>{0, 1, 2, 3, 4});
}

TEST_CASE("two separated blobs are recovered exactly") {
    const auto m = two_blobs(1, 20, 100, 1);
    const auto r = kmeans_fit(m, {2, 300, 10, 1e-4, 42});
    std::vector<std::size_t> truth(40, 0);
    std::fill(truth.begin() + 20, truth.end(), 1);
    CHECK(pair_counting_ari(r.labels, truth) == 1.0);
    CHECK(adjusted_rand_index(r.labels, truth) == 1.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double own = euclidean(m.row(i), r.centroids[r.labels[i]]);
        const double other = euclidean(m.row(i), r.centroids[1 - r.labels[i]]);
        CHECK(own < other);
    }
}

TEST_CASE("result invariants") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g;
        std::vector<std::vector<double>> pts(60, std::vector<double>(4));
        for (auto& p : pts)
            for (auto& x : p) x = g(rng);
        const auto m = from_points(pts);
        const auto r = kmeans_fit(m, {4, 300, 3, 1e-4, seed});

        CHECK(std::abs(r.inertia - recomputed_inertia(m, r)) < 1e-6);
        std::vector<std::size_t> size(4, 0);
        for (std::size_t l : r.labels) ++size[l];
        for (std::size_t c = 0; c < 4; ++c) {
            REQUIRE(size[c] > 0);
            for (std::size_t j = 0; j < 4; ++j) {
                double mean = 0;
                for (std::size_t i = 0; i < m.rows(); ++i)
                    if (r.labels[i] == c) mean += m.at(i, j);
                CHECK(std::abs(mean / size[c] - r.centroids[c][j]) < 1e-9);
            }
        }
        for (std::size_t t = 1; t < r.inertia_trace.size(); ++t) {
            CHECK(r.inertia_trace[t] <= r.inertia_trace[t - 1] * (1 + 1e-12));
        }
        CHECK(r.iterations_run == r.inertia_trace.size());
    }
}

TEST_CASE("determinism") {
    const auto m = two_blobs(9, 30, 3, 1);
    const kmeans_config cfg{3, 300, 10, 1e-4, 5};
    const auto a = kmeans_fit(m, cfg);
    const auto b = kmeans_fit(m, cfg);
    CHECK(a.labels == b.labels);
    CHECK(a.centroids == b.centroids);
    CHECK(a.inertia == b.inertia);
}

TEST_CASE("duplicate rows force empty-cluster reseeding") {
    const auto m = from_points({{1, 1}, {1, 1}, {1, 1}, {1, 1}, {2, 2}});
    const auto r = kmeans_fit(m, {3, 300, 2, 1e-4, 0});
    std::vector<std::size_t> size(3, 0);
    for (std::size_t l : r.labels) ++size[l];
    CHECK(std::all_of(size.begin(), size.end(), [](std::size_t s) { return s > 0; }));
}

TEST_CASE("k-means errors") {
    const auto m = from_points({{0, 0}, {1, 1}});
    auto code = [](auto&& f) {
        try {
            f();
        } catch (const error& e) {
            return e.code();
        }
        return errc::io_error;
    };
    CHECK(code([&] { kmeans_fit(m, {3, 300, 10, 1e-4, 0}); }) == errc::k_too_large);
    CHECK(code([&] { kmeans_fit(feature_matrix{}, {1, 300, 10, 1e-4, 0}); }) == errc::empty_matrix);
    CHECK(code([&] { kmeans_fit(m, {0, 300, 10, 1e-4, 0}); }) == errc::invalid_argument);
}

TEST_CASE("silhouette") {
    const auto blobs = two_blobs(3, 20, 100, 1);
    std::vector<std::size_t> truth(40, 0);
    std::fill(truth.begin() + 20, truth.end(), 1);
    const double s = silhouette_mean(blobs, truth);
    CHECK(s > 0.9);
    CHECK(std::abs(s - naive_silhouette(blobs, truth)) < 1e-12);

    try {
        silhouette_mean(blobs, std::vector<std::size_t>(40, 3));
        FAIL("expected SingleCluster");
    } catch (const error& e) {
        CHECK(e.code() == errc::single_cluster);
    }

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g;
        std::vector<std::vector<double>> pts(200, std::vector<double>(2));
        for (auto& p : pts)
            for (auto& x : p) x = g(rng);
        std::vector<std::size_t> labels(200);
        for (auto& l : labels) l = rng() % 3;
        const auto m = from_points(pts);
        const double v = silhouette_mean(m, labels);
        CHECK(std::abs(v) < 0.1);
        CHECK(std::abs(v - naive_silhouette(m, labels)) < 1e-12);

        // Permuting sample order leaves the mean unchanged.
        std::vector<std::size_t> perm(200);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<std::size_t> plabels;
        for (std::size_t p : perm) plabels.push_back(labels[p]);
        CHECK(std::abs(silhouette_mean(m.select_rows(perm), plabels) - v) < 1e-12);
    }

    const auto small = from_points({{0, 0}, {0, 1}, {10, 10}});
    const std::vector<std::size_t> with_singleton{0, 0, 1};
    CHECK(std::abs(silhouette_mean(small, with_singleton) - naive_silhouette(small, with_singleton)) < 1e-12);
}

TEST_CASE("sweep_k") {
    const auto blobs = two_blobs(4, 20, 100, 1);
    const auto report = sweep_k(blobs, 2, 4, {0, 300, 10, 1e-4, 1});
    CHECK(report.best_k == 2);
    CHECK(report.per_k.size() == 3);
    for (const auto& [k, s] : report.per_k) {
        CHECK(s >= -1.0);
        CHECK(s <= 1.0);
        CHECK(std::abs(s - silhouette_mean(blobs, kmeans_fit(blobs, {k, 300, 10, 1e-4, 1}).labels)) < 1e-12);
    }

    const auto single = sweep_k(blobs, 3, 3, {0, 300, 10, 1e-4, 1});
    CHECK(single.per_k.size() == 1);
    CHECK(single.best_k == 3);

    CHECK_THROWS_AS(sweep_k(blobs, 1, 3, {}), error);
    CHECK_THROWS_AS(sweep_k(blobs, 4, 3, {}), error);
    CHECK_THROWS_AS(sweep_k(blobs, 2, 40, {}), error);
}

TEST_CASE("adjusted rand index") {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + rng() % 40;
        std::vector<std::size_t> x(n), y(n);
        for (auto& v : x) v = rng() % (1 + rng() % 5);
        for (auto& v : y) v = rng() % (1 + rng() % 5);
        CHECK(std::abs(adjusted_rand_index(x, y) - pair_counting_ari(x, y)) < 1e-12);
    }
    const std::vector<std::size_t> a{0, 0, 1, 1}, relabelled{7, 7, 3, 3};
    CHECK(adjusted_rand_index(a, relabelled) == 1.0);
    CHECK_THROWS_AS(adjusted_rand_index(a, std::vector<std::size_t>{1}), error);

    const std::vector<std::string> fam{"b", "a", "b"};
    CHECK(encode_labels(fam) == std::vector<std::size_t>{0, 1, 0});
}

TEST_CASE("principal projection") {
    // Points along the direction (1, 2) with small orthogonal noise.
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 100; ++i) {
        const double t = 10 * g(rng);
        const double e = 0.1 * g(rng);
        pts.push_back({t - 2 * e, 2 * t + e});
    }
    const auto m = from_points(pts);
    const auto p = principal_projection(m, 2);
    REQUIRE(p.size() == 100);
    double var0 = 0, var1 = 0, cross = 0;
    for (const auto& s : p) {
        var0 += s[0] * s[0];
        var1 += s[1] * s[1];
        cross += s[0] * s[1];
    }
    CHECK(var0 > 100 * var1);
    CHECK(std::abs(cross) < 1e-6 * var0);
    // First axis is close to (1,2)/sqrt(5) with a positive dominant loading.
    const double expected = (pts[0][0] * 1 + pts[0][1] * 2) / std::sqrt(5.0);
    double mx = 0, my = 0;
    for (const auto& q : pts) {
        mx += q[0] / 100;
        my += q[1] / 100;
    }
    CHECK(std::abs(p[0][0] - (expected - (mx + 2 * my) / std::sqrt(5.0))) < 0.1);
    CHECK(principal_projection(m, 2) == p);
}
