#pragma once

#include <hashclust/features.hpp>

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace hashclust {

struct kmeans_config {
    std::size_t k = 2;
    std::size_t max_iterations = 300;
    std::size_t restarts = 10;
    double tolerance = 1e-4; // max centroid shift that counts as converged
    std::uint64_t seed = 0;
};

struct clustering_result {
    std::vector<std::size_t> labels;            // one per row, in [0, k)
    std::vector<std::vector<double>> centroids; // k rows, mean of members
    double inertia = 0.0;
    std::size_t iterations_run = 0;
    std::vector<double> inertia_trace; // per Lloyd iteration of the chosen restart
};

/// Lloyd's algorithm with k-means++ seeding. Restart r draws from a
/// mt19937_64 seeded with `seed + r`; the lowest-inertia restart wins, ties
/// going to the earlier restart.
/// Throws errc::empty_matrix, errc::k_too_large, errc::invalid_argument.
clustering_result kmeans_fit(const feature_matrix& m, const kmeans_config& cfg);

/// Mean silhouette with Euclidean distances; singletons score 0.
/// Throws errc::single_cluster, errc::dimension_mismatch.
double silhouette_mean(const feature_matrix& m, std::span<const std::size_t> labels);

/// Same, over a precomputed distance matrix.
double silhouette_mean(const square_matrix& distances, std::span<const std::size_t> labels);

struct silhouette_report {
    std::map<std::size_t, double> per_k;
    std::size_t best_k = 0; // argmax, smaller K on ties
};

/// Requires 2 <= k_min <= k_max <= rows - 1. `tmpl.k` is ignored.
silhouette_report sweep_k(const feature_matrix& m, std::size_t k_min, std::size_t k_max,
                          const kmeans_config& tmpl);

/// Adjusted Rand index between two labelings of the same samples.
/// Identical trivial partitions score 1. Throws errc::dimension_mismatch.
double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

/// Maps arbitrary labels to dense indices in first-seen order.
std::vector<std::size_t> encode_labels(std::span<const std::string> labels);

/// Scores on the leading principal axes of the column-centred matrix, found
/// by power iteration with deflation. Each axis is sign-normalized so its
/// largest-magnitude loading is positive. Result is rows x components.
std::vector<std::vector<double>> principal_projection(const feature_matrix& m, std::size_t components = 2);

} // namespace hashclust
