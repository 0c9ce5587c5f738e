#include <hashclust/clustering.hpp>
#include <hashclust/error.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace hashclust {

namespace {

using matrix = std::vector<std::vector<double>>;

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1p-53;
}

matrix plus_plus_init(const feature_matrix& m, std::size_t k, std::mt19937_64& rng) {
    const std::size_t n = m.rows();
    matrix centers;
    std::size_t first = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
    centers.emplace_back(m.row(first).begin(), m.row(first).end());

    std::vector<double> nearest(n);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = squared_distance(m.row(i), centers[0]);

    while (centers.size() < k) {
        double total = 0.0;
        for (double d : nearest) total += d;
        std::size_t pick = n - 1;
        if (total > 0.0) {
            while (nearest[pick] == 0.0) --pick;
            const double target = uniform01(rng) * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += nearest[i];
                if (target < acc && nearest[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
        }
        centers.emplace_back(m.row(pick).begin(), m.row(pick).end());
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(m.row(i), centers.back()));
        }
    }
    return centers;
}

void assign(const feature_matrix& m, const matrix& centers, std::vector<std::size_t>& labels,
            std::vector<double>& cost) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t c = 0; c < centers.size(); ++c) {
            const double d = squared_distance(m.row(i), centers[c]);
            if (d < best) {
                best = d;
                arg = c;
            }
        }
        labels[i] = arg;
        cost[i] = best;
    }
}

// Moves the point farthest from its centroid into each empty cluster.
void reseed_empty(std::vector<std::size_t>& labels, std::vector<double>& cost, std::size_t k) {
    std::vector<std::size_t> size(k, 0);
    for (std::size_t l : labels) ++size[l];
    for (std::size_t c = 0; c < k; ++c) {
        if (size[c] != 0) continue;
        std::size_t far = labels.size();
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (size[labels[i]] > 1 && (far == labels.size() || cost[i] > cost[far])) far = i;
        }
        --size[labels[far]];
        labels[far] = c;
        cost[far] = 0.0;
        size[c] = 1;
    }
}

matrix means(const feature_matrix& m, const std::vector<std::size_t>& labels, std::size_t k) {
    matrix out(k, std::vector<double>(m.cols(), 0.0));
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto& c = out[labels[i]];
        const auto row = m.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) c[j] += row[j];
        ++count[labels[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
        for (double& v : out[c]) v /= static_cast<double>(count[c]);
    }
    return out;
}

double total_cost(const feature_matrix& m, const std::vector<std::size_t>& labels, const matrix& centers) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) sum += squared_distance(m.row(i), centers[labels[i]]);
    return sum;
}

clustering_result lloyd(const feature_matrix& m, const kmeans_config& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    matrix centers = plus_plus_init(m, cfg.k, rng);
    clustering_result r;
    r.labels.assign(m.rows(), 0);
    std::vector<double> cost(m.rows(), 0.0);
    std::vector<std::size_t> previous;

    for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
        assign(m, centers, r.labels, cost);
        reseed_empty(r.labels, cost, cfg.k);
        matrix updated = means(m, r.labels, cfg.k);
        double shift = 0.0;
        for (std::size_t c = 0; c < cfg.k; ++c) {
            shift = std::max(shift, std::sqrt(squared_distance(centers[c], updated[c])));
        }
        centers = std::move(updated);
        r.inertia_trace.push_back(total_cost(m, r.labels, centers));
        r.iterations_run = it + 1;
        if (shift < cfg.tolerance || r.labels == previous) break;
        previous = r.labels;
    }
    r.centroids = std::move(centers);
    r.inertia = r.inertia_trace.back();
    return r;
}

std::vector<std::size_t> compact(std::span<const std::size_t> labels, std::size_t& groups) {
    std::map<std::size_t, std::size_t> ids;
    std::vector<std::size_t> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out[i] = ids.try_emplace(labels[i], ids.size()).first->second;
    }
    groups = ids.size();
    return out;
}

double choose2(double x) { return x * (x - 1.0) / 2.0; }

} // namespace

clustering_result kmeans_fit(const feature_matrix& m, const kmeans_config& cfg) {
    if (m.rows() == 0 || m.cols() == 0) throw error(errc::empty_matrix, "k-means on an empty matrix");
    if (cfg.k == 0) throw error(errc::invalid_argument, "k must be at least 1");
    if (cfg.k > m.rows()) {
        throw error(errc::k_too_large, "k=" + std::to_string(cfg.k) + " exceeds " +
                                           std::to_string(m.rows()) + " samples");
    }
    if (cfg.restarts == 0 || cfg.max_iterations == 0) {
        throw error(errc::invalid_argument, "restarts and max_iterations must be positive");
    }
    clustering_result best;
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        clustering_result fit = lloyd(m, cfg, cfg.seed + r);
        if (r == 0 || fit.inertia < best.inertia) best = std::move(fit);
    }
    return best;
}

double silhouette_mean(const square_matrix& dist, std::span<const std::size_t> labels) {
    if (labels.size() != dist.n) throw error(errc::dimension_mismatch, "one label per sample required");
    std::size_t k = 0;
    const auto lab = compact(labels, k);
    if (k < 2) throw error(errc::single_cluster, "silhouette needs at least two clusters");

    std::vector<std::size_t> size(k, 0);
    for (std::size_t l : lab) ++size[l];

    double total = 0.0;
    std::vector<double> sums(k);
    for (std::size_t i = 0; i < dist.n; ++i) {
        if (size[lab[i]] == 1) continue;
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < dist.n; ++j) sums[lab[j]] += dist.at(i, j);
        const double a = sums[lab[i]] / static_cast<double>(size[lab[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c != lab[i]) b = std::min(b, sums[c] / static_cast<double>(size[c]));
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(dist.n);
}

double silhouette_mean(const feature_matrix& m, std::span<const std::size_t> labels) {
    if (labels.size() != m.rows()) throw error(errc::dimension_mismatch, "one label per sample required");
    std::size_t k = 0;
    compact(labels, k);
    if (k < 2) throw error(errc::single_cluster, "silhouette needs at least two clusters");
    return silhouette_mean(pairwise_euclidean(m), labels);
}

silhouette_report sweep_k(const feature_matrix& m, std::size_t k_min, std::size_t k_max,
                          const kmeans_config& tmpl) {
    if (k_min < 2 || k_min > k_max) {
        throw error(errc::invalid_argument, "sweep range must satisfy 2 <= k_min <= k_max");
    }
    if (m.rows() == 0) throw error(errc::empty_matrix, "sweep on an empty matrix");
    if (k_max + 1 > m.rows()) {
        throw error(errc::k_too_large, "k_max must be below the sample count");
    }
    const square_matrix dist = pairwise_euclidean(m);
    silhouette_report report;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        kmeans_config cfg = tmpl;
        cfg.k = k;
        const double s = silhouette_mean(dist, kmeans_fit(m, cfg).labels);
        report.per_k[k] = s;
        if (report.best_k == 0 || s > report.per_k[report.best_k]) report.best_k = k;
    }
    return report;
}

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    if (a.size() != b.size()) throw error(errc::dimension_mismatch, "labelings differ in length");
    std::size_t ka = 0, kb = 0;
    const auto la = compact(a, ka);
    const auto lb = compact(b, kb);
    std::vector<double> table(ka * kb, 0.0), rows(ka, 0.0), cols(kb, 0.0);
    for (std::size_t i = 0; i < la.size(); ++i) {
        table[la[i] * kb + lb[i]] += 1.0;
        rows[la[i]] += 1.0;
        cols[lb[i]] += 1.0;
    }
    double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (double v : table) index += choose2(v);
    for (double v : rows) sum_rows += choose2(v);
    for (double v : cols) sum_cols += choose2(v);
    const double expected = sum_rows * sum_cols / choose2(static_cast<double>(la.size()));
    const double max_index = (sum_rows + sum_cols) / 2.0;
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

std::vector<std::size_t> encode_labels(std::span<const std::string> labels) {
    std::map<std::string, std::size_t> ids;
    std::vector<std::size_t> out;
    for (const auto& l : labels) out.push_back(ids.try_emplace(l, ids.size()).first->second);
    return out;
}

std::vector<std::vector<double>> principal_projection(const feature_matrix& m, std::size_t components) {
    const std::size_t n = m.rows();
    const std::size_t d = m.cols();
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += m.at(i, j);
    for (double& v : mean) v /= static_cast<double>(std::max<std::size_t>(n, 1));

    std::vector<double> cov(d * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < d; ++a) {
            const double xa = m.at(i, a) - mean[a];
            if (xa == 0.0) continue;
            for (std::size_t b = 0; b < d; ++b) cov[a * d + b] += xa * (m.at(i, b) - mean[b]);
        }
    }
    for (double& v : cov) v /= static_cast<double>(std::max<std::size_t>(n, 1));

    std::vector<std::vector<double>> axes;
    std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
    for (std::size_t c = 0; c < components; ++c) {
        std::vector<double> v(d), next(d);
        for (double& x : v) x = uniform01(rng) - 0.5;
        double lambda = 0.0;
        for (int it = 0; it < 2000; ++it) {
            for (std::size_t a = 0; a < d; ++a) {
                double s = 0.0;
                for (std::size_t b = 0; b < d; ++b) s += cov[a * d + b] * v[b];
                next[a] = s;
            }
            double norm = 0.0;
            for (double x : next) norm += x * x;
            norm = std::sqrt(norm);
            if (norm == 0.0) {
                std::fill(v.begin(), v.end(), 0.0);
                break;
            }
            double delta = 0.0;
            for (std::size_t a = 0; a < d; ++a) {
                next[a] /= norm;
                delta = std::max(delta, std::abs(next[a] - v[a]));
            }
            v.swap(next);
            lambda = norm;
            if (delta < 1e-12) break;
        }
        std::size_t top = 0;
        for (std::size_t a = 1; a < d; ++a) {
            if (std::abs(v[a]) > std::abs(v[top])) top = a;
        }
        if (d > 0 && v[top] < 0.0) {
            for (double& x : v) x = -x;
        }
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) cov[a * d + b] -= lambda * v[a] * v[b];
        axes.push_back(std::move(v));
    }

    std::vector<std::vector<double>> scores(n, std::vector<double>(components, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < components; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += (m.at(i, j) - mean[j]) * axes[c][j];
            scores[i][c] = s;
        }
    }
    return scores;
}

} // namespace hashclust
