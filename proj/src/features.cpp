#include <hashclust/csv.hpp>
#include <hashclust/error.hpp>
#include <hashclust/features.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

namespace hashclust {

std::string_view to_string(scheme s) noexcept {
    switch (s) {
    case scheme::ssdeep: return "ssdeep";
    case scheme::tlsh: return "tlsh";
    case scheme::imphash: return "imphash";
    }
    return "?";
}

scheme parse_scheme(std::string_view name) {
    for (scheme s : {scheme::ssdeep, scheme::tlsh, scheme::imphash}) {
        if (name == to_string(s)) return s;
    }
    throw error(errc::invalid_argument, "unknown scheme '" + std::string(name) + "'");
}

feature_matrix::feature_matrix(scheme kind, std::vector<std::string> columns,
                               std::vector<std::string> sample_ids)
    : kind_(kind), columns_(std::move(columns)), sample_ids_(std::move(sample_ids)),
      data_(columns_.size() * sample_ids_.size(), 0.0) {}

feature_matrix feature_matrix::select_rows(std::span<const std::size_t> rows) const {
    std::vector<std::string> ids;
    for (std::size_t r : rows) ids.push_back(sample_ids_.at(r));
    feature_matrix out(kind_, columns_, std::move(ids));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy_n(row(rows[i]).begin(), cols(), out.row(i).begin());
    }
    return out;
}

namespace {

void add_histogram(std::vector<double>& out, const std::string& sig) {
    const std::size_t base = out.size();
    out.resize(base + 64, 0.0);
    if (sig.empty()) return;
    for (char c : sig) {
        const int idx = ssdeep_alphabet_index(c);
        if (idx >= 0) out[base + static_cast<std::size_t>(idx)] += 1.0;
    }
    for (std::size_t i = base; i < out.size(); ++i) {
        out[i] /= static_cast<double>(sig.size());
    }
}

std::string indexed(const char* prefix, std::size_t i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
    return buf;
}

void require_pairs(std::size_t n) {
    if (n < 2) throw error(errc::too_few_samples, "pairwise matrix needs at least two samples");
}

template <typename F>
square_matrix fill_symmetric(std::size_t n, double diagonal, F&& metric) {
    require_pairs(n);
    square_matrix out{n, std::vector<double>(n * n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
        out.values[i * n + i] = diagonal;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = metric(i, j);
            out.values[i * n + j] = v;
            out.values[j * n + i] = v;
        }
    }
    return out;
}

} // namespace

feature_vector vectorize_ssdeep(const ssdeep_digest& d) {
    feature_vector v{scheme::ssdeep, {}};
    v.values.reserve(ssdeep_feature_width);
    v.values.push_back(std::log2(static_cast<double>(d.block_size) / ssdeep_min_block_size));
    add_histogram(v.values, d.coarse);
    add_histogram(v.values, d.fine);
    return v;
}

feature_vector vectorize_tlsh(const tlsh_digest& d) {
    feature_vector v{scheme::tlsh, {}};
    v.values.reserve(tlsh_feature_width);
    v.values.push_back(d.l_value);
    v.values.push_back(d.q1_ratio);
    v.values.push_back(d.q2_ratio);
    for (std::uint8_t code : d.body) v.values.push_back(code);
    return v;
}

std::vector<std::string> feature_columns(scheme s) {
    std::vector<std::string> cols;
    if (s == scheme::ssdeep) {
        cols.push_back("log2_block");
        for (std::size_t i = 0; i < 64; ++i) cols.push_back(indexed("coarse_", i, 2));
        for (std::size_t i = 0; i < 64; ++i) cols.push_back(indexed("fine_", i, 2));
    } else if (s == scheme::tlsh) {
        cols = {"l_value", "q1_ratio", "q2_ratio"};
        for (std::size_t i = 0; i < tlsh_buckets; ++i) cols.push_back(indexed("bucket_", i, 3));
    }
    return cols;
}

feature_matrix vectorize_imphash(std::span<const imphash> corpus, std::vector<std::string> sample_ids) {
    if (corpus.empty()) throw error(errc::empty_matrix, "no samples to encode");
    if (sample_ids.empty()) {
        for (std::size_t i = 0; i < corpus.size(); ++i) sample_ids.push_back(std::to_string(i));
    }
    if (sample_ids.size() != corpus.size()) {
        throw error(errc::dimension_mismatch, "one sample id per hash required");
    }
    std::map<imphash, std::size_t> column_of;
    std::vector<std::string> columns;
    std::vector<std::size_t> hot(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        auto [it, inserted] = column_of.try_emplace(corpus[i], columns.size());
        if (inserted) columns.push_back(corpus[i].hex());
        hot[i] = it->second;
    }
    feature_matrix m(scheme::imphash, std::move(columns), std::move(sample_ids));
    for (std::size_t i = 0; i < hot.size(); ++i) m.at(i, hot[i]) = 1.0;
    return m;
}

feature_matrix stack_vectors(std::span<const feature_vector> rows, std::vector<std::string> sample_ids) {
    if (rows.empty()) throw error(errc::empty_matrix, "no rows to stack");
    if (sample_ids.size() != rows.size()) {
        throw error(errc::dimension_mismatch, "one sample id per row required");
    }
    const scheme kind = rows.front().kind;
    std::vector<std::string> cols = feature_columns(kind);
    if (cols.empty()) {
        for (std::size_t i = 0; i < rows.front().values.size(); ++i) cols.push_back(indexed("f", i, 1));
    }
    feature_matrix m(kind, std::move(cols), std::move(sample_ids));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].kind != kind || rows[r].values.size() != m.cols()) {
            throw error(errc::dimension_mismatch, "row " + std::to_string(r) + " has a different shape");
        }
        std::copy(rows[r].values.begin(), rows[r].values.end(), m.row(r).begin());
    }
    return m;
}

std::pair<feature_matrix, scaling_params> standardize(const feature_matrix& m) {
    if (m.rows() < 2) throw error(errc::too_few_samples, "standardize needs at least two rows");
    const std::size_t n = m.rows();
    const std::size_t d = m.cols();
    scaling_params p{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (std::size_t c = 0; c < d; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < n; ++r) sum += m.at(r, c);
        const double mean = sum / static_cast<double>(n);
        double sq = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double dev = m.at(r, c) - mean;
            sq += dev * dev;
        }
        p.mean[c] = mean;
        p.std[c] = std::sqrt(sq / static_cast<double>(n));
    }

    feature_matrix out = m;
    for (std::size_t c = 0; c < d; ++c) {
        const bool flat = p.std[c] <= 1e-12 * std::max(1.0, std::abs(p.mean[c]));
        for (std::size_t r = 0; r < n; ++r) {
            out.at(r, c) = flat ? 0.0 : (m.at(r, c) - p.mean[c]) / p.std[c];
        }
        if (flat) p.std[c] = 0.0;
    }
    return {std::move(out), std::move(p)};
}

double euclidean(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw error(errc::dimension_mismatch, "vectors of length " + std::to_string(p.size()) +
                                                  " and " + std::to_string(q.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double diff = q[i] - p[i];
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

double euclidean(const feature_vector& p, const feature_vector& q) {
    if (p.kind != q.kind) throw error(errc::dimension_mismatch, "vectors of different schemes");
    return euclidean(std::span<const double>(p.values), std::span<const double>(q.values));
}

double jaccard(const std::set<std::string>& x, const std::set<std::string>& y) {
    if (x.empty() && y.empty()) throw error(errc::both_empty, "jaccard of two empty sets");
    std::size_t common = 0;
    auto a = x.begin();
    auto b = y.begin();
    while (a != x.end() && b != y.end()) {
        if (*a < *b) {
            ++a;
        } else if (*b < *a) {
            ++b;
        } else {
            ++common;
            ++a;
            ++b;
        }
    }
    return static_cast<double>(common) / static_cast<double>(x.size() + y.size() - common);
}

square_matrix pairwise_euclidean(const feature_matrix& m) {
    return fill_symmetric(m.rows(), 0.0, [&](std::size_t i, std::size_t j) {
        return euclidean(m.row(i), m.row(j));
    });
}

square_matrix pairwise_jaccard(std::span<const std::set<std::string>> sets) {
    return fill_symmetric(sets.size(), 1.0, [&](std::size_t i, std::size_t j) {
        return jaccard(sets[i], sets[j]);
    });
}

square_matrix pairwise_tlsh(std::span<const tlsh_digest> digests) {
    return fill_symmetric(digests.size(), 0.0, [&](std::size_t i, std::size_t j) {
        return static_cast<double>(tlsh_distance(digests[i], digests[j]));
    });
}

square_matrix pairwise_ssdeep(std::span<const ssdeep_digest> digests) {
    return fill_symmetric(digests.size(), 100.0, [&](std::size_t i, std::size_t j) {
        return static_cast<double>(ssdeep_compare(digests[i], digests[j]));
    });
}

std::string to_csv(const feature_matrix& m) {
    csv::row header{"sha256"};
    header.insert(header.end(), m.columns().begin(), m.columns().end());
    std::string out = csv::format_row(header);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        csv::row fields{m.sample_ids()[r]};
        for (double v : m.row(r)) fields.push_back(csv::format_number(v));
        out += csv::format_row(fields);
    }
    return out;
}

feature_matrix feature_matrix_from_csv(std::string_view text, scheme kind) {
    const auto rows = csv::parse(text);
    if (rows.empty() || rows.front().empty() || rows.front().front() != "sha256") {
        throw error(errc::missing_column, "feature CSV must start with a sha256 column");
    }
    std::vector<std::string> columns(rows.front().begin() + 1, rows.front().end());
    std::vector<std::string> ids;
    for (std::size_t r = 1; r < rows.size(); ++r) ids.push_back(rows[r].front());
    feature_matrix m(kind, std::move(columns), std::move(ids));
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols() + 1) {
            throw malformed_row(r, "expected " + std::to_string(m.cols() + 1) + " fields");
        }
        for (std::size_t c = 0; c < m.cols(); ++c) {
            const std::string& f = rows[r][c + 1];
            double v = 0.0;
            const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
            if (res.ec != std::errc{} || res.ptr != f.data() + f.size() || !std::isfinite(v)) {
                throw malformed_row(r, "non-numeric value '" + f + "'");
            }
            m.at(r - 1, c) = v;
        }
    }
    return m;
}

} // namespace hashclust
