#include <hashclust/cli.hpp>
#include <hashclust/csv.hpp>
#include <hashclust/error.hpp>

#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <set>

#ifndef HASHCLUST_VERSION
#define HASHCLUST_VERSION "0.0.0"
#endif

namespace hashclust::cli {

using json = nlohmann::ordered_json;

namespace {

fs::path with_suffix(const fs::path& prefix, const std::string& suffix) {
    fs::path p = prefix;
    p += suffix;
    return p;
}

void ensure_parent(const fs::path& file) {
    if (file.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(file.parent_path(), ec);
        if (ec) throw error(errc::io_error, "cannot create " + file.parent_path().string() + ": " + ec.message());
    }
}

// Collects the run manifest while a command executes.
class run_recorder {
public:
    run_recorder(std::string command, std::uint64_t seed)
        : start_(std::chrono::steady_clock::now()) {
        doc_["command"] = std::move(command);
        doc_["tool_version"] = tool_version();
        doc_["seed"] = seed;
        doc_["config"] = json::object();
        doc_["inputs"] = json::array();
        doc_["outputs"] = json::array();
    }

    json& config() { return doc_["config"]; }
    json& doc() { return doc_; }
    void input(const fs::path& p) { doc_["inputs"].push_back(p.string()); }

    void write(const fs::path& p, std::string_view content) {
        ensure_parent(p);
        write_file_atomic(p, content);
        doc_["outputs"].push_back(p.string());
    }

    void finish(const fs::path& manifest_path) {
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
        doc_["wall_time_seconds"] = elapsed.count();
        ensure_parent(manifest_path);
        write_file_atomic(manifest_path, doc_.dump(2) + "\n");
    }

private:
    std::chrono::steady_clock::time_point start_;
    json doc_;
};

std::string text_of(const fs::path& p) {
    const byte_buffer b = read_file(p);
    return std::string(b.begin(), b.end());
}

std::vector<std::string> families_of(std::span<const unified_record> records) {
    std::vector<std::string> out;
    for (const auto& r : records) out.push_back(r.meta.family);
    return out;
}

kmeans_config fit_config(std::size_t k, std::uint64_t seed) {
    kmeans_config cfg;
    cfg.k = k;
    cfg.seed = seed;
    return cfg;
}

void require_records(std::span<const unified_record> records) {
    if (records.size() < 2) {
        throw error(errc::too_few_samples, "need at least two records, found " + std::to_string(records.size()));
    }
}

json config_json(const kmeans_config& cfg) {
    return {{"k", cfg.k},
            {"max_iterations", cfg.max_iterations},
            {"restarts", cfg.restarts},
            {"tolerance", cfg.tolerance},
            {"seed", cfg.seed}};
}

struct summary_stats {
    std::size_t pairs = 0;
    std::size_t same_pairs = 0;
    double same_sum = 0.0;
    double cross_sum = 0.0;
    double min = 0.0;
    double max = 0.0;

    void add(double v, bool same) {
        if (pairs == 0 || v < min) min = v;
        if (pairs == 0 || v > max) max = v;
        ++pairs;
        if (same) {
            ++same_pairs;
            same_sum += v;
        } else {
            cross_sum += v;
        }
    }

    csv::row row(const std::string& scheme_name, const std::string& metric) const {
        const std::size_t cross = pairs - same_pairs;
        return {scheme_name,
                metric,
                std::to_string(pairs),
                std::to_string(same_pairs),
                same_pairs ? csv::format_number(same_sum / static_cast<double>(same_pairs)) : "",
                cross ? csv::format_number(cross_sum / static_cast<double>(cross)) : "",
                csv::format_number(min),
                csv::format_number(max)};
    }
};

summary_stats summarize(const square_matrix& m, std::span<const std::string> families) {
    summary_stats s;
    for (std::size_t i = 0; i < m.n; ++i)
        for (std::size_t j = i + 1; j < m.n; ++j) s.add(m.at(i, j), families[i] == families[j]);
    return s;
}

} // namespace

std::string tool_version() {
    return HASHCLUST_VERSION;
}

std::uint64_t seed_from_env() {
    const char* raw = std::getenv(seed_env);
    if (raw == nullptr || *raw == '\0') return default_seed;
    const std::string_view text(raw);
    std::uint64_t seed = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), seed);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw usage_error(std::string(seed_env) + " must be an unsigned integer, got '" + std::string(text) + "'");
    }
    return seed;
}

std::vector<unified_record> load_unified(const fs::path& path) {
    return read_unified_csv(text_of(path));
}

feature_matrix scheme_features(std::span<const unified_record> records, scheme kind) {
    std::vector<std::string> ids;
    for (const auto& r : records) ids.push_back(r.meta.sha256);
    feature_matrix raw;
    if (kind == scheme::imphash) {
        std::vector<imphash> hashes;
        for (const auto& r : records) hashes.push_back(r.imp);
        raw = vectorize_imphash(hashes, std::move(ids));
    } else {
        std::vector<feature_vector> rows;
        for (const auto& r : records) {
            rows.push_back(kind == scheme::tlsh ? vectorize_tlsh(r.tlsh) : vectorize_ssdeep(r.ssdeep));
        }
        raw = stack_vectors(rows, std::move(ids));
    }
    return standardize(raw).first;
}

hash_summary cmd_hash(const hash_options& opt, std::ostream& log) {
    run_recorder run("hash", 0);
    run.input(opt.dir);
    run.config()["metadata"] = opt.metadata ? opt.metadata->string() : "";

    const hash_report report = hash_directory(opt.dir);
    hash_summary summary;
    summary.files = report.rows.size() + report.errors.size();
    summary.errors = report.errors;
    for (const auto& e : report.errors) log << "error: " << e.path.string() << ": " << e.message << "\n";

    if (opt.metadata) {
        run.input(*opt.metadata);
        const auto metadata = ingest_metadata(text_of(*opt.metadata));
        const join_result joined = join_and_filter(metadata, report.rows);
        summary.rows = joined.records.size();
        summary.drops = joined.drops;
        run.write(opt.out, unified_to_csv(joined.records));
        run.write(opt.drops ? *opt.drops : with_suffix(opt.out, ".drops.json"), drops_to_json(joined.drops));
        for (const auto& [reason, count] : joined.drops) log << "dropped " << count << " (" << reason << ")\n";
    } else {
        summary.rows = report.rows.size();
        run.write(opt.out, digest_rows_to_csv(report.rows));
    }

    json errors = json::array();
    for (const auto& e : report.errors) errors.push_back({{"path", e.path.string()}, {"message", e.message}});
    run.doc()["file_errors"] = std::move(errors);
    run.finish(with_suffix(opt.out, ".run.json"));
    log << "hashed " << report.rows.size() << " files, " << report.errors.size() << " errors, wrote "
        << summary.rows << " rows\n";
    return summary;
}

clustering_result cmd_cluster(const cluster_options& opt, std::ostream& log) {
    if (opt.k < 2) throw usage_error("--k must be at least 2");
    run_recorder run("cluster", opt.seed);
    const kmeans_config cfg = fit_config(opt.k, opt.seed);
    run.config() = config_json(cfg);
    run.config()["scheme"] = std::string(to_string(opt.kind));
    run.input(opt.unified);

    const auto records = load_unified(opt.unified);
    require_records(records);
    const feature_matrix m = scheme_features(records, opt.kind);
    const clustering_result result = kmeans_fit(m, cfg);
    const auto families = families_of(records);
    const double ari = adjusted_rand_index(result.labels, encode_labels(families));

    std::string labels = csv::format_row({"sha256", "cluster", "family"});
    for (std::size_t i = 0; i < records.size(); ++i) {
        labels += csv::format_row({records[i].meta.sha256, std::to_string(result.labels[i]), families[i]});
    }
    run.write(with_suffix(opt.out, ".labels.csv"), labels);

    const auto proj = principal_projection(m, 2);
    std::string projection = csv::format_row({"sha256", "pc1", "pc2", "cluster", "family"});
    for (std::size_t i = 0; i < records.size(); ++i) {
        projection += csv::format_row({records[i].meta.sha256, csv::format_number(proj[i][0]),
                                       csv::format_number(proj[i][1]), std::to_string(result.labels[i]),
                                       families[i]});
    }
    run.write(with_suffix(opt.out, ".projection.csv"), projection);

    if (opt.json) {
        json doc;
        doc["scheme"] = std::string(to_string(opt.kind));
        doc["config"] = config_json(cfg);
        doc["inertia"] = result.inertia;
        doc["iterations_run"] = result.iterations_run;
        doc["adjusted_rand_index"] = ari;
        doc["inertia_trace"] = result.inertia_trace;
        json assignments = json::array();
        for (std::size_t i = 0; i < records.size(); ++i) {
            assignments.push_back(
                {{"sha256", records[i].meta.sha256}, {"cluster", result.labels[i]}, {"family", families[i]}});
        }
        doc["labels"] = std::move(assignments);
        doc["centroids"] = result.centroids;
        run.write(with_suffix(opt.out, ".json"), doc.dump(2) + "\n");
    }
    run.doc()["adjusted_rand_index"] = ari;
    run.finish(with_suffix(opt.out, ".run.json"));
    log << "scheme=" << to_string(opt.kind) << " k=" << opt.k << " inertia=" << csv::format_number(result.inertia)
        << " ari=" << csv::format_number(ari) << "\n";
    return result;
}

silhouette_report cmd_sweep(const sweep_options& opt, std::ostream& log) {
    if (opt.k_min < 2 || opt.k_min > opt.k_max) throw usage_error("need 2 <= --k-min <= --k-max");
    run_recorder run("sweep", opt.seed);
    const kmeans_config tmpl = fit_config(0, opt.seed);
    run.config() = config_json(tmpl);
    run.config().erase("k");
    run.config()["scheme"] = std::string(to_string(opt.kind));
    run.config()["k_min"] = opt.k_min;
    run.config()["k_max"] = opt.k_max;
    run.input(opt.unified);

    const auto records = load_unified(opt.unified);
    require_records(records);
    const silhouette_report report = sweep_k(scheme_features(records, opt.kind), opt.k_min, opt.k_max, tmpl);

    std::string curve = csv::format_row({"k", "mean_silhouette"});
    for (const auto& [k, s] : report.per_k) curve += csv::format_row({std::to_string(k), csv::format_number(s)});
    run.write(with_suffix(opt.out, ".silhouette.csv"), curve);

    if (opt.json) {
        json doc;
        doc["scheme"] = std::string(to_string(opt.kind));
        doc["config"] = run.config();
        json per_k = json::array();
        for (const auto& [k, s] : report.per_k) per_k.push_back({{"k", k}, {"mean_silhouette", s}});
        doc["per_k"] = std::move(per_k);
        doc["best_k"] = report.best_k;
        run.write(with_suffix(opt.out, ".json"), doc.dump(2) + "\n");
    }
    run.doc()["best_k"] = report.best_k;
    run.finish(with_suffix(opt.out, ".run.json"));
    log << "best_k=" << report.best_k << "\n";
    return report;
}

void cmd_report(const report_options& opt, std::ostream& log) {
    if (opt.k < 2) throw usage_error("--k must be at least 2");
    run_recorder run("report", opt.seed);
    run.config() = config_json(fit_config(opt.k, opt.seed));
    run.input(opt.unified);

    const auto records = load_unified(opt.unified);
    require_records(records);
    const auto families = families_of(records);
    const auto truth = encode_labels(families);
    const fs::path dir = opt.out_dir;
    if (opt.k > records.size()) throw error(errc::k_too_large, "--k exceeds the record count");

    std::vector<sample_record> metas;
    for (const auto& r : records) metas.push_back(r.meta);
    const family_table table = family_distribution(metas);
    run.write(dir / "family_distribution.csv", to_csv(table));

    std::string summary = csv::format_row(
        {"scheme", "metric", "pairs", "same_family_pairs", "same_family_mean", "cross_family_mean", "min", "max"});
    std::string agreement = csv::format_row({"scheme", "k", "adjusted_rand_index", "mean_silhouette"});

    for (scheme kind : {scheme::ssdeep, scheme::tlsh, scheme::imphash}) {
        const std::string name(to_string(kind));
        const feature_matrix m = scheme_features(records, kind);
        const square_matrix dist = pairwise_euclidean(m);
        summary += csv::format_row(summarize(dist, families).row(name, "euclidean_standardized"));

        const clustering_result fit = kmeans_fit(m, fit_config(opt.k, opt.seed));
        std::string contingency = "cluster";
        for (const auto& f : table.families) contingency += "," + csv::escape(f);
        contingency += "\n";
        for (std::size_t c = 0; c < opt.k; ++c) {
            csv::row r{std::to_string(c)};
            for (const auto& f : table.families) {
                std::size_t n = 0;
                for (std::size_t i = 0; i < records.size(); ++i) n += fit.labels[i] == c && families[i] == f;
                r.push_back(std::to_string(n));
            }
            contingency += csv::format_row(r);
        }
        run.write(dir / ("contingency_" + name + ".csv"), contingency);

        std::set<std::size_t> distinct(fit.labels.begin(), fit.labels.end());
        const std::string silhouette =
            distinct.size() >= 2 ? csv::format_number(silhouette_mean(dist, fit.labels)) : "";
        agreement += csv::format_row({name, std::to_string(opt.k),
                                      csv::format_number(adjusted_rand_index(fit.labels, truth)), silhouette});
    }

    std::vector<ssdeep_digest> ss;
    std::vector<tlsh_digest> tl;
    for (const auto& r : records) {
        ss.push_back(r.ssdeep);
        tl.push_back(r.tlsh);
    }
    summary += csv::format_row(summarize(pairwise_ssdeep(ss), families).row("ssdeep", "ssdeep_score"));
    summary += csv::format_row(summarize(pairwise_tlsh(tl), families).row("tlsh", "tlsh_distance"));

    if (opt.samples) {
        run.input(*opt.samples);
        std::vector<std::set<std::string>> sets;
        for (const auto& r : records) sets.push_back(import_set(parse_imports(read_file(*opt.samples / r.meta.sha256))));
        const square_matrix jac = pairwise_jaccard(sets);
        summary += csv::format_row(summarize(jac, families).row("imphash", "jaccard_import_set"));
        std::string pairs = csv::format_row({"sha256_a", "sha256_b", "same_imphash", "jaccard"});
        for (std::size_t i = 0; i < records.size(); ++i) {
            for (std::size_t j = i + 1; j < records.size(); ++j) {
                pairs += csv::format_row({records[i].meta.sha256, records[j].meta.sha256,
                                          records[i].imp == records[j].imp ? "1" : "0",
                                          csv::format_number(jac.at(i, j))});
            }
        }
        run.write(dir / "imphash_jaccard.csv", pairs);
    } else {
        log << "note: no --samples directory, import-set Jaccard skipped\n";
    }
    run.write(dir / "pairwise_summary.csv", summary);
    run.write(dir / "agreement.csv", agreement);
    run.finish(dir / "run.json");
    log << "report written to " << dir.string() << "\n";
}

std::vector<sample_record> cmd_synth(const synth_options& opt, std::ostream& log) {
    try {
        validate(opt.cfg);
    } catch (const error& e) {
        throw usage_error(e.what());
    }
    run_recorder run("synth", opt.cfg.seed);
    run.config() = {{"families", opt.cfg.families},
                    {"samples_per_family", opt.cfg.samples_per_family},
                    {"mutation_rate", opt.cfg.mutation_rate},
                    {"extra_section_rate", opt.cfg.extra_section_rate},
                    {"date", to_string(opt.cfg.date)}};
    const auto manifest = synth_corpus(opt.cfg, opt.out);
    run.doc()["outputs"].push_back((opt.out / "manifest.csv").string());
    run.doc()["outputs"].push_back((opt.out / "samples").string());
    run.finish(opt.out / "run.json");
    log << "wrote " << manifest.size() << " samples to " << (opt.out / "samples").string() << "\n";
    return manifest;
}

int report_exception(std::exception_ptr ex, std::ostream& err, bool as_json) {
    int code = exit_data;
    std::string kind = "Error";
    std::string message;
    try {
        std::rethrow_exception(ex);
    } catch (const usage_error& e) {
        code = exit_usage;
        kind = "UsageError";
        message = e.what();
    } catch (const error& e) {
        code = e.code() == errc::invalid_argument ? exit_usage : exit_data;
        kind = to_string(e.code());
        message = e.what();
    } catch (const std::exception& e) {
        message = e.what();
    }
    if (as_json) {
        err << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
    } else {
        err << "hashclust: " << kind << ": " << message << "\n";
    }
    return code;
}

} // namespace hashclust::cli
