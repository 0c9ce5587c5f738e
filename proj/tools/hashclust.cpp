#include <hashclust/cli.hpp>
#include <hashclust/error.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace cli = hashclust::cli;

namespace {

const std::vector<std::string> scheme_names{"ssdeep", "tlsh", "imphash"};

hashclust::civil_date parse_date_flag(const std::string& text) {
    const auto d = hashclust::parse_date(text);
    if (!d) throw cli::usage_error("--date must be YYYY-MM-DD, got '" + text + "'");
    return *d;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fuzzy-hash malware clustering pipeline"};
    app.require_subcommand(1);
    app.set_version_flag("--version", cli::tool_version());

    std::string error_format = "text";
    app.add_option("--error-format", error_format, "Error output on stderr")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();

    std::uint64_t seed = cli::default_seed;
    bool seed_env_ok = true;
    std::string seed_env_error;
    try {
        seed = cli::seed_from_env();
    } catch (const cli::usage_error& e) {
        seed_env_ok = false;
        seed_env_error = e.what();
    }
    bool seed_given = false;
    auto add_seed = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "RNG seed (default: $HASHCLUST_SEED or 1)")
            ->each([&](const std::string&) { seed_given = true; });
    };

    cli::hash_options hash;
    std::string metadata, drops;
    auto* hash_cmd = app.add_subcommand("hash", "Digest every file in a directory");
    hash_cmd->add_option("dir", hash.dir, "Sample directory")->required()->check(CLI::ExistingDirectory);
    hash_cmd->add_option("--out", hash.out, "Output CSV")->required();
    hash_cmd->add_option("--metadata", metadata, "Metadata CSV; output becomes the unified table");
    hash_cmd->add_option("--drops", drops, "Drop report JSON (default <out>.drops.json)");

    cli::cluster_options cluster;
    std::string cluster_format = "csv";
    auto* cluster_cmd = app.add_subcommand("cluster", "K-Means over one digest scheme");
    cluster_cmd->add_option("unified", cluster.unified, "Unified CSV")->required();
    std::string cluster_scheme;
    cluster_cmd->add_option("--scheme", cluster_scheme, "ssdeep, tlsh or imphash")
        ->check(CLI::IsMember(scheme_names))
        ->required();
    cluster_cmd->add_option("--k", cluster.k, "Number of clusters")->capture_default_str();
    cluster_cmd->add_option("--out", cluster.out, "Output path prefix")->required();
    cluster_cmd->add_option("--format", cluster_format)->check(CLI::IsMember({"csv", "json"}));
    add_seed(cluster_cmd);

    cli::sweep_options sweep;
    std::string sweep_format = "csv";
    auto* sweep_cmd = app.add_subcommand("sweep", "Silhouette over a range of K");
    sweep_cmd->add_option("unified", sweep.unified, "Unified CSV")->required();
    std::string sweep_scheme;
    sweep_cmd->add_option("--scheme", sweep_scheme, "ssdeep, tlsh or imphash")
        ->check(CLI::IsMember(scheme_names))
        ->required();
    sweep_cmd->add_option("--k-min", sweep.k_min)->capture_default_str();
    sweep_cmd->add_option("--k-max", sweep.k_max)->capture_default_str();
    sweep_cmd->add_option("--out", sweep.out, "Output path prefix")->required();
    sweep_cmd->add_option("--format", sweep_format)->check(CLI::IsMember({"csv", "json"}));
    add_seed(sweep_cmd);

    cli::report_options report;
    std::string samples;
    auto* report_cmd = app.add_subcommand("report", "Family distribution, metric summaries, contingency tables");
    report_cmd->add_option("unified", report.unified, "Unified CSV")->required();
    report_cmd->add_option("--out", report.out_dir, "Output directory")->required();
    report_cmd->add_option("--samples", samples, "Directory of samples named by sha256");
    report_cmd->add_option("--k", report.k)->capture_default_str();
    add_seed(report_cmd);

    cli::synth_options synth;
    std::string date = hashclust::to_string(synth.cfg.date);
    auto* synth_cmd = app.add_subcommand("synth", "Generate an inert synthetic PE corpus");
    synth_cmd->add_option("--out", synth.out, "Output directory")->required();
    synth_cmd->add_option("--families", synth.cfg.families)->capture_default_str();
    synth_cmd->add_option("--samples-per-family", synth.cfg.samples_per_family)->capture_default_str();
    synth_cmd->add_option("--mutation-rate", synth.cfg.mutation_rate)->capture_default_str();
    synth_cmd->add_option("--extra-section-rate", synth.cfg.extra_section_rate)->capture_default_str();
    synth_cmd->add_option("--date", date, "Manifest first/last seen date")->capture_default_str();
    add_seed(synth_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cli::exit_ok : cli::exit_usage;
    }

    const bool json_errors = error_format == "json";
    try {
        if (!seed_given && !seed_env_ok) throw cli::usage_error(seed_env_error);
        if (*hash_cmd) {
            if (!metadata.empty()) hash.metadata = metadata;
            if (!drops.empty()) hash.drops = drops;
            cli::cmd_hash(hash, std::cerr);
        } else if (*cluster_cmd) {
            cluster.kind = hashclust::parse_scheme(cluster_scheme);
            cluster.seed = seed;
            cluster.json = cluster_format == "json";
            cli::cmd_cluster(cluster, std::cerr);
        } else if (*sweep_cmd) {
            sweep.kind = hashclust::parse_scheme(sweep_scheme);
            sweep.seed = seed;
            sweep.json = sweep_format == "json";
            const auto r = cli::cmd_sweep(sweep, std::cerr);
            std::cout << r.best_k << "\n";
        } else if (*report_cmd) {
            report.seed = seed;
            if (!samples.empty()) report.samples = samples;
            cli::cmd_report(report, std::cerr);
        } else if (*synth_cmd) {
            synth.cfg.seed = seed;
            synth.cfg.date = parse_date_flag(date);
            cli::cmd_synth(synth, std::cerr);
        }
    } catch (...) {
        return cli::report_exception(std::current_exception(), std::cerr, json_errors);
    }
    return cli::exit_ok;
}
