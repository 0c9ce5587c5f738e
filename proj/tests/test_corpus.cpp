#include "test_support.hpp"

#include <hashclust/corpus.hpp>
#include <hashclust/crypto.hpp>
#include <hashclust/error.hpp>

#include <doctest.h>

#include <sys/stat.h>

using namespace hashclust;
using test_support::temp_dir;
namespace fs = std::filesystem;

namespace {

const std::string sha_a(64, 'a');
const std::string sha_b(64, 'b');
const std::string sha_c(64, 'c');

void write_bytes(const fs::path& p, const byte_buffer& b) {
    write_file_atomic(p, std::string_view(reinterpret_cast<const char*>(b.data()), b.size()));
}

std::string bytes_of(const fs::path& p) {
    const auto b = read_file(p);
    return std::string(b.begin(), b.end());
}

sample_record meta(const std::string& sha, const std::string& family = "fam") {
    return {sha, family, {2024, 1, 5}, {2024, 2, 1}, std::nullopt};
}

digest_row complete_row(const std::string& sha, std::uint64_t size = 1000) {
    digest_row d;
    d.sha256 = sha;
    d.size = size;
    d.ssdeep = parse_ssdeep("3:abc:de");
    d.tlsh = tlsh_hash(test_support::random_bytes(1, 200));
    d.imp = parse_imphash("f9ade0aa18f660a34a4fa23392e21838");
    return d;
}

errc code_of(auto&& f) {
    try {
        f();
    } catch (const error& e) {
        return e.code();
    }
    return errc::io_error;
}

} // namespace

TEST_CASE("dates") {
    CHECK(parse_date("2024-02-29") == civil_date{2024, 2, 29});
    CHECK(!parse_date("2023-02-29"));
    CHECK(!parse_date("2024-13-01"));
    CHECK(!parse_date("2024-1-01"));
    CHECK(!parse_date("2024/01/01"));
    CHECK(to_string(civil_date{2024, 3, 7}) == "2024-03-07");
}

TEST_CASE("ingest_metadata") {
    const std::string good = "sha256,family,first_seen,last_seen\n" + sha_a + ",emotet,2024-01-02,2024-01-09\n" +
                             sha_b + ",qakbot,2024-02-01,2024-02-01\n" + std::string(64, 'C') +
                             ",\"agent, tesla\",2024-03-01,2024-03-30\n";
    const auto recs = ingest_metadata(good);
    REQUIRE(recs.size() == 3);
    CHECK(recs[0].family == "emotet");
    CHECK(recs[2].sha256 == sha_c);
    CHECK(recs[2].family == "agent, tesla");
    CHECK(recs[1].first_seen == civil_date{2024, 2, 1});

    SUBCASE("63-character sha256") {
        const std::string bad = "sha256,family,first_seen,last_seen\n" + sha_a + ",x,2024-01-02,2024-01-09\n" +
                                std::string(63, 'a') + ",x,2024-01-02,2024-01-09\n";
        try {
            ingest_metadata(bad);
            FAIL("expected MalformedRow");
        } catch (const malformed_row& e) {
            CHECK(e.row() == 2);
            CHECK(e.code() == errc::malformed_row);
        }
    }
    SUBCASE("missing family column") {
        CHECK(code_of([] { ingest_metadata("sha256,first_seen,last_seen\n"); }) == errc::missing_column);
    }
    SUBCASE("bad dates and ordering") {
        CHECK(code_of([&] {
                  ingest_metadata("sha256,family,first_seen,last_seen\n" + sha_a + ",x,2024-02-30,2024-03-01\n");
              }) == errc::malformed_row);
        CHECK(code_of([&] {
                  ingest_metadata("sha256,family,first_seen,last_seen\n" + sha_a + ",x,2024-03-02,2024-03-01\n");
              }) == errc::malformed_row);
        CHECK(code_of([&] { ingest_metadata("sha256,family,first_seen,last_seen\n" + sha_a + ",x\n"); }) ==
              errc::malformed_row);
    }
    SUBCASE("column order and extra columns") {
        const auto r = ingest_metadata("note,last_seen,family,sha256,first_seen,path\nhi,2024-01-03," + std::string("f,") +
                                       sha_a + ",2024-01-01,/tmp/x\n");
        REQUIRE(r.size() == 1);
        CHECK(r[0].family == "f");
        CHECK(r[0].path == fs::path("/tmp/x"));
    }
    SUBCASE("round trip through the manifest writer") {
        CHECK(ingest_metadata(metadata_to_csv(recs)) == recs);
    }
}

TEST_CASE("hash_directory over synthetic PEs") {
    temp_dir tmp("hashdir");
    synth_config cfg;
    cfg.families = 2;
    cfg.samples_per_family = 5;
    const auto manifest = synth_corpus(cfg, tmp.path);
    REQUIRE(manifest.size() == 10);

    const auto report = hash_directory(tmp.path / "samples");
    CHECK(report.errors.empty());
    REQUIRE(report.rows.size() == 10);
    for (const auto& row : report.rows) {
        const auto bytes = read_file(row.path);
        CHECK(row.sha256 == sha256_hex(bytes));
        CHECK(row.size == bytes.size());
        REQUIRE(row.ssdeep);
        REQUIRE(row.tlsh);
        REQUIRE(row.imp);
        CHECK(*row.ssdeep == ssdeep_hash(bytes));
        CHECK(*row.tlsh == tlsh_hash(bytes));
        CHECK(*row.imp == compute_imphash(parse_imports(bytes)));
    }
    CHECK(std::is_sorted(report.rows.begin(), report.rows.end(),
                         [](const digest_row& a, const digest_row& b) { return a.sha256 < b.sha256; }));
    CHECK(digest_rows_to_csv(hash_directory(tmp.path / "samples").rows) == digest_rows_to_csv(report.rows));
}

TEST_CASE("hash_directory partial digests and errors") {
    temp_dir tmp("partial");
    write_bytes(tmp.path / "small.bin", test_support::random_bytes(3, 49));
    write_bytes(tmp.path / "text.txt", test_support::random_bytes(4, 5000));
    write_bytes(tmp.path / "empty", {});
    fs::create_directories(tmp.path / "sub");
    write_bytes(tmp.path / "sub" / "nested.bin", test_support::random_bytes(5, 300));
    fs::create_symlink(tmp.path / "does-not-exist", tmp.path / "dangling");
    REQUIRE(::mkfifo((tmp.path / "pipe").c_str(), 0600) == 0);

    const auto report = hash_directory(tmp.path);
    REQUIRE(report.rows.size() == 4);
    REQUIRE(report.errors.size() == 1);
    CHECK(report.errors[0].path.filename() == "dangling");

    for (const auto& row : report.rows) {
        CHECK(!row.imp);
        if (row.path.filename() == "small.bin") {
            CHECK(row.size == 49);
            CHECK(!row.tlsh);
            CHECK(row.ssdeep);
        }
        if (row.path.filename() == "text.txt") CHECK(row.tlsh);
        if (row.path.filename() == "empty") {
            CHECK(!row.ssdeep);
            CHECK(!row.tlsh);
        }
    }
    CHECK(code_of([&] { hash_directory(tmp.path / "missing"); }) == errc::io_error);
}

TEST_CASE("join_and_filter") {
    SUBCASE("fully matched corpus has no drops") {
        const std::vector<sample_record> m{meta(sha_b), meta(sha_a)};
        const std::vector<digest_row> d{complete_row(sha_a), complete_row(sha_b)};
        const auto j = join_and_filter(m, d);
        CHECK(j.records.size() == 2);
        CHECK(j.drops.empty());
        CHECK(j.records[0].meta.sha256 == sha_a);
    }
    SUBCASE("each drop reason") {
        digest_row no_imp = complete_row(sha_b);
        no_imp.imp.reset();
        digest_row small = complete_row(sha_c, 49);
        digest_row no_tlsh = complete_row(std::string(64, 'd'));
        no_tlsh.tlsh.reset();
        const std::vector<digest_row> d{complete_row(sha_a), no_imp, small, no_tlsh,
                                        complete_row(std::string(64, 'e'))};
        const std::vector<sample_record> m{meta(sha_a),       meta(sha_b), meta(sha_c), meta(std::string(64, 'd')),
                                           meta(std::string(64, '0')), meta(sha_a)};
        const auto j = join_and_filter(m, d);
        CHECK(j.records.size() == 1);
        CHECK(j.drops == std::map<std::string, std::size_t>{
                             {"unmatched", 1}, {"no-import-table", 1}, {"too-small", 1}, {"no-tlsh", 1}, {"duplicate", 1}});
        std::size_t dropped = 0;
        for (const auto& [_, n] : j.drops) dropped += n;
        CHECK(dropped + j.records.size() == m.size());
        for (const auto& r : j.records) CHECK(r.size >= min_sample_size);
    }
    SUBCASE("drop report JSON") {
        CHECK(drops_to_json({{"too-small", 1}, {"no-import-table", 1}}) ==
              "{\n  \"no-import-table\": 1,\n  \"too-small\": 1\n}\n");
        CHECK(drops_to_json({}) == "{}\n");
    }
}

TEST_CASE("unified CSV") {
    const std::vector<sample_record> m{meta(sha_a, "x,y"), meta(sha_b)};
    const std::vector<digest_row> d{complete_row(sha_a), complete_row(sha_b)};
    const auto j = join_and_filter(m, d);
    const std::string text = unified_to_csv(j.records);
    CHECK(text.rfind("sha256,family,first_seen,last_seen,size,ssdeep,tlsh,imphash\n", 0) == 0);
    CHECK(read_unified_csv(text) == j.records);

    std::string broken = text;
    broken.replace(broken.rfind(to_string(j.records[1].tlsh)), 4, "zzzz");
    try {
        read_unified_csv(broken);
        FAIL("expected MalformedRow");
    } catch (const malformed_row& e) {
        CHECK(e.row() == 2);
    }
    CHECK(code_of([] { read_unified_csv("sha256,family\n"); }) == errc::missing_column);
}

TEST_CASE("family_distribution") {
    std::vector<sample_record> one(5, meta(sha_a, "solo"));
    const auto t1 = family_distribution(one);
    CHECK(t1.families == std::vector<std::string>{"solo"});
    CHECK(t1.months == std::vector<std::string>{"2024-01"});
    CHECK(t1.counts == std::vector<std::vector<std::size_t>>{{5}});

    std::vector<sample_record> mixed{meta(sha_a, "b"), meta(sha_b, "a"), meta(sha_c, "b")};
    mixed[1].first_seen = {2023, 12, 31};
    const auto t2 = family_distribution(mixed);
    CHECK(t2.families == std::vector<std::string>{"a", "b"});
    CHECK(t2.months == std::vector<std::string>{"2023-12", "2024-01"});
    CHECK(t2.counts == std::vector<std::vector<std::size_t>>{{1, 0}, {0, 2}});
    CHECK(to_csv(t2) == "family,2023-12,2024-01\na,1,0\nb,0,2\n");
    CHECK(code_of([] { family_distribution({}); }) == errc::empty_table);
}

TEST_CASE("synth_corpus") {
    temp_dir tmp("synth");
    const synth_config cfg; // 6 x 20, rate 0.02
    const auto manifest = synth_corpus(cfg, tmp.path);
    CHECK(manifest.size() == 120);
    CHECK(ingest_metadata(bytes_of(tmp.path / "manifest.csv")) == [&] {
        auto m = manifest;
        for (auto& r : m) r.path.reset();
        return m;
    }());

    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(tmp.path / "samples")) {
        (void)e;
        ++files;
    }
    CHECK(files == 120);

    std::map<std::string, std::vector<tlsh_digest>> by_family;
    for (const auto& r : manifest) {
        const auto bytes = read_file(*r.path);
        CHECK(sha256_hex(bytes) == r.sha256);
        CHECK(!parse_imports(bytes).entries.empty());
        by_family[r.family].push_back(tlsh_hash(bytes));
    }
    const auto table = family_distribution(manifest);
    CHECK(table.families.size() == 6);
    for (const auto& row : table.counts) CHECK(row == std::vector<std::size_t>{20});

    double within = 0, between = 0;
    std::size_t nw = 0, nb = 0;
    for (const auto& [fa, da] : by_family) {
        for (const auto& [fb, db] : by_family) {
            for (std::size_t i = 0; i < da.size(); ++i) {
                for (std::size_t j = 0; j < db.size(); ++j) {
                    if (fa == fb && i >= j) continue;
                    const double dist = tlsh_distance(da[i], db[j]);
                    (fa == fb ? within : between) += dist;
                    ++(fa == fb ? nw : nb);
                }
            }
        }
    }
    CHECK(within / nw < between / nb);

    temp_dir again("synth2");
    synth_corpus(cfg, again.path);
    CHECK(bytes_of(again.path / "manifest.csv") == bytes_of(tmp.path / "manifest.csv"));
    for (const auto& r : manifest) {
        CHECK(bytes_of(again.path / "samples" / r.sha256) == bytes_of(*r.path));
    }
}

TEST_CASE("synth config validation") {
    synth_config cfg;
    cfg.mutation_rate = 1.5;
    CHECK(code_of([&] { validate(cfg); }) == errc::invalid_argument);
    cfg = {};
    cfg.families = 1;
    CHECK(code_of([&] { validate(cfg); }) == errc::invalid_argument);
    cfg = {};
    cfg.samples_per_family = 1;
    CHECK(code_of([&] { validate(cfg); }) == errc::invalid_argument);
    cfg = {};
    cfg.import_profiles = {{{"a.dll", {std::string("f")}}}};
    CHECK(code_of([&] { validate(cfg); }) == errc::invalid_argument);
}

TEST_CASE("synth with explicit import profiles and no mutation") {
    temp_dir tmp("profiles");
    synth_config cfg;
    cfg.families = 2;
    cfg.samples_per_family = 3;
    cfg.mutation_rate = 0.0;
    cfg.import_profiles = {{{"KERNEL32.dll", {std::string("ExitProcess")}}},
                           {{"USER32.dll", {std::string("MessageBoxA"), std::uint16_t{5}}}}};
    const auto manifest = synth_corpus(cfg, tmp.path);
    std::set<std::string> shas;
    for (const auto& r : manifest) shas.insert(r.sha256);
    CHECK(shas.size() == 6);
    CHECK(compute_imphash(parse_imports(read_file(*manifest[0].path))).hex() ==
          "f9ade0aa18f660a34a4fa23392e21838");
    const auto t = parse_imports(read_file(*manifest[5].path));
    CHECK(t.entries == std::vector<import_entry>{{"user32", "messageboxa"}, {"user32", "ord5"}});
}
