#include "test_support.hpp"

#include <hashclust/error.hpp>
#include <hashclust/tlsh.hpp>

#include <doctest.h>

#include <map>

using namespace hashclust;
using namespace test_support;

namespace {

errc code_of(byte_view data) {
    try {
        tlsh_hash(data);
    } catch (const error& e) {
        return e.code();
    }
    return errc::invalid_argument;
}

} // namespace

TEST_CASE("tlsh golden vectors match the reference digests") {
    const auto vectors = golden("tlsh");
    REQUIRE(vectors.size() >= 10);
    for (const auto& v : vectors) {
        CAPTURE(v.name);
        CHECK(to_string(tlsh_hash(v.input)) == v.expected);
    }
}

TEST_CASE("tlsh pairwise distances match the reference table") {
    std::map<std::string, tlsh_digest> digests;
    for (const auto& v : golden("tlsh")) {
        digests[v.name] = parse_tlsh(v.expected);
    }
    std::istringstream table(read_text(data_dir() / "golden" / "tlsh_distance.csv"));
    std::string line;
    std::getline(table, line);
    int rows = 0;
    while (std::getline(table, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const auto& a = digests.at(line.substr(0, c1));
        const auto& b = digests.at(line.substr(c1 + 1, c2 - c1 - 1));
        CAPTURE(line);
        CHECK(tlsh_distance(a, b) == std::stoi(line.substr(c2 + 1)));
        ++rows;
    }
    CHECK(rows >= 100);
}

TEST_CASE("tlsh reproduces the reference digest of the lorem text") {
    const auto lorem1 = read_file(data_dir() / "reference" / "lorem1.txt");
    const auto lorem2 = read_file(data_dir() / "reference" / "lorem2.txt");
    const auto d1 = tlsh_hash(lorem1);
    CHECK(to_string(d1) == "4c42c8337e9e07050be2127ed7d9cd7eea4cf01417d66798dceaaa2af446818d313258");
    CHECK(tlsh_distance(d1, tlsh_hash(lorem2)) == 18);
}

TEST_CASE("tlsh length limits and degenerate input") {
    CHECK(code_of(random_bytes(1, 49)) == errc::too_short);
    CHECK(code_of(byte_view{}) == errc::too_short);
    CHECK(code_of(byte_buffer(4096, 0x00)) == errc::degenerate_input);
    CHECK(code_of(byte_buffer(8192, 0x41)) == errc::degenerate_input);

    byte_buffer ramp(50);
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<std::uint8_t>(i);
    CHECK(to_string(tlsh_hash(ramp)) ==
          "509004d4c7d44ccf5d1735ccd155045f554375f750c41030073105d54f55554c71151c");
}

TEST_CASE("length code matches reference bucket boundaries") {
    // (length, code) pairs at the edges of the reference lookup table.
    const std::pair<std::uint64_t, int> cases[] = {
        {50, 9},        {57, 9},        {58, 10},       {656, 15},      {657, 16},
        {3171, 21},     {3172, 22},     {3199, 22},     {3200, 22},     {190335, 64},
        {190336, 65},   {1280486, 84},  {1280487, 85},  {3019320, 93},  {3019321, 94},
        {4018711, 96},  {4018712, 97},
    };
    for (auto [len, code] : cases) {
        CAPTURE(len);
        CHECK(tlsh_length_code(len) == code);
    }
}

TEST_CASE("tlsh distance scoring table") {
    const auto d = tlsh_hash(random_bytes(3, 3000));
    CHECK(tlsh_distance(d, d) == 0);

    auto body_step = d;
    body_step.body[17] = body_step.body[17] == 3 ? 2 : body_step.body[17] + 1;
    CHECK(tlsh_distance(d, body_step) == 1);

    auto body_far = d;
    body_far.body[5] = 0;
    body_far.body[6] = 3;
    auto base = body_far;
    base.body[6] = 0;
    CHECK(tlsh_distance(base, body_far) == 6);

    auto checksum = d;
    checksum.checksum ^= 0x5a;
    CHECK(tlsh_distance(d, checksum) == 1);

    auto length = d;
    length.l_value = static_cast<std::uint8_t>(d.l_value + 3);
    CHECK(tlsh_distance(d, length) == 36);
    length.l_value = static_cast<std::uint8_t>(d.l_value + 1);
    CHECK(tlsh_distance(d, length) == 1);

    auto ratio = d;
    ratio.q1_ratio = static_cast<std::uint8_t>((d.q1_ratio + 15) % 16); // wraps to distance 1
    CHECK(tlsh_distance(d, ratio) == 1);
    ratio.q1_ratio = static_cast<std::uint8_t>((d.q1_ratio + 4) % 16);
    CHECK(tlsh_distance(d, ratio) == 36);
}

TEST_CASE("tlsh distance is symmetric over seeded digest pairs") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto a = tlsh_hash(random_bytes(seed, 200 + seed * 37));
        const auto b = tlsh_hash(random_bytes(seed + 5000, 300 + seed * 11));
        CAPTURE(seed);
        CHECK(tlsh_distance(a, b) == tlsh_distance(b, a));
        CHECK(tlsh_distance(a, b) >= 0);
        CHECK(tlsh_distance(a, a) == 0);
        for (auto code : a.body) CHECK(code <= 3);
        CHECK(parse_tlsh(to_string(a)) == a);
    }
}

TEST_CASE("tlsh locality: small edits stay closer than unrelated data") {
    int closer = 0;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        const auto x = random_bytes(trial, 64 * 1024);
        const auto y = flip_bytes(x, 64 * 1024 / 100, trial + 7777);
        const auto z = random_bytes(trial + 99999, 64 * 1024);
        const auto dx = tlsh_hash(x);
        if (tlsh_distance(dx, tlsh_hash(y)) < tlsh_distance(dx, tlsh_hash(z))) {
            ++closer;
        }
    }
    CHECK(closer >= 95);
}

TEST_CASE("tlsh digest strings round-trip and reject malformed input") {
    for (const auto& v : golden("tlsh")) {
        CHECK(to_string(parse_tlsh(v.expected)) == v.expected);
    }
    const std::string good = golden("tlsh").front().expected;
    auto position_of = [](const std::string& text) -> std::size_t {
        try {
            parse_tlsh(text);
        } catch (const malformed_digest& e) {
            return e.position();
        }
        FAIL("expected MalformedDigest");
        return 0;
    };
    CHECK(position_of(good.substr(0, 69)) == 69);
    CHECK(position_of(good + "0") == 70);
    std::string bad = good;
    bad[12] = 'g';
    CHECK(position_of(bad) == 12);
}
