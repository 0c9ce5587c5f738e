#pragma once

#include <hashclust/bytes.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace test_support {

namespace fs = std::filesystem;

inline fs::path data_dir() { return fs::path(HASHCLUST_TEST_DATA); }

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) {
        s.pop_back();
    }
    return s;
}

struct golden_vector {
    std::string name;
    hashclust::byte_buffer input;
    std::string expected;
};

// Pairs every tests/data/golden/inputs/<name>.bin with <kind>/<name>.txt.
inline std::vector<golden_vector> golden(const std::string& kind) {
    std::vector<golden_vector> out;
    const fs::path root = data_dir() / "golden";
    for (const auto& entry : fs::directory_iterator(root / kind)) {
        if (entry.path().extension() != ".txt") continue;
        const std::string name = entry.path().stem().string();
        out.push_back({name, hashclust::read_file(root / "inputs" / (name + ".bin")),
                       trim(read_text(entry.path()))});
    }
    std::sort(out.begin(), out.end(),
              [](const golden_vector& a, const golden_vector& b) { return a.name < b.name; });
    return out;
}

inline hashclust::byte_buffer random_bytes(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 rng(seed);
    hashclust::byte_buffer out(n);
    for (auto& b : out) {
        b = static_cast<std::uint8_t>(rng() >> 56);
    }
    return out;
}

// Flips `count` distinct byte positions chosen by `seed`.
inline hashclust::byte_buffer flip_bytes(hashclust::byte_buffer data, std::size_t count,
                                         std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < count && i < idx.size(); ++i) {
        std::swap(idx[i], idx[i + rng() % (idx.size() - i)]);
        data[idx[i]] ^= static_cast<std::uint8_t>(1 + rng() % 255);
    }
    return data;
}

struct temp_dir {
    fs::path path;

    explicit temp_dir(const std::string& tag) {
        std::random_device rd;
        path = fs::temp_directory_path() / ("hashclust-" + tag + "-" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~temp_dir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    temp_dir(const temp_dir&) = delete;
    temp_dir& operator=(const temp_dir&) = delete;
};

} // namespace test_support
