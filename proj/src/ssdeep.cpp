#include <hashclust/error.hpp>
#include <hashclust/ssdeep.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <limits>
#include <vector>

namespace hashclust {

namespace {

constexpr std::string_view base64_alphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

constexpr std::uint32_t hash_prime = 0x01000193;
constexpr std::uint32_t hash_init = 0x28021967;
constexpr std::size_t num_levels = 31;
constexpr std::size_t half_length = ssdeep_signature_length / 2;

constexpr std::uint64_t level_block_size(std::size_t level) {
    return std::uint64_t{ssdeep_min_block_size} << level;
}

constexpr std::uint32_t piece_hash(std::uint8_t c, std::uint32_t h) {
    return (h * hash_prime) ^ c;
}

constexpr char piece_char(std::uint32_t h) {
    return base64_alphabet[h % 64];
}

// Adler-style hash over the last 7 bytes; its value selects piece boundaries.
class rolling_hash {
public:
    void update(std::uint8_t c) {
        h2_ -= h1_;
        h2_ += static_cast<std::uint32_t>(ssdeep_rolling_window) * c;
        h1_ += c;
        h1_ -= window_[pos_];
        window_[pos_] = c;
        pos_ = (pos_ + 1) % ssdeep_rolling_window;
        h3_ = (h3_ << 5) ^ c;
    }

    std::uint32_t sum() const { return h1_ + h2_ + h3_; }

private:
    std::array<std::uint8_t, ssdeep_rolling_window> window_{};
    std::uint32_t h1_ = 0;
    std::uint32_t h2_ = 0;
    std::uint32_t h3_ = 0;
    std::size_t pos_ = 0;
};

// One candidate block size. `pieces[length]` holds the overflow character once
// the signature is full; it is '\0' otherwise.
struct level_state {
    std::uint32_t h = hash_init;
    std::uint32_t half_h = hash_init;
    std::array<char, ssdeep_signature_length + 1> pieces{};
    std::size_t length = 0;
    char half_tail = '\0';
};

// Levels are spawned lazily: level i+1 is cloned from level i the first time
// level i triggers, so only block sizes that have seen a boundary are tracked.
class ctph_engine {
public:
    ctph_engine() { levels_[0] = level_state{}; }

    void update(byte_view data) {
        for (std::uint8_t c : data) {
            step(c);
        }
        total_ += data.size();
    }

    ssdeep_digest finish() const;

private:
    void step(std::uint8_t c);
    void spawn_level();

    std::array<level_state, num_levels> levels_{};
    std::size_t active_ = 1;
    rolling_hash roll_;
    bool track_last_ = false;
    std::uint32_t last_h_ = hash_init;
    std::uint64_t total_ = 0;
};

void ctph_engine::spawn_level() {
    if (active_ < num_levels) {
        level_state& next = levels_[active_];
        next = level_state{};
        next.h = levels_[active_ - 1].h;
        next.half_h = levels_[active_ - 1].half_h;
        ++active_;
    } else if (!track_last_) {
        track_last_ = true;
        last_h_ = levels_[num_levels - 1].h;
    }
}

void ctph_engine::step(std::uint8_t c) {
    roll_.update(c);
    const std::uint32_t trigger = roll_.sum();

    for (std::size_t i = 0; i < active_; ++i) {
        levels_[i].h = piece_hash(c, levels_[i].h);
        levels_[i].half_h = piece_hash(c, levels_[i].half_h);
    }
    if (track_last_) {
        last_h_ = piece_hash(c, last_h_);
    }

    // A boundary at 2*bs is always a boundary at bs, so stop at the first miss.
    for (std::size_t i = 0; i < active_; ++i) {
        const std::uint64_t bs = level_block_size(i);
        if (trigger % bs != bs - 1) {
            break;
        }
        if (levels_[i].length == 0) {
            spawn_level();
        }
        level_state& lv = levels_[i];
        lv.pieces[lv.length] = piece_char(lv.h);
        lv.half_tail = piece_char(lv.half_h);
        if (lv.length < ssdeep_signature_length - 1) {
            lv.pieces[++lv.length] = '\0';
            lv.h = hash_init;
            if (lv.length < half_length) {
                lv.half_h = hash_init;
                lv.half_tail = '\0';
            }
        }
    }
}

ssdeep_digest ctph_engine::finish() const {
    std::size_t bi = 0;
    while (level_block_size(bi) * ssdeep_signature_length < total_) {
        ++bi;
        if (bi >= num_levels) {
            throw error(errc::invalid_argument, "input too large for ssdeep block sizes");
        }
    }
    while (bi >= active_) {
        --bi;
    }
    while (bi > 0 && levels_[bi].length < half_length) {
        --bi;
    }

    const std::uint32_t tail = roll_.sum();
    const level_state& coarse = levels_[bi];

    ssdeep_digest out;
    out.block_size = static_cast<std::uint32_t>(level_block_size(bi));
    out.coarse.assign(coarse.pieces.data(), coarse.length);
    if (tail != 0) {
        out.coarse.push_back(piece_char(coarse.h));
    } else if (coarse.pieces[coarse.length] != '\0') {
        out.coarse.push_back(coarse.pieces[coarse.length]);
    }

    if (bi + 1 < active_) {
        const level_state& fine = levels_[bi + 1];
        out.fine.assign(fine.pieces.data(), std::min(fine.length, half_length - 1));
        if (tail != 0) {
            out.fine.push_back(piece_char(fine.half_h));
        } else if (fine.half_tail != '\0') {
            out.fine.push_back(fine.half_tail);
        }
    } else if (tail != 0) {
        out.fine.push_back(piece_char(bi == 0 ? coarse.h : last_h_));
    }
    return out;
}

// Runs of more than three identical characters carry no extra signal.
std::string collapse_runs(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i < 3 || s[i] != s[i - 1] || s[i] != s[i - 2] || s[i] != s[i - 3]) {
            out.push_back(s[i]);
        }
    }
    return out;
}

bool shares_window(std::string_view a, std::string_view b) {
    if (a.size() < ssdeep_rolling_window || b.size() < ssdeep_rolling_window) {
        return false;
    }
    for (std::size_t i = 0; i + ssdeep_rolling_window <= a.size(); ++i) {
        if (b.find(a.substr(i, ssdeep_rolling_window)) != std::string_view::npos) {
            return true;
        }
    }
    return false;
}

// Levenshtein distance with unit insert/delete and substitution cost 2.
std::uint32_t weighted_edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::uint32_t> prev(b.size() + 1);
    std::vector<std::uint32_t> cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) {
        prev[j] = static_cast<std::uint32_t>(j);
    }
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<std::uint32_t>(i);
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::uint32_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 2);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::uint32_t score_signatures(std::string_view a, std::string_view b, std::uint64_t block_size) {
    if (a.size() > ssdeep_signature_length || b.size() > ssdeep_signature_length) {
        return 0;
    }
    if (!shares_window(a, b)) {
        return 0;
    }
    std::uint32_t score = weighted_edit_distance(a, b);
    score = score * ssdeep_signature_length / static_cast<std::uint32_t>(a.size() + b.size());
    score = 100 * score / ssdeep_signature_length;
    if (score >= 100) {
        return 0;
    }
    score = 100 - score;

    // Small block sizes: cap the score so short coincidental matches stay low.
    constexpr std::uint64_t uncapped_from =
        (99 + ssdeep_rolling_window) / ssdeep_rolling_window * ssdeep_min_block_size;
    if (block_size >= uncapped_from) {
        return score;
    }
    const std::uint64_t cap = block_size / ssdeep_min_block_size * std::min(a.size(), b.size());
    return static_cast<std::uint32_t>(std::min<std::uint64_t>(score, cap));
}

bool valid_block_size(std::uint64_t bs) {
    for (std::size_t i = 0; i < num_levels; ++i) {
        if (bs == level_block_size(i)) {
            return true;
        }
    }
    return false;
}

} // namespace

int ssdeep_alphabet_index(char c) noexcept {
    const auto pos = base64_alphabet.find(c);
    return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}

ssdeep_digest ssdeep_hash(byte_view data) {
    if (data.empty()) {
        throw error(errc::empty_input, "ssdeep_hash: empty input");
    }
    ctph_engine engine;
    engine.update(data);
    return engine.finish();
}

int ssdeep_compare(const ssdeep_digest& a, const ssdeep_digest& b) {
    const std::uint64_t bs1 = a.block_size;
    const std::uint64_t bs2 = b.block_size;
    if (bs1 != bs2 && bs1 * 2 != bs2 && bs2 * 2 != bs1) {
        return 0;
    }

    const std::string a1 = collapse_runs(a.coarse);
    const std::string a2 = collapse_runs(a.fine);
    const std::string b1 = collapse_runs(b.coarse);
    const std::string b2 = collapse_runs(b.fine);

    if (bs1 == bs2 && a1 == b1 && a2 == b2) {
        return 100;
    }

    std::uint32_t score = 0;
    if (bs1 == bs2) {
        score = std::max(score_signatures(a1, b1, bs1), score_signatures(a2, b2, bs1 * 2));
    } else if (bs1 * 2 == bs2) {
        score = score_signatures(a2, b1, bs2);
    } else {
        score = score_signatures(a1, b2, bs1);
    }
    return static_cast<int>(score);
}

std::string to_string(const ssdeep_digest& digest) {
    std::string out = std::to_string(digest.block_size);
    out.push_back(':');
    out += digest.coarse;
    out.push_back(':');
    out += digest.fine;
    return out;
}

ssdeep_digest parse_ssdeep(std::string_view text) {
    const auto first = text.find(':');
    if (first == std::string_view::npos) {
        throw malformed_digest(text.size(), "ssdeep digest: missing ':' after block size");
    }
    const auto second = text.find(':', first + 1);
    if (second == std::string_view::npos) {
        throw malformed_digest(text.size(), "ssdeep digest: missing fine signature field");
    }

    std::uint64_t bs = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + first, bs);
    if (first == 0 || ec != std::errc{} || end != text.data() + first) {
        const auto pos = first == 0 ? 0 : static_cast<std::size_t>(end - text.data());
        throw malformed_digest(pos, "ssdeep digest: bad block size");
    }
    if (!valid_block_size(bs)) {
        throw malformed_digest(0, "ssdeep digest: block size is not 3*2^n");
    }

    auto check_field = [&](std::size_t begin, std::size_t stop, std::size_t limit) {
        for (std::size_t i = begin; i < stop; ++i) {
            if (ssdeep_alphabet_index(text[i]) < 0) {
                throw malformed_digest(i, "ssdeep digest: invalid signature character");
            }
        }
        if (stop - begin > limit) {
            throw malformed_digest(begin + limit, "ssdeep digest: signature too long");
        }
    };
    check_field(first + 1, second, ssdeep_signature_length);
    check_field(second + 1, text.size(), half_length);

    ssdeep_digest out;
    out.block_size = static_cast<std::uint32_t>(bs);
    out.coarse = std::string(text.substr(first + 1, second - first - 1));
    out.fine = std::string(text.substr(second + 1));
    return out;
}

} // namespace hashclust
