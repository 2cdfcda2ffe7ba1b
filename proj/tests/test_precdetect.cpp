#include <doctest.h>

#include <random>
#include <vector>

#include "dstripes/precdetect.hpp"

using namespace dstripes;

namespace {

std::vector<FixedValue> group8(std::initializer_list<uint16_t> raws) {
    std::vector<FixedValue> g;
    for (uint16_t r : raws) g.push_back(make_fixed(r, 8));
    return g;
}

// Per-value brute force: max msb / min lsb over non-zero members.
GroupPrecision brute_detect(std::span<const uint16_t> vals) {
    GroupPrecision p;
    int hi = -1, lo = 16;
    for (uint16_t v : vals) {
        for (int b = 0; b < 16; ++b) {
            if ((v >> b) & 1) {
                hi = std::max(hi, b);
                lo = std::min(lo, b);
            }
        }
    }
    if (hi < 0) {
        p.is_zero_group = true;
    } else {
        p.n_high = static_cast<uint8_t>(hi);
        p.n_low = static_cast<uint8_t>(lo);
    }
    return p;
}

} // namespace

TEST_CASE("or_reduce worked example") {
    const auto g = group8({0b00100000, 0b00000010, 0b00010100, 0b00001000});
    CHECK(or_reduce(g, 8).bits == 0b00111110);
    CHECK(or_reduce(group8({0, 0, 0, 0}), 8).bits == 0);
    CHECK(or_reduce(group8({0b1011}), 8).bits == 0b1011);
}

TEST_CASE("or_reduce error cases") {
    CHECK_THROWS_AS(or_reduce({}, 8), std::invalid_argument);
    std::vector<FixedValue> mixed = {make_fixed(1, 8), make_fixed(1, 4)};
    CHECK_THROWS_AS(or_reduce(mixed, 8), std::invalid_argument);
    const std::vector<uint16_t> wide = {0x100};
    CHECK_THROWS_AS(or_reduce_raw(wide, 8), std::invalid_argument);
}

TEST_CASE("detect_precision examples") {
    const auto g = group8({0b00100000, 0b00000010, 0b00010100, 0b00001000});
    const GroupPrecision p = detect_precision(g, 8);
    CHECK(p.n_high == 5);
    CHECK(p.n_low == 1);
    CHECK(p.span() == 5);

    const GroupPrecision z = detect_precision(group8({0, 0, 0, 0}), 8);
    CHECK(z.is_zero_group);
    CHECK(z.span() == 1);

    const std::vector<uint16_t> top = {0x8000};
    const GroupPrecision t = detect_precision_raw(top, 16);
    CHECK(t.n_high == 15);
    CHECK(t.n_low == 15);
    CHECK(t.span() == 1);
}

TEST_CASE("detector matches brute force, exhaustive 4x4-bit") {
    std::vector<uint16_t> vals(4);
    for (uint32_t code = 0; code < (1u << 16); ++code) {
        for (int i = 0; i < 4; ++i) vals[i] = (code >> (4 * i)) & 0xF;
        const GroupPrecision got = detect_precision_raw(vals, 4);
        const GroupPrecision want = brute_detect(vals);
        REQUIRE(got == want);
    }
}

TEST_CASE("detector matches brute force, random 16x16-bit") {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<uint32_t> dist(0, 0xFFFF);
    std::vector<uint16_t> vals(16);
    for (int iter = 0; iter < 20000; ++iter) {
        for (auto& v : vals) v = static_cast<uint16_t>(dist(rng));
        REQUIRE(detect_precision_raw(vals, 16) == brute_detect(vals));
    }
}

TEST_CASE("subset dominance") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<uint32_t> dist(1, 0xFFFF);
    for (int iter = 0; iter < 2000; ++iter) {
        std::vector<uint16_t> g(16);
        for (auto& v : g) v = static_cast<uint16_t>(dist(rng));
        const GroupPrecision whole = detect_precision_raw(g, 16);
        for (size_t cut : {size_t{4}, size_t{8}, size_t{12}}) {
            const GroupPrecision sub = detect_precision_raw({g.data(), cut}, 16);
            REQUIRE(sub.n_high <= whole.n_high);
            REQUIRE(sub.n_low >= whole.n_low);
            REQUIRE(sub.span() <= whole.span());
        }
    }
}

TEST_CASE("encode_offset") {
    CHECK(encode_offset(0b00100000) == 5);
    CHECK(encode_offset(0b00000001) == 0);
    CHECK(encode_offset(0x8000) == 15);
    for (int k = 0; k < 16; ++k) CHECK(encode_offset(1u << k) == k);
    CHECK_THROWS_AS(encode_offset(0), std::invalid_argument);
    CHECK_THROWS_AS(encode_offset(0b110), std::invalid_argument);
}

TEST_CASE("offset_schedule") {
    const auto s = offset_schedule(GroupPrecision{5, 1, false});
    REQUIRE(s.size() == 5);
    const std::vector<OffsetStep> want = {{5, false}, {4, false}, {3, false}, {2, false}, {1, true}};
    CHECK(s == want);

    const auto one = offset_schedule(GroupPrecision{7, 7, false});
    REQUIRE(one.size() == 1);
    CHECK(one[0] == OffsetStep{7, true});

    const auto zero = offset_schedule(GroupPrecision{0, 0, true});
    REQUIRE(zero.size() == 1);
    CHECK(zero[0] == OffsetStep{0, true});
}

TEST_CASE("offset_schedule properties") {
    for (int hi = 0; hi < 16; ++hi) {
        for (int lo = 0; lo <= hi; ++lo) {
            const GroupPrecision p{static_cast<uint8_t>(hi), static_cast<uint8_t>(lo), false};
            const auto s = offset_schedule(p);
            REQUIRE(static_cast<int>(s.size()) == p.span());
            int eogs = 0;
            for (size_t i = 0; i < s.size(); ++i) {
                if (i) CHECK(s[i].offset == s[i - 1].offset - 1);
                if (s[i].end_of_group) ++eogs;
            }
            CHECK(eogs == 1);
            CHECK(s.back().end_of_group);
        }
    }
}
