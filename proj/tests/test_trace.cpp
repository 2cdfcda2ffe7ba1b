#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "dstripes/precdetect.hpp"
#include "dstripes/tinynet.hpp"
#include "dstripes/trace.hpp"

using namespace dstripes;

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

ActivationTrace sample_trace() {
    ActivationTrace t;
    t.base_width = 12;
    TraceLayer l;
    l.layer_id = 3;
    l.name = "conv1";
    l.dims = {2, 1, 2, 3};
    l.qspec = QuantSpec{12, 6, Rounding::NearestEven};
    l.values = {0, 1, 2, 4093, 100, 7, 0, 0, 42, 4095, 1, 2};
    t.layers.push_back(l);
    return t;
}

void corrupt_byte(const std::string& path, size_t offset, char value) {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(static_cast<std::streamoff>(offset));
    f.put(value);
}

} // namespace

TEST_CASE("trace round trip is bit exact") {
    const auto path = temp_path("dst_roundtrip.dsta");
    const ActivationTrace t = sample_trace();
    write_trace(t, path);
    CHECK(read_trace(path) == t);

    // The file itself is stable: write twice, identical bytes.
    const auto path2 = temp_path("dst_roundtrip2.dsta");
    write_trace(t, path2);
    std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(a)), {});
    const std::string bytes_b((std::istreambuf_iterator<char>(b)), {});
    CHECK(bytes_a == bytes_b);
}

TEST_CASE("trace error cases") {
    const auto path = temp_path("dst_corrupt.dsta");
    write_trace(sample_trace(), path);

    SUBCASE("bad magic") {
        corrupt_byte(path, 0, 'X');
        try {
            read_trace(path);
            FAIL("expected BadMagic");
        } catch (const TraceError& e) {
            CHECK(e.kind() == TraceErrorKind::BadMagic);
        }
    }
    SUBCASE("unsupported version") {
        corrupt_byte(path, 4, 9);
        try {
            read_trace(path);
            FAIL("expected UnsupportedVersion");
        } catch (const TraceError& e) {
            CHECK(e.kind() == TraceErrorKind::UnsupportedVersion);
        }
    }
    SUBCASE("truncated") {
        std::filesystem::resize_file(path, std::filesystem::file_size(path) - 5);
        try {
            read_trace(path);
            FAIL("expected Truncated");
        } catch (const TraceError& e) {
            CHECK(e.kind() == TraceErrorKind::Truncated);
        }
    }
    SUBCASE("value out of range") {
        // Last value byte pair: force a value >= 2^12.
        corrupt_byte(path, std::filesystem::file_size(path) - 1, 0x40);
        try {
            read_trace(path);
            FAIL("expected ValueOutOfRange");
        } catch (const TraceError& e) {
            CHECK(e.kind() == TraceErrorKind::ValueOutOfRange);
        }
    }
    SUBCASE("missing file") {
        try {
            read_trace(temp_path("dst_does_not_exist.dsta"));
            FAIL("expected Io");
        } catch (const TraceError& e) {
            CHECK(e.kind() == TraceErrorKind::Io);
        }
    }
}

TEST_CASE("gen_synthetic realizes the requested spans exactly") {
    SyntheticSpec spec;
    spec.base_width = 16;
    spec.group_size = 16;
    spec.layers.push_back(SyntheticLayerSpec{"a", 40, {{8, 1.0}}});
    spec.layers.push_back(SyntheticLayerSpec{"b", 60, {{2, 1.0}, {5, 2.0}}});
    const ActivationTrace t = gen_synthetic(spec, 99);

    REQUIRE(t.layers.size() == 2);
    std::vector<int> spans_a, spans_b;
    for (size_t g = 0; g < 40; ++g)
        spans_a.push_back(
            detect_precision_raw({t.layers[0].values.data() + 16 * g, 16}, 16).span());
    for (size_t g = 0; g < 60; ++g)
        spans_b.push_back(
            detect_precision_raw({t.layers[1].values.data() + 16 * g, 16}, 16).span());
    CHECK(std::count(spans_a.begin(), spans_a.end(), 8) == 40);
    CHECK(std::count(spans_b.begin(), spans_b.end(), 2) == 20);
    CHECK(std::count(spans_b.begin(), spans_b.end(), 5) == 40);
}

TEST_CASE("gen_synthetic is deterministic and seed sensitive") {
    SyntheticSpec spec;
    spec.layers.push_back(SyntheticLayerSpec{"a", 32, {{1, 1.0}, {16, 1.0}}});
    CHECK(gen_synthetic(spec, 5) == gen_synthetic(spec, 5));
    CHECK(gen_synthetic(spec, 5) != gen_synthetic(spec, 6));
}

TEST_CASE("gen_synthetic rejects infeasible specs") {
    SyntheticSpec spec;
    spec.base_width = 8;
    spec.layers.push_back(SyntheticLayerSpec{"a", 4, {{9, 1.0}}});
    CHECK_THROWS_AS(gen_synthetic(spec, 1), std::invalid_argument);
    spec.layers[0].spans = {{0, 1.0}};
    CHECK_THROWS_AS(gen_synthetic(spec, 1), std::invalid_argument);
    spec.layers.clear();
    CHECK_THROWS_AS(gen_synthetic(spec, 1), std::invalid_argument);
}

TEST_CASE("parse_synthetic_spec") {
    const auto spec = parse_synthetic_spec(R"({
        "base_width": 12, "group_size": 8,
        "layers": [{"name": "x", "groups": 10, "spans": [4, {"span": 6, "weight": 3}]}]
    })");
    CHECK(spec.base_width == 12);
    CHECK(spec.group_size == 8);
    REQUIRE(spec.layers.size() == 1);
    REQUIRE(spec.layers[0].spans.size() == 2);
    CHECK(spec.layers[0].spans[0].span == 4);
    CHECK(spec.layers[0].spans[1].weight == 3.0);
    CHECK_THROWS(parse_synthetic_spec("{"));
    CHECK_THROWS_AS(parse_synthetic_spec("{}"), std::invalid_argument);
}
