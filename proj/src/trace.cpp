#include "dstripes/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

namespace dstripes {

namespace {

void put_u16(std::ostream& os, uint16_t v) {
    const char buf[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
    os.write(buf, 2);
}

void put_u32(std::ostream& os, uint32_t v) {
    const char buf[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF), static_cast<char>(v >> 24)};
    os.write(buf, 4);
}

uint8_t get_u8(std::istream& is) {
    char c;
    if (!is.get(c)) throw TraceError(TraceErrorKind::Truncated, "trace file truncated");
    return static_cast<uint8_t>(c);
}

uint16_t get_u16(std::istream& is) {
    const uint16_t lo = get_u8(is);
    const uint16_t hi = get_u8(is);
    return static_cast<uint16_t>(lo | (hi << 8));
}

uint32_t get_u32(std::istream& is) {
    const uint32_t lo = get_u16(is);
    const uint32_t hi = get_u16(is);
    return lo | (hi << 16);
}

constexpr char kMagic[4] = {'D', 'S', 'T', 'A'};
constexpr uint16_t kVersion = 1;

} // namespace

void write_trace(const ActivationTrace& trace, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw TraceError(TraceErrorKind::Io, "cannot open for writing: " + path);
    os.write(kMagic, 4);
    put_u16(os, kVersion);
    os.put(static_cast<char>(trace.base_width));
    put_u32(os, static_cast<uint32_t>(trace.layers.size()));
    const uint32_t limit = 1u << trace.base_width;
    for (const TraceLayer& layer : trace.layers) {
        put_u32(os, layer.layer_id);
        if (layer.name.size() > 0xFFFF)
            throw TraceError(TraceErrorKind::Io, "layer name too long");
        put_u16(os, static_cast<uint16_t>(layer.name.size()));
        os.write(layer.name.data(), static_cast<std::streamsize>(layer.name.size()));
        uint64_t count = 1;
        for (uint32_t d : layer.dims) {
            put_u32(os, d);
            count *= d;
        }
        os.put(static_cast<char>(layer.qspec.width));
        os.put(static_cast<char>(layer.qspec.frac_bits));
        os.put(static_cast<char>(layer.qspec.rounding));
        if (layer.values.size() != count)
            throw TraceError(TraceErrorKind::Io, "layer value count does not match dims");
        for (uint16_t v : layer.values) {
            if (v >= limit)
                throw TraceError(TraceErrorKind::ValueOutOfRange, "value exceeds base width");
            put_u16(os, v);
        }
    }
    if (!os) throw TraceError(TraceErrorKind::Io, "write failed: " + path);
}

ActivationTrace read_trace(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw TraceError(TraceErrorKind::Io, "cannot open for reading: " + path);
    char magic[4];
    if (!is.read(magic, 4)) throw TraceError(TraceErrorKind::Truncated, "trace file truncated");
    if (!std::equal(magic, magic + 4, kMagic))
        throw TraceError(TraceErrorKind::BadMagic, "bad magic, not a DSTA trace: " + path);
    const uint16_t version = get_u16(is);
    if (version != kVersion)
        throw TraceError(TraceErrorKind::UnsupportedVersion,
                         "unsupported trace version " + std::to_string(version));
    ActivationTrace trace;
    trace.base_width = get_u8(is);
    if (trace.base_width < 1 || trace.base_width > kMaxWidth)
        throw TraceError(TraceErrorKind::ValueOutOfRange, "base width out of range");
    const uint32_t layer_count = get_u32(is);
    const uint32_t limit = 1u << trace.base_width;
    trace.layers.reserve(layer_count);
    for (uint32_t l = 0; l < layer_count; ++l) {
        TraceLayer layer;
        layer.layer_id = get_u32(is);
        const uint16_t name_len = get_u16(is);
        layer.name.resize(name_len);
        if (name_len && !is.read(layer.name.data(), name_len))
            throw TraceError(TraceErrorKind::Truncated, "trace file truncated");
        uint64_t count = 1;
        for (uint32_t& d : layer.dims) {
            d = get_u32(is);
            count *= d;
        }
        layer.qspec.width = get_u8(is);
        layer.qspec.frac_bits = get_u8(is);
        const uint8_t rounding = get_u8(is);
        if (rounding > 1)
            throw TraceError(TraceErrorKind::ValueOutOfRange, "bad rounding mode");
        layer.qspec.rounding = static_cast<Rounding>(rounding);
        try {
            layer.qspec.validate();
        } catch (const std::invalid_argument& e) {
            throw TraceError(TraceErrorKind::ValueOutOfRange, e.what());
        }
        layer.values.resize(count);
        for (uint64_t i = 0; i < count; ++i) {
            const uint16_t v = get_u16(is);
            if (v >= limit)
                throw TraceError(TraceErrorKind::ValueOutOfRange,
                                 "activation exceeds base width in layer " + layer.name);
            layer.values[i] = v;
        }
        trace.layers.push_back(std::move(layer));
    }
    return trace;
}

namespace {

// Largest-remainder allocation of `total` groups to the weighted buckets.
std::vector<int> allocate_counts(const std::vector<SpanBucket>& spans, int total) {
    double weight_sum = 0.0;
    for (const SpanBucket& b : spans) {
        if (b.weight < 0.0)
            throw std::invalid_argument("gen_synthetic: negative span weight");
        weight_sum += b.weight;
    }
    if (weight_sum <= 0.0)
        throw std::invalid_argument("gen_synthetic: span weights sum to zero");
    std::vector<int> counts(spans.size(), 0);
    std::vector<std::pair<double, size_t>> remainders;
    int assigned = 0;
    for (size_t i = 0; i < spans.size(); ++i) {
        const double exact = spans[i].weight / weight_sum * total;
        counts[i] = static_cast<int>(std::floor(exact));
        assigned += counts[i];
        remainders.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (size_t i = 0; assigned < total; ++i, ++assigned)
        counts[remainders[i % remainders.size()].second]++;
    return counts;
}

} // namespace

ActivationTrace gen_synthetic(const SyntheticSpec& spec, uint64_t seed) {
    if (spec.base_width < 1 || spec.base_width > kMaxWidth)
        throw std::invalid_argument("gen_synthetic: base_width must be in [1,16]");
    if (spec.group_size < 1)
        throw std::invalid_argument("gen_synthetic: group_size must be positive");
    if (spec.layers.empty())
        throw std::invalid_argument("gen_synthetic: no layers requested");

    std::mt19937_64 rng(seed);
    ActivationTrace trace;
    trace.base_width = static_cast<uint8_t>(spec.base_width);

    uint32_t layer_id = 0;
    for (const SyntheticLayerSpec& lspec : spec.layers) {
        if (lspec.groups < 1)
            throw std::invalid_argument("gen_synthetic: layer needs at least one group");
        if (lspec.spans.empty())
            throw std::invalid_argument("gen_synthetic: layer has no span buckets");
        for (const SpanBucket& b : lspec.spans)
            if (b.span < 1 || b.span > spec.base_width)
                throw std::invalid_argument("gen_synthetic: infeasible span " +
                                            std::to_string(b.span));

        std::vector<int> group_spans;
        const std::vector<int> counts = allocate_counts(lspec.spans, lspec.groups);
        for (size_t i = 0; i < counts.size(); ++i)
            group_spans.insert(group_spans.end(), static_cast<size_t>(counts[i]),
                               lspec.spans[i].span);
        std::shuffle(group_spans.begin(), group_spans.end(), rng);

        TraceLayer layer;
        layer.layer_id = layer_id;
        layer.name = lspec.name.empty() ? "synthetic" + std::to_string(layer_id) : lspec.name;
        layer.dims = {1, 1, 1,
                      static_cast<uint32_t>(lspec.groups) * static_cast<uint32_t>(spec.group_size)};
        layer.qspec = QuantSpec{spec.base_width, 0, Rounding::Truncate};
        layer.values.reserve(static_cast<size_t>(lspec.groups) *
                             static_cast<size_t>(spec.group_size));

        for (int span : group_spans) {
            std::uniform_int_distribution<int> low_dist(0, spec.base_width - span);
            const int n_low = low_dist(rng);
            const int n_high = n_low + span - 1;
            const uint16_t window =
                static_cast<uint16_t>(((1u << (n_high + 1)) - 1u) & ~((1u << n_low) - 1u));
            std::uniform_int_distribution<uint32_t> bits_dist(0, 0xFFFFu);
            for (int i = 0; i < spec.group_size; ++i) {
                uint16_t v = static_cast<uint16_t>(bits_dist(rng)) & window;
                if (i == 0) // pin both edges of the window in one value
                    v |= static_cast<uint16_t>((1u << n_high) | (1u << n_low));
                layer.values.push_back(v);
            }
        }
        trace.layers.push_back(std::move(layer));
        ++layer_id;
    }
    return trace;
}

SyntheticSpec parse_synthetic_spec(const std::string& json_text) {
    const nlohmann::json j = nlohmann::json::parse(json_text);
    SyntheticSpec spec;
    spec.base_width = j.value("base_width", kMaxWidth);
    spec.group_size = j.value("group_size", 16);
    if (!j.contains("layers") || !j.at("layers").is_array())
        throw std::invalid_argument("synthetic spec: missing \"layers\" array");
    for (const auto& jl : j.at("layers")) {
        SyntheticLayerSpec lspec;
        lspec.name = jl.value("name", "");
        lspec.groups = jl.value("groups", 16);
        if (jl.contains("spans")) {
            for (const auto& js : jl.at("spans")) {
                SpanBucket b;
                if (js.is_number()) {
                    b.span = js.get<int>();
                } else {
                    b.span = js.value("span", 1);
                    b.weight = js.value("weight", 1.0);
                }
                lspec.spans.push_back(b);
            }
        }
        spec.layers.push_back(std::move(lspec));
    }
    return spec;
}

} // namespace dstripes
