#ifndef DSTRIPES_TRACE_HPP
#define DSTRIPES_TRACE_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dstripes/fixedpoint.hpp"

namespace dstripes {

enum class TraceErrorKind {
    BadMagic,
    UnsupportedVersion,
    Truncated,
    ValueOutOfRange,
    Io,
};

class TraceError : public std::runtime_error {
public:
    TraceError(TraceErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    TraceErrorKind kind() const { return kind_; }

private:
    TraceErrorKind kind_;
};

struct TraceLayer {
    uint32_t layer_id = 0;
    std::string name;
    std::array<uint32_t, 4> dims{1, 1, 1, 1}; // N, C, H, W
    QuantSpec qspec;
    std::vector<uint16_t> values; // dispatch order: row-major (n, c, y, x)

    friend bool operator==(const TraceLayer&, const TraceLayer&) = default;
};

struct ActivationTrace {
    uint8_t base_width = kMaxWidth;
    std::vector<TraceLayer> layers;

    friend bool operator==(const ActivationTrace&, const ActivationTrace&) = default;
};

// "DSTA" little-endian binary container, version 1.
void write_trace(const ActivationTrace& trace, const std::string& path);
ActivationTrace read_trace(const std::string& path);

/// One requested span bucket of a synthetic layer.
struct SpanBucket {
    int span = 1;
    double weight = 1.0;
};

struct SyntheticLayerSpec {
    std::string name;
    int groups = 16;            // detection groups to emit
    std::vector<SpanBucket> spans;
};

struct SyntheticSpec {
    int base_width = kMaxWidth;
    int group_size = 16;        // values per detection group
    std::vector<SyntheticLayerSpec> layers;
};

/// Deterministic trace whose per-group detected spans realize the requested
/// distribution exactly: every group carries one value pinning both the top
/// and bottom of its window.
ActivationTrace gen_synthetic(const SyntheticSpec& spec, uint64_t seed);

/// Parse a SyntheticSpec from its JSON description.
SyntheticSpec parse_synthetic_spec(const std::string& json_text);

} // namespace dstripes

#endif
