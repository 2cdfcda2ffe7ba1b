#include "dstripes/precdetect.hpp"

namespace dstripes {

namespace {

uint16_t or_bits(std::span<const uint16_t> group, int width) {
    if (group.empty())
        throw std::invalid_argument("or_reduce: empty group");
    if (width < 1 || width > kMaxWidth)
        throw std::invalid_argument("or_reduce: width must be in [1,16]");
    const uint32_t limit = 1u << width;
    uint32_t acc = 0;
    for (uint16_t v : group) {
        if (v >= limit)
            throw std::invalid_argument("or_reduce: value exceeds group width");
        acc |= v;
    }
    return static_cast<uint16_t>(acc);
}

} // namespace

OrVector or_reduce_raw(std::span<const uint16_t> group, int width) {
    return OrVector{or_bits(group, width), static_cast<uint8_t>(width)};
}

OrVector or_reduce(std::span<const FixedValue> group, int width) {
    if (group.empty())
        throw std::invalid_argument("or_reduce: empty group");
    uint32_t acc = 0;
    for (const FixedValue& v : group) {
        if (v.width != width)
            throw std::invalid_argument("or_reduce: width mismatch in group");
        acc |= v.raw;
    }
    return OrVector{static_cast<uint16_t>(acc), static_cast<uint8_t>(width)};
}

GroupPrecision detect_precision_raw(std::span<const uint16_t> group, int width) {
    const uint16_t bits = or_bits(group, width);
    GroupPrecision p;
    if (bits == 0) {
        p.is_zero_group = true;
        return p;
    }
    p.n_high = static_cast<uint8_t>(std::bit_width(static_cast<unsigned>(bits)) - 1);
    p.n_low = static_cast<uint8_t>(std::countr_zero(static_cast<unsigned>(bits)));
    return p;
}

GroupPrecision detect_precision(std::span<const FixedValue> group, int width) {
    const OrVector ov = or_reduce(group, width);
    GroupPrecision p;
    if (ov.bits == 0) {
        p.is_zero_group = true;
        return p;
    }
    p.n_high = static_cast<uint8_t>(std::bit_width(static_cast<unsigned>(ov.bits)) - 1);
    p.n_low = static_cast<uint8_t>(std::countr_zero(static_cast<unsigned>(ov.bits)));
    return p;
}

int encode_offset(uint32_t one_hot) {
    if (one_hot == 0 || (one_hot & (one_hot - 1)) != 0)
        throw std::invalid_argument("encode_offset: input is not one-hot");
    return std::countr_zero(one_hot);
}

std::vector<OffsetStep> offset_schedule(GroupPrecision p) {
    std::vector<OffsetStep> steps;
    if (p.is_zero_group) {
        steps.push_back(OffsetStep{0, true});
        return steps;
    }
    steps.reserve(static_cast<size_t>(p.span()));
    for (int off = p.n_high; off >= p.n_low; --off)
        steps.push_back(OffsetStep{static_cast<uint8_t>(off), off == p.n_low});
    return steps;
}

} // namespace dstripes
