#ifndef DSTRIPES_PRECDETECT_HPP
#define DSTRIPES_PRECDETECT_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "dstripes/fixedpoint.hpp"

namespace dstripes {

/// Detected precision window for a group of activations.
struct GroupPrecision {
    uint8_t n_high = 0;
    uint8_t n_low = 0;
    bool is_zero_group = false;

    // A zero group still occupies one dispatch cycle so the end-of-group
    // protocol stays in lockstep.
    int span() const { return is_zero_group ? 1 : n_high - n_low + 1; }

    friend bool operator==(const GroupPrecision&, const GroupPrecision&) = default;
};

/// Per-bit-position OR across a group, as computed by the transposer.
struct OrVector {
    uint16_t bits = 0;
    uint8_t width = kMaxWidth;
};

OrVector or_reduce(std::span<const FixedValue> group, int width);
OrVector or_reduce_raw(std::span<const uint16_t> group, int width);

GroupPrecision detect_precision(std::span<const FixedValue> group, int width);
GroupPrecision detect_precision_raw(std::span<const uint16_t> group, int width);

/// Binary index of the single set bit in a one-hot pattern.
int encode_offset(uint32_t one_hot);

/// One dispatcher broadcast cycle: current bit offset plus the EOG flag.
struct OffsetStep {
    uint8_t offset = 0;
    bool end_of_group = false;

    friend bool operator==(const OffsetStep&, const OffsetStep&) = default;
};

/// Offsets n_high, n_high-1, ..., n_low; EOG set on the last element only.
std::vector<OffsetStep> offset_schedule(GroupPrecision p);

} // namespace dstripes

#endif
