#ifndef DSTRIPES_FIXEDPOINT_HPP
#define DSTRIPES_FIXEDPOINT_HPP

#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>

namespace dstripes {

inline constexpr int kMaxWidth = 16;

enum class Rounding : uint8_t { Truncate = 0, NearestEven = 1 };

/// Fixed-point layout for quantizing real-valued activations.
struct QuantSpec {
    int width = kMaxWidth;       // total bits, 1..16
    int frac_bits = 0;           // fractional bits, 0..width
    Rounding rounding = Rounding::Truncate;

    void validate() const {
        if (width < 1 || width > kMaxWidth)
            throw std::invalid_argument("QuantSpec: width must be in [1,16]");
        if (frac_bits < 0 || frac_bits > width)
            throw std::invalid_argument("QuantSpec: frac_bits must be in [0,width]");
    }

    friend bool operator==(const QuantSpec&, const QuantSpec&) = default;
};

/// Non-negative fixed-point magnitude. raw < 2^width always holds.
struct FixedValue {
    uint16_t raw = 0;
    uint8_t width = kMaxWidth;

    friend bool operator==(const FixedValue&, const FixedValue&) = default;
};

inline FixedValue make_fixed(uint32_t raw, int width) {
    if (width < 1 || width > kMaxWidth)
        throw std::invalid_argument("FixedValue: width must be in [1,16]");
    if (raw >= (1u << width))
        throw std::invalid_argument("FixedValue: raw does not fit in width");
    return FixedValue{static_cast<uint16_t>(raw), static_cast<uint8_t>(width)};
}

/// Quantize a non-negative real to fixed point, saturating at 2^width-1.
FixedValue quantize(double x, const QuantSpec& spec);

/// Index of the highest set bit (bit 0 = LSB), or nullopt for zero.
inline std::optional<int> msb_position(FixedValue v) {
    if (v.raw == 0) return std::nullopt;
    return std::bit_width(static_cast<unsigned>(v.raw)) - 1;
}

/// Index of the lowest set bit, or nullopt for zero.
inline std::optional<int> lsb_position(FixedValue v) {
    if (v.raw == 0) return std::nullopt;
    return std::countr_zero(static_cast<unsigned>(v.raw));
}

/// Number of set bits.
inline int essential_bits(FixedValue v) {
    return std::popcount(static_cast<unsigned>(v.raw));
}

/// Keep only the `budget` most significant set bits; clear the rest.
uint16_t msp2_truncate_raw(uint16_t raw, int budget);

inline FixedValue msp2_truncate(FixedValue v, int budget) {
    return FixedValue{msp2_truncate_raw(v.raw, budget), v.width};
}

} // namespace dstripes

#endif
