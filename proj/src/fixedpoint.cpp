#include "dstripes/fixedpoint.hpp"

#include <cmath>

namespace dstripes {

FixedValue quantize(double x, const QuantSpec& spec) {
    spec.validate();
    if (x < 0.0)
        throw std::invalid_argument("quantize: negative input (activations are post-ReLU)");
    const double scaled = std::ldexp(x, spec.frac_bits);
    double rounded;
    switch (spec.rounding) {
        case Rounding::Truncate:
            rounded = std::floor(scaled);
            break;
        case Rounding::NearestEven:
            rounded = std::nearbyint(scaled); // FE_TONEAREST is the default env
            break;
        default:
            throw std::invalid_argument("quantize: bad rounding mode");
    }
    const double max_raw = static_cast<double>((1u << spec.width) - 1u);
    if (rounded > max_raw) rounded = max_raw;
    if (rounded < 0.0) rounded = 0.0;
    return FixedValue{static_cast<uint16_t>(rounded), static_cast<uint8_t>(spec.width)};
}

uint16_t msp2_truncate_raw(uint16_t raw, int budget) {
    if (budget < 0)
        throw std::invalid_argument("msp2_truncate: negative budget");
    unsigned v = raw;
    while (std::popcount(v) > budget)
        v &= v - 1; // drop lowest set bit
    return static_cast<uint16_t>(v);
}

} // namespace dstripes
