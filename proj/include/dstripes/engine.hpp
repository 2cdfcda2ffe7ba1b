#ifndef DSTRIPES_ENGINE_HPP
#define DSTRIPES_ENGINE_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dstripes/precdetect.hpp"

namespace dstripes {

enum class EngineKind : int {
    BitParallel = 0,    // DaDianNao-style full-width baseline
    StripesPerLayer = 1,
    DynamicStripes = 2,
    EssentialBits = 3,  // pays only for activation bits that are 1
};

const char* engine_name(EngineKind k);
std::optional<EngineKind> engine_from_name(const std::string& name);

/// Shifter range of the essential-bit engine. A limited shifter of k bits can
/// only place bits within 2^k-1 positions below the broadcast column offset.
struct ShifterReach {
    bool full = true;
    int bits = 0;
};

struct ArchConfig {
    EngineKind kind = EngineKind::DynamicStripes;
    int tiles = 16;
    int filters_per_tile = 16;
    int weights_per_filter = 16;
    int pallet_size = 256;     // activations broadcast concurrently
    int subgroup_size = 16;    // activations sharing one detected precision
    int base_width = 16;
    ShifterReach shifter_reach{};

    void validate() const;
};

struct CycleResult {
    uint64_t cycles = 0;
    std::vector<int> subgroup_spans; // diagnostic, detection spans per subgroup
};

struct LayerReport {
    uint32_t layer_id = 0;
    std::string name;
    EngineKind kind = EngineKind::BitParallel;
    uint64_t total_cycles = 0;
    uint64_t pallet_count = 0;
    uint64_t activation_count = 0;
    std::array<uint64_t, kMaxWidth + 1> span_histogram{}; // index = detected span
};

// Per-pallet cycle models. Pallets are spans of exactly cfg.pallet_size raw
// activations (zero padded at layer edges).
CycleResult pallet_cycles_bitparallel(std::span<const uint16_t> pallet, const ArchConfig& cfg);
CycleResult pallet_cycles_stripes(std::span<const uint16_t> pallet, const ArchConfig& cfg,
                                  std::pair<int, int> layer_precision);
CycleResult pallet_cycles_dynamic(std::span<const uint16_t> pallet, const ArchConfig& cfg);
CycleResult pallet_cycles_essential(std::span<const uint16_t> pallet, const ArchConfig& cfg,
                                    std::optional<int> msp2_budget);

/// Greedy limited-shifter schedule cost for one subgroup (see EssentialBits).
int limited_shifter_cycles(std::span<const uint16_t> subgroup, int reach_bits);

/// Functional reference for the modified serial inner-product unit: processes
/// one bit plane per scheduled offset and shifts the adder-tree output into
/// the accumulator. Exact integer result.
int64_t sip_reference(std::span<const uint16_t> activations,
                      std::span<const int32_t> weights,
                      std::span<const OffsetStep> schedule);

/// Per-layer knobs supplied by a precision profile.
struct LayerProfileInput {
    std::optional<std::pair<int, int>> window; // (n_high, n_low) fixed-point profile
    std::optional<int> msp2_budget;
};

LayerReport simulate_layer(std::span<const uint16_t> values, uint32_t layer_id,
                           const std::string& name, const ArchConfig& cfg,
                           const LayerProfileInput& profile);

/// cycles_b / cycles_a per network.
double speedup(uint64_t cycles_a, uint64_t cycles_b);

/// Geometric mean of per-network speedup ratios.
double geomean(std::span<const double> ratios);

} // namespace dstripes

#endif
