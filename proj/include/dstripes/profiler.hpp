#ifndef DSTRIPES_PROFILER_HPP
#define DSTRIPES_PROFILER_HPP

#include <string>
#include <vector>

#include "dstripes/tinynet.hpp"

namespace dstripes {

enum class ProfileMode { FixedPoint, Msp2 };

struct ProfileEntry {
    std::string layer;
    int n_high = kMaxWidth - 1;
    int n_low = 0;
    int msp2_budget = kMaxWidth;
};

struct PrecisionProfile {
    ProfileMode mode = ProfileMode::FixedPoint;
    std::vector<ProfileEntry> entries;
    double accuracy_achieved = 1.0;
    double baseline_accuracy = 1.0;

    const ProfileEntry* find(const std::string& layer) const;
};

/// How a candidate tightening is accepted during the greedy descent.
struct ProfileTarget {
    // Fraction of eval inputs whose top-1 decision must match the baseline.
    double retention = 1.0;
    // Require every recorded activation (not just top-1) to be unchanged; the
    // resulting fixed-point profile is exactly the observed envelope.
    bool exact_activations = false;
};

PrecisionProfile profile_fixedpoint(const TinyNet& net, const std::vector<Tensor>& inputs,
                                    const ProfileTarget& target);
PrecisionProfile profile_msp2(const TinyNet& net, const std::vector<Tensor>& inputs,
                              const ProfileTarget& target);

/// Tight per-layer (n_high, n_low) envelope observed in a trace.
PrecisionProfile envelope_profile(const ActivationTrace& trace);

void write_profile(const PrecisionProfile& profile, const std::string& path);
PrecisionProfile read_profile(const std::string& path);

} // namespace dstripes

#endif
