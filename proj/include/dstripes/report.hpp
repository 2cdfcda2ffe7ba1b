#ifndef DSTRIPES_REPORT_HPP
#define DSTRIPES_REPORT_HPP

#include <map>
#include <string>
#include <vector>

#include "dstripes/engine.hpp"
#include "dstripes/profiler.hpp"
#include "dstripes/trace.hpp"

namespace dstripes {

struct NetworkInput {
    std::string name;
    const ActivationTrace* trace = nullptr;
    const PrecisionProfile* profile = nullptr; // optional
};

struct SimRequest {
    ArchConfig base;                    // kind field is ignored; engines below
    std::vector<EngineKind> engines;
};

struct NetworkResult {
    std::string name;
    std::map<EngineKind, std::vector<LayerReport>> layers;
    std::map<EngineKind, uint64_t> totals;
};

struct SimReport {
    int base_width = kMaxWidth;
    int subgroup_size = 16;
    int pallet_size = 256;
    std::vector<EngineKind> engines;
    std::vector<NetworkResult> networks;

    uint64_t total_cycles(const std::string& network, EngineKind kind) const;
    /// Speedup of `kind` relative to `baseline` for one network, or the
    /// geometric mean across all networks when `network` is empty.
    double speedup_vs(const std::string& network, EngineKind kind, EngineKind baseline) const;
};

SimReport run_simulation(const SimRequest& request, const std::vector<NetworkInput>& inputs);

std::string report_to_json(const SimReport& report);
std::string report_to_csv(const SimReport& report);

} // namespace dstripes

#endif
