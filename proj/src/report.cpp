#include "dstripes/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace dstripes {

namespace {

LayerProfileInput profile_input_for(const PrecisionProfile* profile, const std::string& layer,
                                    EngineKind kind) {
    LayerProfileInput in;
    if (!profile) {
        if (kind == EngineKind::StripesPerLayer)
            throw std::runtime_error("missing profile: stripes engine needs a per-layer profile");
        return in;
    }
    const ProfileEntry* e = profile->find(layer);
    if (!e) {
        if (kind == EngineKind::StripesPerLayer)
            throw std::runtime_error("missing profile entry for layer " + layer);
        return in;
    }
    if (profile->mode == ProfileMode::FixedPoint) {
        in.window = std::make_pair(e->n_high, e->n_low);
    } else {
        if (kind == EngineKind::StripesPerLayer)
            throw std::runtime_error("stripes engine needs a fixed-point profile, got msp2");
        if (kind == EngineKind::EssentialBits) in.msp2_budget = e->msp2_budget;
    }
    return in;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

} // namespace

uint64_t SimReport::total_cycles(const std::string& network, EngineKind kind) const {
    for (const NetworkResult& nr : networks) {
        if (nr.name != network) continue;
        const auto it = nr.totals.find(kind);
        if (it == nr.totals.end())
            throw std::invalid_argument("report: engine not simulated: " +
                                        std::string(engine_name(kind)));
        return it->second;
    }
    throw std::invalid_argument("report: unknown network " + network);
}

double SimReport::speedup_vs(const std::string& network, EngineKind kind,
                             EngineKind baseline) const {
    if (!network.empty())
        return speedup(total_cycles(network, kind), total_cycles(network, baseline));
    std::vector<double> ratios;
    for (const NetworkResult& nr : networks)
        ratios.push_back(speedup(total_cycles(nr.name, kind), total_cycles(nr.name, baseline)));
    return geomean(ratios);
}

SimReport run_simulation(const SimRequest& request, const std::vector<NetworkInput>& inputs) {
    if (request.engines.empty())
        throw std::invalid_argument("run_simulation: no engines selected");
    if (inputs.empty())
        throw std::invalid_argument("run_simulation: no traces given");
    SimReport report;
    report.base_width = request.base.base_width;
    report.subgroup_size = request.base.subgroup_size;
    report.pallet_size = request.base.pallet_size;
    report.engines = request.engines;

    for (const NetworkInput& input : inputs) {
        if (!input.trace) throw std::invalid_argument("run_simulation: null trace");
        NetworkResult nr;
        nr.name = input.name;
        for (EngineKind kind : request.engines) {
            ArchConfig cfg = request.base;
            cfg.kind = kind;
            cfg.validate();
            uint64_t total = 0;
            std::vector<LayerReport> reports;
            for (const TraceLayer& layer : input.trace->layers) {
                const LayerProfileInput pin = profile_input_for(input.profile, layer.name, kind);
                LayerReport lr = simulate_layer(layer.values, layer.layer_id, layer.name, cfg, pin);
                total += lr.total_cycles;
                reports.push_back(std::move(lr));
            }
            nr.totals[kind] = total;
            nr.layers[kind] = std::move(reports);
        }
        report.networks.push_back(std::move(nr));
    }
    return report;
}

namespace {

bool has_engine(const SimReport& r, EngineKind k) {
    for (EngineKind e : r.engines)
        if (e == k) return true;
    return false;
}

// Speedup columns for every non-baseline engine that was simulated.
std::vector<std::pair<EngineKind, EngineKind>> speedup_pairs(const SimReport& r) {
    std::vector<std::pair<EngineKind, EngineKind>> pairs;
    for (EngineKind k : r.engines) {
        if (k != EngineKind::BitParallel && has_engine(r, EngineKind::BitParallel))
            pairs.emplace_back(k, EngineKind::BitParallel);
        if (k != EngineKind::StripesPerLayer && k != EngineKind::BitParallel &&
            has_engine(r, EngineKind::StripesPerLayer))
            pairs.emplace_back(k, EngineKind::StripesPerLayer);
    }
    return pairs;
}

std::string column_name(EngineKind baseline) {
    return baseline == EngineKind::BitParallel ? "vs_dadn" : "vs_str";
}

} // namespace

std::string report_to_json(const SimReport& report) {
    nlohmann::json j;
    j["base_width"] = report.base_width;
    j["subgroup_size"] = report.subgroup_size;
    j["pallet_size"] = report.pallet_size;
    j["networks"] = nlohmann::json::array();
    const auto pairs = speedup_pairs(report);
    for (const NetworkResult& nr : report.networks) {
        nlohmann::json jn;
        jn["name"] = nr.name;
        jn["layers"] = nlohmann::json::array();
        for (EngineKind kind : report.engines) {
            for (const LayerReport& lr : nr.layers.at(kind)) {
                nlohmann::json jl;
                jl["layer"] = lr.name;
                jl["engine"] = engine_name(kind);
                jl["cycles"] = lr.total_cycles;
                jl["pallets"] = lr.pallet_count;
                jl["activations"] = lr.activation_count;
                jl["span_histogram"] = lr.span_histogram;
                jn["layers"].push_back(std::move(jl));
            }
            jn["totals"][engine_name(kind)] = nr.totals.at(kind);
        }
        for (const auto& [kind, baseline] : pairs)
            jn["speedups"][engine_name(kind)][column_name(baseline)] =
                round2(report.speedup_vs(nr.name, kind, baseline));
        j["networks"].push_back(std::move(jn));
    }
    for (const auto& [kind, baseline] : pairs)
        j["geomean"][engine_name(kind)][column_name(baseline)] =
            round2(report.speedup_vs("", kind, baseline));
    return j.dump(2);
}

std::string report_to_csv(const SimReport& report) {
    std::ostringstream os;
    os << "row,network,layer,engine,baseline,cycles,pallets,activations,speedup\n";
    const auto pairs = speedup_pairs(report);
    char buf[32];
    for (const NetworkResult& nr : report.networks) {
        for (EngineKind kind : report.engines) {
            for (const LayerReport& lr : nr.layers.at(kind))
                os << "layer," << nr.name << ',' << lr.name << ',' << engine_name(kind) << ",,"
                   << lr.total_cycles << ',' << lr.pallet_count << ',' << lr.activation_count
                   << ",\n";
            os << "total," << nr.name << ",," << engine_name(kind) << ",,"
               << nr.totals.at(kind) << ",,,\n";
        }
        for (const auto& [kind, baseline] : pairs) {
            std::snprintf(buf, sizeof buf, "%.2f",
                          round2(report.speedup_vs(nr.name, kind, baseline)));
            os << "speedup," << nr.name << ",," << engine_name(kind) << ','
               << engine_name(baseline) << ",,,," << buf << "\n";
        }
    }
    for (const auto& [kind, baseline] : pairs) {
        std::snprintf(buf, sizeof buf, "%.2f", round2(report.speedup_vs("", kind, baseline)));
        os << "geomean,,," << engine_name(kind) << ',' << engine_name(baseline) << ",,,," << buf
           << "\n";
    }
    return os.str();
}

} // namespace dstripes
