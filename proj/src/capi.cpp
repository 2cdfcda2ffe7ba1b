#include "dstripes/dstripes_c.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include <json.hpp>

#include "dstripes/profiler.hpp"
#include "dstripes/report.hpp"
#include "dstripes/tinynet.hpp"
#include "dstripes/trace.hpp"

using namespace dstripes;

struct dst_trace {
    ActivationTrace trace;
};

struct dst_net {
    TinyNet net;
};

struct dst_profile {
    PrecisionProfile profile;
};

struct dst_sim {
    SimRequest request;
    // Owned copies so caller lifetimes do not matter after add_trace.
    std::vector<ActivationTrace> traces;
    std::vector<std::unique_ptr<PrecisionProfile>> profiles;
    std::vector<std::string> names;
};

struct dst_report {
    SimReport report;
};

namespace {

thread_local std::string g_last_error;

int fail(dst_status code, const char* what) {
    g_last_error = what;
    return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return DST_OK;
    } catch (const TraceError& e) {
        const dst_status code = e.kind() == TraceErrorKind::Io ? DST_ERR_IO : DST_ERR_FORMAT;
        return fail(code, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(DST_ERR_FORMAT, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(DST_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::runtime_error& e) {
        return fail(DST_ERR_STATE, e.what());
    } catch (const std::exception& e) {
        return fail(DST_ERR_INTERNAL, e.what());
    }
}

int require(bool ok, const char* what) {
    return ok ? DST_OK : fail(DST_ERR_INVALID_ARGUMENT, what);
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::optional<EngineKind> to_kind(int kind) {
    if (kind < 0 || kind > 3) return std::nullopt;
    return static_cast<EngineKind>(kind);
}

} // namespace

extern "C" {

const char* dst_last_error(void) { return g_last_error.c_str(); }

void dst_string_free(char* s) { std::free(s); }

int dst_trace_read(const char* path, dst_trace** out) {
    if (int rc = require(path && out, "dst_trace_read: null argument")) return rc;
    return guarded([&] { *out = new dst_trace{read_trace(path)}; });
}

int dst_trace_write(const dst_trace* trace, const char* path) {
    if (int rc = require(trace && path, "dst_trace_write: null argument")) return rc;
    return guarded([&] { write_trace(trace->trace, path); });
}

int dst_trace_gen_synthetic(const char* spec_json, uint64_t seed, dst_trace** out) {
    if (int rc = require(spec_json && out, "dst_trace_gen_synthetic: null argument")) return rc;
    return guarded([&] {
        *out = new dst_trace{gen_synthetic(parse_synthetic_spec(spec_json), seed)};
    });
}

int dst_trace_layer_count(const dst_trace* trace, uint32_t* out) {
    if (int rc = require(trace && out, "dst_trace_layer_count: null argument")) return rc;
    *out = static_cast<uint32_t>(trace->trace.layers.size());
    return DST_OK;
}

int dst_trace_base_width(const dst_trace* trace, int* out) {
    if (int rc = require(trace && out, "dst_trace_base_width: null argument")) return rc;
    *out = trace->trace.base_width;
    return DST_OK;
}

void dst_trace_free(dst_trace* trace) { delete trace; }

int dst_net_from_json(const char* json_text, dst_net** out) {
    if (int rc = require(json_text && out, "dst_net_from_json: null argument")) return rc;
    return guarded([&] { *out = new dst_net{parse_tinynet(json_text)}; });
}

int dst_net_gen_trace(const dst_net* net, uint64_t input_seed, uint32_t batch, dst_trace** out) {
    if (int rc = require(net && out && batch > 0, "dst_net_gen_trace: bad argument")) return rc;
    return guarded([&] {
        const auto inputs = gen_inputs(net->net, input_seed, static_cast<int>(batch));
        *out = new dst_trace{run_reference(net->net, inputs).trace};
    });
}

void dst_net_free(dst_net* net) { delete net; }

int dst_profile_run(const dst_net* net, dst_profile_mode mode, uint64_t input_seed,
                    uint32_t batch, double target_retention, int exact_activations,
                    dst_profile** out) {
    if (int rc = require(net && out && batch > 0, "dst_profile_run: bad argument")) return rc;
    if (int rc = require(target_retention >= 0.0 && target_retention <= 1.0,
                         "dst_profile_run: target_retention must be in [0,1]"))
        return rc;
    return guarded([&] {
        const auto inputs = gen_inputs(net->net, input_seed, static_cast<int>(batch));
        const ProfileTarget target{target_retention, exact_activations != 0};
        PrecisionProfile p = mode == DST_PROFILE_FIXED
                                 ? profile_fixedpoint(net->net, inputs, target)
                                 : profile_msp2(net->net, inputs, target);
        *out = new dst_profile{std::move(p)};
    });
}

int dst_profile_envelope(const dst_trace* trace, dst_profile** out) {
    if (int rc = require(trace && out, "dst_profile_envelope: null argument")) return rc;
    return guarded([&] { *out = new dst_profile{envelope_profile(trace->trace)}; });
}

int dst_profile_read(const char* path, dst_profile** out) {
    if (int rc = require(path && out, "dst_profile_read: null argument")) return rc;
    return guarded([&] { *out = new dst_profile{read_profile(path)}; });
}

int dst_profile_write(const dst_profile* profile, const char* path) {
    if (int rc = require(profile && path, "dst_profile_write: null argument")) return rc;
    return guarded([&] { write_profile(profile->profile, path); });
}

void dst_profile_free(dst_profile* profile) { delete profile; }

void dst_arch_config_default(dst_arch_config* cfg) {
    if (!cfg) return;
    cfg->pallet_size = 256;
    cfg->subgroup_size = 16;
    cfg->base_width = 16;
    cfg->shifter_full = 1;
    cfg->shifter_bits = 0;
}

int dst_sim_new(const dst_arch_config* cfg, dst_sim** out) {
    if (int rc = require(cfg && out, "dst_sim_new: null argument")) return rc;
    return guarded([&] {
        auto sim = std::make_unique<dst_sim>();
        sim->request.base.pallet_size = cfg->pallet_size;
        sim->request.base.subgroup_size = cfg->subgroup_size;
        sim->request.base.base_width = cfg->base_width;
        sim->request.base.shifter_reach.full = cfg->shifter_full != 0;
        sim->request.base.shifter_reach.bits = cfg->shifter_bits;
        sim->request.base.validate();
        *out = sim.release();
    });
}

int dst_sim_add_engine(dst_sim* sim, dst_engine_kind kind) {
    if (int rc = require(sim != nullptr, "dst_sim_add_engine: null sim")) return rc;
    const auto k = to_kind(kind);
    if (int rc = require(k.has_value(), "dst_sim_add_engine: unknown engine kind")) return rc;
    sim->request.engines.push_back(*k);
    return DST_OK;
}

int dst_sim_add_trace(dst_sim* sim, const char* name, const dst_trace* trace,
                      const dst_profile* profile) {
    if (int rc = require(sim && name && trace, "dst_sim_add_trace: null argument")) return rc;
    return guarded([&] {
        sim->traces.push_back(trace->trace);
        sim->profiles.push_back(profile ? std::make_unique<PrecisionProfile>(profile->profile)
                                        : nullptr);
        sim->names.emplace_back(name);
    });
}

int dst_sim_run(dst_sim* sim, dst_report** out) {
    if (int rc = require(sim && out, "dst_sim_run: null argument")) return rc;
    return guarded([&] {
        std::vector<NetworkInput> inputs;
        for (size_t i = 0; i < sim->traces.size(); ++i)
            inputs.push_back(NetworkInput{sim->names[i], &sim->traces[i],
                                          sim->profiles[i] ? sim->profiles[i].get() : nullptr});
        *out = new dst_report{run_simulation(sim->request, inputs)};
    });
}

void dst_sim_free(dst_sim* sim) { delete sim; }

int dst_report_cycles(const dst_report* report, const char* network, dst_engine_kind kind,
                      uint64_t* out) {
    if (int rc = require(report && network && out, "dst_report_cycles: null argument")) return rc;
    const auto k = to_kind(kind);
    if (int rc = require(k.has_value(), "dst_report_cycles: unknown engine kind")) return rc;
    return guarded([&] { *out = report->report.total_cycles(network, *k); });
}

int dst_report_speedup(const dst_report* report, const char* network, dst_engine_kind kind,
                       dst_engine_kind baseline, double* out) {
    if (int rc = require(report && out, "dst_report_speedup: null argument")) return rc;
    const auto k = to_kind(kind);
    const auto b = to_kind(baseline);
    if (int rc = require(k && b, "dst_report_speedup: unknown engine kind")) return rc;
    return guarded([&] {
        *out = report->report.speedup_vs(network ? network : "", *k, *b);
    });
}

int dst_report_to_json(const dst_report* report, char** out) {
    if (int rc = require(report && out, "dst_report_to_json: null argument")) return rc;
    return guarded([&] { *out = dup_string(report_to_json(report->report)); });
}

int dst_report_to_csv(const dst_report* report, char** out) {
    if (int rc = require(report && out, "dst_report_to_csv: null argument")) return rc;
    return guarded([&] { *out = dup_string(report_to_csv(report->report)); });
}

void dst_report_free(dst_report* report) { delete report; }

int dst_msp2_truncate(uint32_t raw, int width, int budget, uint32_t* out) {
    if (int rc = require(out != nullptr, "dst_msp2_truncate: null out")) return rc;
    return guarded([&] {
        const FixedValue v = make_fixed(raw, width);
        *out = msp2_truncate(v, budget).raw;
    });
}

int dst_detect_precision(const uint16_t* values, size_t count, int width, int* n_high,
                         int* n_low, int* is_zero) {
    if (int rc = require(values && n_high && n_low && is_zero && count > 0,
                         "dst_detect_precision: bad argument"))
        return rc;
    return guarded([&] {
        const GroupPrecision p = detect_precision_raw({values, count}, width);
        *n_high = p.n_high;
        *n_low = p.n_low;
        *is_zero = p.is_zero_group ? 1 : 0;
    });
}

} // extern "C"
