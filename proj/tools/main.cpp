#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dstripes/dstripes_c.h"

namespace fs = std::filesystem;

namespace {

[[noreturn]] void die(const std::string& msg) {
    std::cerr << "dstripes: error: " << msg << "\n";
    std::exit(1);
}

void check(int rc, const std::string& context) {
    if (rc != DST_OK) die(context + ": " + dst_last_error());
}

std::string read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) die("cannot read " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Bare relative outputs land in $DSTRIPES_OUT_DIR when it is set.
std::string resolve_out(const std::string& path) {
    const char* dir = std::getenv("DSTRIPES_OUT_DIR");
    if (!dir || *dir == '\0') return path;
    fs::path p(path);
    if (p.is_absolute()) return path;
    return (fs::path(dir) / p).string();
}

void refuse_overwrite(const std::string& path, bool force) {
    if (!force && fs::exists(path))
        die("refusing to overwrite " + path + " (use --force)");
}

struct TraceHandle {
    dst_trace* p = nullptr;
    ~TraceHandle() { dst_trace_free(p); }
};

struct ProfileHandle {
    dst_profile* p = nullptr;
    ~ProfileHandle() { dst_profile_free(p); }
};

struct OwnedString {
    char* p = nullptr;
    ~OwnedString() { dst_string_free(p); }
};

const std::map<std::string, dst_engine_kind> kEngineNames = {
    {"bitparallel", DST_ENGINE_BITPARALLEL}, {"dadn", DST_ENGINE_BITPARALLEL},
    {"stripes", DST_ENGINE_STRIPES},         {"dynamic", DST_ENGINE_DYNAMIC},
    {"essential", DST_ENGINE_ESSENTIAL},
};

void write_output(const std::string& text, const std::string& out, bool force) {
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    const std::string path = resolve_out(out);
    refuse_overwrite(path, force);
    std::ofstream os(path, std::ios::trunc);
    if (!os) die("cannot write " + path);
    os << text;
}

int cmd_gen_trace(const std::string& net_path, const std::string& synth_path, uint64_t seed,
                  uint32_t batch, const std::string& out, bool force) {
    if (net_path.empty() == synth_path.empty())
        die("gen-trace needs exactly one of --net or --synthetic");
    const std::string out_path = resolve_out(out);
    refuse_overwrite(out_path, force);

    TraceHandle trace;
    if (!net_path.empty()) {
        dst_net* net = nullptr;
        check(dst_net_from_json(read_file(net_path).c_str(), &net), net_path);
        const int rc = dst_net_gen_trace(net, seed, batch, &trace.p);
        dst_net_free(net);
        check(rc, net_path);
    } else {
        check(dst_trace_gen_synthetic(read_file(synth_path).c_str(), seed, &trace.p), synth_path);
    }
    check(dst_trace_write(trace.p, out_path.c_str()), out_path);
    std::cerr << "wrote " << out_path << "\n";
    return 0;
}

int cmd_profile(const std::string& net_path, const std::string& trace_path,
                const std::string& mode, const std::string& target, uint64_t seed,
                uint32_t batch, const std::string& out, bool force) {
    const std::string out_path = resolve_out(out);
    refuse_overwrite(out_path, force);

    ProfileHandle profile;
    if (mode == "envelope") {
        if (trace_path.empty()) die("profile --mode envelope needs --trace");
        TraceHandle trace;
        check(dst_trace_read(trace_path.c_str(), &trace.p), trace_path);
        check(dst_profile_envelope(trace.p, &profile.p), trace_path);
    } else if (mode == "fixed" || mode == "msp2") {
        if (net_path.empty()) die("profile --mode " + mode + " needs --net");
        dst_net* net = nullptr;
        check(dst_net_from_json(read_file(net_path).c_str(), &net), net_path);
        double retention = 1.0;
        int exact = 0;
        if (target == "exact") {
            exact = 1;
        } else {
            try {
                retention = std::stod(target);
            } catch (const std::exception&) {
                dst_net_free(net);
                die("bad --target " + target + " (number in [0,1] or \"exact\")");
            }
        }
        const dst_profile_mode m = mode == "fixed" ? DST_PROFILE_FIXED : DST_PROFILE_MSP2;
        const int rc = dst_profile_run(net, m, seed, batch, retention, exact, &profile.p);
        dst_net_free(net);
        check(rc, net_path);
    } else {
        die("unknown profile mode " + mode + " (fixed, msp2, envelope)");
    }
    check(dst_profile_write(profile.p, out_path.c_str()), out_path);
    std::cerr << "wrote " << out_path << "\n";
    return 0;
}

int cmd_simulate(const std::vector<std::string>& trace_paths,
                 const std::vector<std::string>& engines, const std::string& profile_path,
                 int subgroup_size, int base_width, const std::string& shifter_reach,
                 const std::string& format, const std::string& out, bool force) {
    if (trace_paths.empty()) die("simulate needs at least one --trace");

    dst_arch_config cfg;
    dst_arch_config_default(&cfg);
    cfg.subgroup_size = subgroup_size;
    cfg.base_width = base_width;
    if (shifter_reach != "full") {
        cfg.shifter_full = 0;
        try {
            cfg.shifter_bits = std::stoi(shifter_reach);
        } catch (const std::exception&) {
            die("bad --shifter-reach " + shifter_reach + " (\"full\" or bit count)");
        }
    }

    ProfileHandle profile;
    if (!profile_path.empty())
        check(dst_profile_read(profile_path.c_str(), &profile.p), profile_path);

    std::vector<std::string> selected = engines;
    if (selected.empty()) {
        selected = {"bitparallel", "dynamic", "essential"};
        if (profile.p) selected.insert(selected.begin() + 1, "stripes");
    }

    dst_sim* sim = nullptr;
    check(dst_sim_new(&cfg, &sim), "simulate");
    for (const std::string& name : selected) {
        const auto it = kEngineNames.find(name);
        if (it == kEngineNames.end()) {
            dst_sim_free(sim);
            die("unknown engine " + name);
        }
        check(dst_sim_add_engine(sim, it->second), name);
    }

    std::vector<TraceHandle> traces(trace_paths.size());
    for (size_t i = 0; i < trace_paths.size(); ++i) {
        check(dst_trace_read(trace_paths[i].c_str(), &traces[i].p), trace_paths[i]);
        const std::string name = fs::path(trace_paths[i]).stem().string();
        const int rc = dst_sim_add_trace(sim, name.c_str(), traces[i].p, profile.p);
        if (rc != DST_OK) {
            dst_sim_free(sim);
            die(trace_paths[i] + ": " + dst_last_error());
        }
    }

    dst_report* report = nullptr;
    const int rc = dst_sim_run(sim, &report);
    dst_sim_free(sim);
    check(rc, "simulate");

    OwnedString text;
    if (format == "json")
        check(dst_report_to_json(report, &text.p), "simulate");
    else
        check(dst_report_to_csv(report, &text.p), "simulate");
    dst_report_free(report);

    write_output(std::string(text.p) + (format == "json" ? "\n" : ""), out, force);
    return 0;
}

// Merge previously written JSON reports and recompute summary speedups.
int cmd_report(const std::vector<std::string>& report_paths, const std::string& format,
               const std::string& out, bool force) {
    if (report_paths.empty()) die("report needs at least one input file");
    nlohmann::json merged;
    merged["networks"] = nlohmann::json::array();
    std::map<std::string, std::map<std::string, std::vector<double>>> ratios;
    for (const std::string& path : report_paths) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(path));
        } catch (const std::exception& e) {
            die(path + ": " + e.what());
        }
        if (!j.contains("networks")) die(path + ": not a dstripes report");
        for (const auto& jn : j.at("networks")) {
            merged["networks"].push_back(jn);
            if (!jn.contains("speedups")) continue;
            for (const auto& [engine, cols] : jn.at("speedups").items())
                for (const auto& [col, value] : cols.items())
                    ratios[engine][col].push_back(value.get<double>());
        }
    }
    for (const auto& [engine, cols] : ratios)
        for (const auto& [col, values] : cols) {
            double log_sum = 0.0;
            for (double v : values) log_sum += std::log(v);
            const double gm = std::exp(log_sum / static_cast<double>(values.size()));
            merged["geomean"][engine][col] = std::round(gm * 100.0) / 100.0;
        }

    if (format == "json") {
        write_output(merged.dump(2) + "\n", out, force);
    } else {
        std::ostringstream os;
        os << "row,network,engine,baseline,speedup\n";
        char buf[32];
        for (const auto& jn : merged["networks"]) {
            if (!jn.contains("speedups")) continue;
            for (const auto& [engine, cols] : jn.at("speedups").items())
                for (const auto& [col, value] : cols.items()) {
                    std::snprintf(buf, sizeof buf, "%.2f", value.get<double>());
                    os << "speedup," << jn.value("name", "") << ',' << engine << ',' << col << ','
                       << buf << "\n";
                }
        }
        if (merged.contains("geomean"))
            for (const auto& [engine, cols] : merged["geomean"].items())
                for (const auto& [col, value] : cols.items()) {
                    std::snprintf(buf, sizeof buf, "%.2f", value.get<double>());
                    os << "geomean,," << engine << ',' << col << ',' << buf << "\n";
                }
        write_output(os.str(), out, force);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dstripes: cycle-level simulator for bit-serial DNN accelerators with "
                 "runtime precision detection"};
    app.require_subcommand(1);

    // gen-trace
    std::string gt_net, gt_synth, gt_out;
    uint64_t gt_seed = 1;
    uint32_t gt_batch = 4;
    bool gt_force = false;
    auto* gen = app.add_subcommand("gen-trace", "Generate an activation trace file");
    gen->add_option("--net", gt_net, "TinyNet JSON config");
    gen->add_option("--synthetic", gt_synth, "Synthetic span-distribution JSON spec");
    gen->add_option("--seed", gt_seed, "RNG seed");
    gen->add_option("--batch", gt_batch, "Input batch size (TinyNet mode)");
    gen->add_option("--out", gt_out, "Output trace path")->required();
    gen->add_flag("--force", gt_force, "Overwrite existing output");

    // profile
    std::string pf_net, pf_trace, pf_mode = "fixed", pf_target = "1.0", pf_out;
    uint64_t pf_seed = 1;
    uint32_t pf_batch = 4;
    bool pf_force = false;
    auto* prof = app.add_subcommand("profile", "Derive a per-layer precision profile");
    prof->add_option("--net", pf_net, "TinyNet JSON config (fixed/msp2 modes)");
    prof->add_option("--trace", pf_trace, "Trace file (envelope mode)");
    prof->add_option("--mode", pf_mode, "fixed, msp2 or envelope");
    prof->add_option("--target", pf_target, "Top-1 retention in [0,1], or \"exact\"");
    prof->add_option("--seed", pf_seed, "Eval-batch RNG seed");
    prof->add_option("--batch", pf_batch, "Eval batch size");
    prof->add_option("--out", pf_out, "Output profile path")->required();
    prof->add_flag("--force", pf_force, "Overwrite existing output");

    // simulate
    std::vector<std::string> sm_traces, sm_engines;
    std::string sm_profile, sm_reach = "full", sm_format = "csv", sm_out;
    int sm_subgroup = 16, sm_width = 16;
    bool sm_force = false;
    auto* sim = app.add_subcommand("simulate", "Run the engine cycle models over traces");
    sim->add_option("--trace", sm_traces, "Trace file(s)")->required();
    sim->add_option("--engine", sm_engines, "bitparallel, stripes, dynamic, essential");
    sim->add_option("--profile", sm_profile, "Precision profile file");
    sim->add_option("--subgroup-size", sm_subgroup, "Activations per detection group");
    sim->add_option("--base-width", sm_width, "Baseline activation bit width");
    sim->add_option("--shifter-reach", sm_reach, "\"full\" or shifter bits (essential)");
    sim->add_option("--format", sm_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sim->add_option("--out", sm_out, "Output path (default stdout)");
    sim->add_flag("--force", sm_force, "Overwrite existing output");

    // report
    std::vector<std::string> rp_inputs;
    std::string rp_format = "csv", rp_out;
    bool rp_force = false;
    auto* rep = app.add_subcommand("report", "Summarize JSON reports across networks");
    rep->add_option("inputs", rp_inputs, "Report JSON files")->required();
    rep->add_option("--format", rp_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    rep->add_option("--out", rp_out, "Output path (default stdout)");
    rep->add_flag("--force", rp_force, "Overwrite existing output");

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed())
        return cmd_gen_trace(gt_net, gt_synth, gt_seed, gt_batch, gt_out, gt_force);
    if (prof->parsed())
        return cmd_profile(pf_net, pf_trace, pf_mode, pf_target, pf_seed, pf_batch, pf_out,
                           pf_force);
    if (sim->parsed())
        return cmd_simulate(sm_traces, sm_engines, sm_profile, sm_subgroup, sm_width, sm_reach,
                            sm_format, sm_out, sm_force);
    if (rep->parsed()) return cmd_report(rp_inputs, rp_format, rp_out, rp_force);
    return 1;
}
