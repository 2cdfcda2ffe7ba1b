#include "dstripes/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dstripes {

const ProfileEntry* PrecisionProfile::find(const std::string& layer) const {
    for (const ProfileEntry& e : entries)
        if (e.layer == layer) return &e;
    return nullptr;
}

namespace {

std::vector<int> top1(const std::vector<std::vector<double>>& logits) {
    std::vector<int> out;
    out.reserve(logits.size());
    for (const auto& row : logits) {
        const auto it = std::max_element(row.begin(), row.end());
        out.push_back(static_cast<int>(it - row.begin()));
    }
    return out;
}

double match_fraction(const std::vector<int>& a, const std::vector<int>& b) {
    size_t hits = 0;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] == b[i]) ++hits;
    return a.empty() ? 1.0 : static_cast<double>(hits) / static_cast<double>(a.size());
}

struct Evaluator {
    const TinyNet& net;
    const std::vector<Tensor>& inputs;
    ProfileTarget target;
    RunResult baseline;
    std::vector<int> baseline_top1;

    Evaluator(const TinyNet& n, const std::vector<Tensor>& in, const ProfileTarget& t)
        : net(n), inputs(in), target(t), baseline(run_reference(n, in)),
          baseline_top1(top1(baseline.logits)) {}

    bool accept(const std::vector<LayerConstraint>& constraints, double* achieved = nullptr) const {
        const RunResult candidate = run_reference(net, inputs, RunOptions{true, constraints});
        const double frac = match_fraction(baseline_top1, top1(candidate.logits));
        if (achieved) *achieved = frac;
        if (target.exact_activations) {
            for (size_t l = 0; l < baseline.trace.layers.size(); ++l)
                if (candidate.trace.layers[l].values != baseline.trace.layers[l].values)
                    return false;
            return candidate.logits == baseline.logits;
        }
        return frac + 1e-12 >= target.retention;
    }
};

// Observed (n_high, n_low, max popcount) per recorded layer of a trace.
struct LayerEnvelope {
    int n_high = 0;
    int n_low = 0;
    int max_pop = 0;
};

LayerEnvelope layer_envelope(const TraceLayer& layer) {
    LayerEnvelope env;
    uint32_t orbits = 0;
    for (uint16_t v : layer.values) {
        orbits |= v;
        env.max_pop = std::max(env.max_pop, std::popcount(static_cast<unsigned>(v)));
    }
    if (orbits != 0) {
        env.n_high = std::bit_width(orbits) - 1;
        env.n_low = std::countr_zero(orbits);
    }
    return env;
}

std::vector<LayerConstraint> to_constraints(const PrecisionProfile& profile) {
    std::vector<LayerConstraint> out;
    for (const ProfileEntry& e : profile.entries) {
        LayerConstraint c;
        if (profile.mode == ProfileMode::FixedPoint)
            c.window = std::make_pair(e.n_high, e.n_low);
        else
            c.msp2_budget = e.msp2_budget;
        out.push_back(c);
    }
    return out;
}

} // namespace

PrecisionProfile profile_fixedpoint(const TinyNet& net, const std::vector<Tensor>& inputs,
                                    const ProfileTarget& target) {
    Evaluator eval(net, inputs, target);
    PrecisionProfile profile;
    profile.mode = ProfileMode::FixedPoint;
    for (const TraceLayer& tl : eval.baseline.trace.layers) {
        const LayerEnvelope env = layer_envelope(tl);
        profile.entries.push_back(ProfileEntry{tl.name, env.n_high, env.n_low, 0});
    }

    // Greedy coordinate descent, first-to-last sweeps until a fixpoint.
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t l = 0; l < profile.entries.size(); ++l) {
            ProfileEntry& e = profile.entries[l];
            for (int move = 0; move < 2; ++move) {
                if (e.n_high == e.n_low) break;
                ProfileEntry trial = e;
                if (move == 0) trial.n_high--; else trial.n_low++;
                if (trial.n_high < trial.n_low) continue;
                PrecisionProfile candidate = profile;
                candidate.entries[l] = trial;
                if (eval.accept(to_constraints(candidate))) {
                    e = trial;
                    changed = true;
                }
            }
        }
    }
    eval.accept(to_constraints(profile), &profile.accuracy_achieved);
    return profile;
}

PrecisionProfile profile_msp2(const TinyNet& net, const std::vector<Tensor>& inputs,
                              const ProfileTarget& target) {
    Evaluator eval(net, inputs, target);
    PrecisionProfile profile;
    profile.mode = ProfileMode::Msp2;
    for (const TraceLayer& tl : eval.baseline.trace.layers) {
        const LayerEnvelope env = layer_envelope(tl);
        profile.entries.push_back(ProfileEntry{tl.name, env.n_high, env.n_low,
                                               std::max(env.max_pop, 1)});
    }

    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t l = 0; l < profile.entries.size(); ++l) {
            ProfileEntry& e = profile.entries[l];
            if (e.msp2_budget <= 1) continue;
            PrecisionProfile candidate = profile;
            candidate.entries[l].msp2_budget--;
            if (eval.accept(to_constraints(candidate))) {
                e.msp2_budget--;
                changed = true;
            }
        }
    }
    eval.accept(to_constraints(profile), &profile.accuracy_achieved);
    return profile;
}

PrecisionProfile envelope_profile(const ActivationTrace& trace) {
    PrecisionProfile profile;
    profile.mode = ProfileMode::FixedPoint;
    for (const TraceLayer& layer : trace.layers) {
        const LayerEnvelope env = layer_envelope(layer);
        profile.entries.push_back(ProfileEntry{layer.name, env.n_high, env.n_low, 0});
    }
    return profile;
}

void write_profile(const PrecisionProfile& profile, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open profile for writing: " + path);
    os << "dstripes-profile v1\n";
    os << "mode " << (profile.mode == ProfileMode::FixedPoint ? "fixed" : "msp2") << "\n";
    os << "accuracy " << profile.accuracy_achieved << "\n";
    os << "baseline " << profile.baseline_accuracy << "\n";
    for (const ProfileEntry& e : profile.entries) {
        if (profile.mode == ProfileMode::FixedPoint)
            os << "layer\t" << e.layer << "\tn_high\t" << e.n_high << "\tn_low\t" << e.n_low << "\n";
        else
            os << "layer\t" << e.layer << "\tbudget\t" << e.msp2_budget << "\n";
    }
    if (!os) throw std::runtime_error("profile write failed: " + path);
}

PrecisionProfile read_profile(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open profile for reading: " + path);
    std::string line;
    if (!std::getline(is, line) || line != "dstripes-profile v1")
        throw std::runtime_error("not a dstripes profile: " + path);
    PrecisionProfile profile;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "mode") {
            std::string mode;
            ss >> mode;
            if (mode == "fixed") profile.mode = ProfileMode::FixedPoint;
            else if (mode == "msp2") profile.mode = ProfileMode::Msp2;
            else throw std::runtime_error("bad profile mode: " + mode);
        } else if (key == "accuracy") {
            ss >> profile.accuracy_achieved;
        } else if (key == "baseline") {
            ss >> profile.baseline_accuracy;
        } else if (key == "layer") {
            // tab-separated: layer \t name \t field \t value [\t field \t value]
            std::vector<std::string> fields;
            std::string field;
            std::istringstream ts(line);
            while (std::getline(ts, field, '\t')) fields.push_back(field);
            if (fields.size() < 4) throw std::runtime_error("malformed profile line: " + line);
            ProfileEntry e;
            e.layer = fields[1];
            for (size_t i = 2; i + 1 < fields.size(); i += 2) {
                const int value = std::stoi(fields[i + 1]);
                if (fields[i] == "n_high") e.n_high = value;
                else if (fields[i] == "n_low") e.n_low = value;
                else if (fields[i] == "budget") e.msp2_budget = value;
                else throw std::runtime_error("unknown profile field: " + fields[i]);
            }
            profile.entries.push_back(std::move(e));
        } else {
            throw std::runtime_error("unknown profile key: " + key);
        }
    }
    return profile;
}

} // namespace dstripes
