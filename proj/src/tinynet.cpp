#include "dstripes/tinynet.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

namespace dstripes {

namespace {

QuantSpec parse_qspec(const nlohmann::json& j, const QuantSpec& fallback) {
    QuantSpec q = fallback;
    if (j.contains("quant")) {
        const auto& jq = j.at("quant");
        q.width = jq.value("width", fallback.width);
        q.frac_bits = jq.value("frac_bits", fallback.frac_bits);
        const std::string r = jq.value("rounding", std::string());
        if (r == "truncate") q.rounding = Rounding::Truncate;
        else if (r == "nearest-even") q.rounding = Rounding::NearestEven;
        else if (!r.empty()) throw std::invalid_argument("tinynet: unknown rounding \"" + r + "\"");
    }
    q.validate();
    return q;
}

size_t conv_weight_count(const TinyLayer& l, int in_c) {
    return static_cast<size_t>(l.out_channels) * in_c * l.kernel * l.kernel;
}

void materialize_weights(TinyNet& net) {
    int c = net.in_c, h = net.in_h, w = net.in_w;
    for (size_t i = 0; i < net.layers.size(); ++i) {
        TinyLayer& l = net.layers[i];
        std::mt19937_64 rng(net.weight_seed * 0x9E3779B97F4A7C15ull + i);
        switch (l.type) {
            case TinyLayerType::Conv2d: {
                const size_t n = conv_weight_count(l, c);
                const double sigma = 1.0 / std::sqrt(static_cast<double>(c * l.kernel * l.kernel));
                std::normal_distribution<double> dist(0.0, sigma);
                if (l.weights.empty()) {
                    l.weights.resize(n);
                    for (double& wt : l.weights) wt = dist(rng);
                } else if (l.weights.size() != n) {
                    throw std::invalid_argument("tinynet: inline conv weights have wrong count in " + l.name);
                }
                if (l.bias.empty()) l.bias.assign(static_cast<size_t>(l.out_channels), 0.0);
                if (l.bias.size() != static_cast<size_t>(l.out_channels))
                    throw std::invalid_argument("tinynet: bias count mismatch in " + l.name);
                c = l.out_channels;
                h = (h + 2 * l.pad - l.kernel) / l.stride + 1;
                w = (w + 2 * l.pad - l.kernel) / l.stride + 1;
                if (h < 1 || w < 1) throw std::invalid_argument("tinynet: conv collapses spatial dims in " + l.name);
                break;
            }
            case TinyLayerType::MaxPool:
                h = (h - l.kernel) / l.stride + 1;
                w = (w - l.kernel) / l.stride + 1;
                if (h < 1 || w < 1) throw std::invalid_argument("tinynet: pool collapses spatial dims in " + l.name);
                break;
            case TinyLayerType::Relu:
                break;
            case TinyLayerType::FullyConnected: {
                const size_t in_features = static_cast<size_t>(c) * h * w;
                const size_t n = static_cast<size_t>(l.out_features) * in_features;
                const double sigma = 1.0 / std::sqrt(static_cast<double>(in_features));
                std::normal_distribution<double> dist(0.0, sigma);
                if (l.weights.empty()) {
                    l.weights.resize(n);
                    for (double& wt : l.weights) wt = dist(rng);
                } else if (l.weights.size() != n) {
                    throw std::invalid_argument("tinynet: inline fc weights have wrong count in " + l.name);
                }
                if (l.bias.empty()) l.bias.assign(static_cast<size_t>(l.out_features), 0.0);
                if (l.bias.size() != static_cast<size_t>(l.out_features))
                    throw std::invalid_argument("tinynet: bias count mismatch in " + l.name);
                c = l.out_features;
                h = 1;
                w = 1;
                break;
            }
        }
    }
}

} // namespace

TinyNet parse_tinynet(const std::string& json_text) {
    const nlohmann::json j = nlohmann::json::parse(json_text);
    TinyNet net;
    net.name = j.value("name", "tinynet");
    if (j.contains("input")) {
        net.in_c = j.at("input").value("c", 1);
        net.in_h = j.at("input").value("h", 16);
        net.in_w = j.at("input").value("w", 16);
    }
    net.weight_seed = j.value("weight_seed", 1ull);
    QuantSpec default_q{12, 8, Rounding::Truncate};
    default_q = parse_qspec(j, default_q);

    if (!j.contains("layers") || !j.at("layers").is_array())
        throw std::invalid_argument("tinynet: missing \"layers\" array");
    for (const auto& jl : j.at("layers")) {
        TinyLayer l;
        const std::string type = jl.value("type", "");
        if (type == "conv2d") l.type = TinyLayerType::Conv2d;
        else if (type == "relu") l.type = TinyLayerType::Relu;
        else if (type == "maxpool") l.type = TinyLayerType::MaxPool;
        else if (type == "fc" || type == "fully-connected") l.type = TinyLayerType::FullyConnected;
        else throw std::invalid_argument("tinynet: unknown layer type \"" + type + "\"");
        l.name = jl.value("name", type + std::to_string(net.layers.size()));
        l.out_channels = jl.value("out_channels", 0);
        l.out_features = jl.value("out_features", 0);
        l.kernel = jl.value("kernel", l.type == TinyLayerType::MaxPool ? 2 : 1);
        l.stride = jl.value("stride", l.type == TinyLayerType::MaxPool ? l.kernel : 1);
        l.pad = jl.value("pad", 0);
        l.relu = jl.value("relu", l.type == TinyLayerType::Conv2d);
        l.qspec = parse_qspec(jl, default_q);
        // Record wherever the output is non-negative by construction.
        const bool nonneg = l.relu || l.type == TinyLayerType::Relu || l.type == TinyLayerType::MaxPool;
        l.record = jl.value("record", nonneg);
        if (l.record && !nonneg)
            throw std::invalid_argument("tinynet: cannot record possibly-negative layer " + l.name);
        if (l.type == TinyLayerType::Conv2d && l.out_channels < 1)
            throw std::invalid_argument("tinynet: conv layer needs out_channels: " + l.name);
        if (l.type == TinyLayerType::FullyConnected && l.out_features < 1)
            throw std::invalid_argument("tinynet: fc layer needs out_features: " + l.name);
        if (jl.contains("weights")) l.weights = jl.at("weights").get<std::vector<double>>();
        if (jl.contains("bias")) l.bias = jl.at("bias").get<std::vector<double>>();
        net.layers.push_back(std::move(l));
    }
    materialize_weights(net);
    return net;
}

std::vector<Tensor> gen_inputs(const TinyNet& net, uint64_t seed, int batch) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<Tensor> out(static_cast<size_t>(batch));
    for (Tensor& t : out) {
        t.c = net.in_c;
        t.h = net.in_h;
        t.w = net.in_w;
        t.data.resize(static_cast<size_t>(t.c) * t.h * t.w);
        for (double& v : t.data) v = dist(rng);
    }
    return out;
}

int recorded_layer_count(const TinyNet& net) {
    int n = 0;
    for (const TinyLayer& l : net.layers)
        if (l.record) ++n;
    return n;
}

namespace {

Tensor conv2d_forward(const Tensor& in, const TinyLayer& l) {
    Tensor out;
    out.c = l.out_channels;
    out.h = (in.h + 2 * l.pad - l.kernel) / l.stride + 1;
    out.w = (in.w + 2 * l.pad - l.kernel) / l.stride + 1;
    out.data.assign(static_cast<size_t>(out.c) * out.h * out.w, 0.0);
    for (int oc = 0; oc < out.c; ++oc) {
        for (int oy = 0; oy < out.h; ++oy) {
            for (int ox = 0; ox < out.w; ++ox) {
                double acc = l.bias[static_cast<size_t>(oc)];
                for (int ic = 0; ic < in.c; ++ic) {
                    for (int ky = 0; ky < l.kernel; ++ky) {
                        for (int kx = 0; kx < l.kernel; ++kx) {
                            const int iy = oy * l.stride + ky - l.pad;
                            const int ix = ox * l.stride + kx - l.pad;
                            if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
                            const size_t wi =
                                ((static_cast<size_t>(oc) * in.c + ic) * l.kernel + ky) * l.kernel + kx;
                            acc += l.weights[wi] * in.at(ic, iy, ix);
                        }
                    }
                }
                out.at(oc, oy, ox) = acc;
            }
        }
    }
    return out;
}

Tensor maxpool_forward(const Tensor& in, const TinyLayer& l) {
    Tensor out;
    out.c = in.c;
    out.h = (in.h - l.kernel) / l.stride + 1;
    out.w = (in.w - l.kernel) / l.stride + 1;
    out.data.assign(static_cast<size_t>(out.c) * out.h * out.w, 0.0);
    for (int ci = 0; ci < out.c; ++ci)
        for (int oy = 0; oy < out.h; ++oy)
            for (int ox = 0; ox < out.w; ++ox) {
                double best = -std::numeric_limits<double>::infinity();
                for (int ky = 0; ky < l.kernel; ++ky)
                    for (int kx = 0; kx < l.kernel; ++kx)
                        best = std::max(best, in.at(ci, oy * l.stride + ky, ox * l.stride + kx));
                out.at(ci, oy, ox) = best;
            }
    return out;
}

Tensor fc_forward(const Tensor& in, const TinyLayer& l) {
    Tensor out;
    out.c = l.out_features;
    out.h = 1;
    out.w = 1;
    out.data.assign(static_cast<size_t>(l.out_features), 0.0);
    const size_t in_features = in.size();
    for (int of = 0; of < l.out_features; ++of) {
        double acc = l.bias[static_cast<size_t>(of)];
        const size_t base = static_cast<size_t>(of) * in_features;
        for (size_t i = 0; i < in_features; ++i) acc += l.weights[base + i] * in.data[i];
        out.data[static_cast<size_t>(of)] = acc;
    }
    return out;
}

} // namespace

RunResult run_reference(const TinyNet& net, const std::vector<Tensor>& inputs,
                        const RunOptions& options) {
    const int recorded = recorded_layer_count(net);
    if (!options.constraints.empty() &&
        static_cast<int>(options.constraints.size()) != recorded)
        throw std::invalid_argument("run_reference: constraint count does not match recorded layers");

    RunResult result;
    uint8_t base_width = 1;
    for (const TinyLayer& l : net.layers)
        if (l.record) base_width = std::max(base_width, static_cast<uint8_t>(l.qspec.width));
    result.trace.base_width = base_width;

    // One trace layer per recorded net layer; batch entries concatenate along N.
    std::vector<TraceLayer*> recorded_layers;
    uint32_t layer_id = 0;
    for (const TinyLayer& l : net.layers) {
        if (!l.record) { ++layer_id; continue; }
        TraceLayer tl;
        tl.layer_id = layer_id++;
        tl.name = l.name;
        tl.qspec = l.qspec;
        result.trace.layers.push_back(std::move(tl));
    }

    bool first_input = true;
    for (const Tensor& input : inputs) {
        if (input.c != net.in_c || input.h != net.in_h || input.w != net.in_w)
            throw std::invalid_argument("run_reference: input shape mismatch");
        Tensor cur = input;
        size_t rec_idx = 0;
        for (const TinyLayer& l : net.layers) {
            switch (l.type) {
                case TinyLayerType::Conv2d: cur = conv2d_forward(cur, l); break;
                case TinyLayerType::MaxPool: cur = maxpool_forward(cur, l); break;
                case TinyLayerType::FullyConnected: cur = fc_forward(cur, l); break;
                case TinyLayerType::Relu: break;
            }
            if (l.relu || l.type == TinyLayerType::Relu)
                for (double& v : cur.data) v = std::max(v, 0.0);
            if (l.record) {
                TraceLayer& tl = result.trace.layers[rec_idx];
                const LayerConstraint* constraint =
                    options.constraints.empty() ? nullptr : &options.constraints[rec_idx];
                if (options.quantize) {
                    const double scale = std::ldexp(1.0, -l.qspec.frac_bits);
                    for (double& v : cur.data) {
                        uint16_t raw = quantize(v, l.qspec).raw;
                        if (constraint) {
                            if (constraint->window) {
                                const auto [nh, nl] = *constraint->window;
                                raw &= static_cast<uint16_t>(((1u << (nh + 1)) - 1u) &
                                                             ~((1u << nl) - 1u));
                            }
                            if (constraint->msp2_budget)
                                raw = msp2_truncate_raw(raw, *constraint->msp2_budget);
                        }
                        tl.values.push_back(raw);
                        v = raw * scale; // downstream layers see the reduced value
                    }
                } else {
                    for (double v : cur.data)
                        tl.values.push_back(quantize(std::max(v, 0.0), l.qspec).raw);
                }
                if (first_input)
                    tl.dims = {static_cast<uint32_t>(inputs.size()), static_cast<uint32_t>(cur.c),
                               static_cast<uint32_t>(cur.h), static_cast<uint32_t>(cur.w)};
                ++rec_idx;
            }
        }
        result.logits.push_back(cur.data);
        first_input = false;
    }
    return result;
}

} // namespace dstripes
