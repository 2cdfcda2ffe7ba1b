#ifndef DSTRIPES_TINYNET_HPP
#define DSTRIPES_TINYNET_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dstripes/trace.hpp"

namespace dstripes {

struct Tensor {
    int c = 1, h = 1, w = 1;
    std::vector<double> data; // row-major (c, y, x)

    double& at(int ci, int y, int x) { return data[(static_cast<size_t>(ci) * h + y) * w + x]; }
    double at(int ci, int y, int x) const { return data[(static_cast<size_t>(ci) * h + y) * w + x]; }
    size_t size() const { return data.size(); }
};

enum class TinyLayerType { Conv2d, Relu, MaxPool, FullyConnected };

struct TinyLayer {
    TinyLayerType type = TinyLayerType::Conv2d;
    std::string name;
    int out_channels = 0; // conv
    int out_features = 0; // fc
    int kernel = 1;
    int stride = 1;
    int pad = 0;
    bool relu = false;    // fused nonlinearity on conv/fc
    bool record = false;  // emit quantized activations into the trace
    QuantSpec qspec;
    std::vector<double> weights; // conv: [oc][ic][ky][kx], fc: [of][in]
    std::vector<double> bias;
};

/// Desk-scale reference network; the stand-in workload producer.
struct TinyNet {
    std::string name = "tinynet";
    int in_c = 1, in_h = 16, in_w = 16;
    uint64_t weight_seed = 1;
    std::vector<TinyLayer> layers;
};

TinyNet parse_tinynet(const std::string& json_text);

/// Deterministic evaluation batch, uniform in [0, 1).
std::vector<Tensor> gen_inputs(const TinyNet& net, uint64_t seed, int batch);

/// Precision reduction applied to one recorded layer while re-evaluating.
struct LayerConstraint {
    std::optional<std::pair<int, int>> window; // (n_high, n_low) bit window
    std::optional<int> msp2_budget;
};

struct RunOptions {
    bool quantize = true; // disable for the real-arithmetic oracle path
    std::vector<LayerConstraint> constraints; // indexed by recorded-layer order
};

struct RunResult {
    ActivationTrace trace;
    std::vector<std::vector<double>> logits; // one vector per batch input
};

RunResult run_reference(const TinyNet& net, const std::vector<Tensor>& inputs,
                        const RunOptions& options = {});

/// Number of trace layers run_reference will record for this net.
int recorded_layer_count(const TinyNet& net);

} // namespace dstripes

#endif
