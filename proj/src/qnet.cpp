#include "rram/qnet.hpp"

#include "rram/error.hpp"
#include "rram/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rram::qnet {

namespace {

std::string layer_name(std::size_t index) { return "layer " + std::to_string(index); }

}  // namespace

std::string_view to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::conv1d: return "conv1d";
        case LayerKind::linear: return "linear";
    }
    return "?";
}

LayerKind parse_layer_kind(std::string_view name) {
    if (name == "conv2d") return LayerKind::conv2d;
    if (name == "conv1d") return LayerKind::conv1d;
    if (name == "linear") return LayerKind::linear;
    throw ParseError("unknown layer kind '" + std::string(name) + "'");
}

int conv_output_extent(int extent, int kernel, int stride, int pad, int dilation) {
    if (stride < 1 || dilation < 1 || kernel < 1 || pad < 0 || extent < 1)
        throw InvalidArgument("conv window parameters out of range");
    const int span = extent + 2 * pad - dilation * (kernel - 1) - 1;
    if (span < 0)
        throw InvalidArgument("kernel (extent " + std::to_string(dilation * (kernel - 1) + 1) +
                              ") does not fit padded input of extent " +
                              std::to_string(extent + 2 * pad));
    return span / stride + 1;
}

LayerSpec LayerSpec::conv2d(int in_channels, int kernels, int kernel_h, int kernel_w, int stride,
                            int padding, int dilation) {
    LayerSpec s;
    s.kind = LayerKind::conv2d;
    s.in_channels = in_channels;
    s.out_kernels = kernels;
    s.kernel_h = kernel_h;
    s.kernel_w = kernel_w;
    s.stride = stride;
    s.padding = padding;
    s.dilation = dilation;
    return s;
}

LayerSpec LayerSpec::conv1d(int in_channels, int kernels, int kernel_h, int stride, int padding,
                            int dilation) {
    LayerSpec s = conv2d(in_channels, kernels, kernel_h, 1, stride, padding, dilation);
    s.kind = LayerKind::conv1d;
    return s;
}

LayerSpec LayerSpec::linear(int in_features, int out_features) {
    LayerSpec s;
    s.kind = LayerKind::linear;
    s.in_features = in_features;
    s.out_features = out_features;
    s.in_x = 1;
    s.in_y = 1;
    return s;
}

int LayerSpec::out_x() const {
    if (!is_conv()) return 1;
    return conv_output_extent(in_x, kernel_h, stride, pad_x(), dilation);
}

int LayerSpec::out_y() const {
    if (!is_conv()) return 1;
    return conv_output_extent(in_y, kernel_w, stride, pad_y(), dilation);
}

FeatureShape LayerSpec::input_shape() const {
    if (!is_conv()) return {in_features, 1, 1};
    return {in_channels, in_x, in_y};
}

FeatureShape LayerSpec::output_shape() const {
    if (!is_conv()) return {out_features, 1, 1};
    return {out_kernels, out_x(), out_y()};
}

std::vector<std::size_t> LayerSpec::weight_shape() const {
    if (!is_conv())
        return {static_cast<std::size_t>(out_features), static_cast<std::size_t>(in_features)};
    return {static_cast<std::size_t>(out_kernels), static_cast<std::size_t>(in_channels),
            static_cast<std::size_t>(kernel_h), static_cast<std::size_t>(kernel_w)};
}

std::size_t LayerSpec::weight_count() const {
    std::size_t n = 1;
    for (auto d : weight_shape()) n *= d;
    return n;
}

void LayerSpec::validate() const {
    if (is_conv()) {
        if (in_channels < 1) throw InvalidArgument("in_channels must be >= 1");
        if (out_kernels < 1) throw InvalidArgument("out_kernels (K) must be >= 1");
        if (kernel_h < 1 || kernel_w < 1) throw InvalidArgument("kernel extents must be >= 1");
        if (stride < 1) throw InvalidArgument("stride must be >= 1");
        if (dilation < 1) throw InvalidArgument("dilation must be >= 1");
        if (padding < 0) throw InvalidArgument("padding must be >= 0");
        if (kind == LayerKind::conv1d && kernel_w != 1)
            throw InvalidArgument("conv1d requires kernel_w == 1");
    } else {
        if (in_features < 1 || out_features < 1)
            throw InvalidArgument("linear features must be >= 1");
    }
}

std::vector<double> WeightTensor::dequantize() const {
    std::vector<double> out(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) out[i] = value(i);
    return out;
}

std::int32_t WeightTensor::max_abs_code() const noexcept {
    std::int32_t m = 0;
    for (auto c : codes) m = std::max(m, c < 0 ? -c : c);
    return m;
}

bool is_supported_bit_width(int bits) noexcept { return bits == 4 || bits == 6 || bits == 8; }

void WeightTensor::validate() const {
    if (!is_supported_bit_width(bit_width))
        throw ValidationError("bit_width must be 4, 6 or 8 (got " + std::to_string(bit_width) + ")");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ValidationError("scale must be positive");
    std::size_t expected = 1;
    for (auto d : shape) expected *= d;
    if (shape.empty() || expected != codes.size())
        throw ValidationError("codes length " + std::to_string(codes.size()) +
                              " does not match shape");
    const auto limit = code_limit();
    for (std::size_t i = 0; i < codes.size(); ++i) {
        if (codes[i] > limit || codes[i] < -limit)
            throw ValidationError("code " + std::to_string(codes[i]) + " at index " +
                                  std::to_string(i) + " exceeds +/-" + std::to_string(limit));
    }
}

WeightTensor quantize_weights(std::span<const double> values, int bit_width,
                              std::vector<std::size_t> shape) {
    if (!is_supported_bit_width(bit_width))
        throw InvalidArgument("bit_width must be 4, 6 or 8");
    if (values.empty()) throw InvalidArgument("cannot quantize an empty tensor");
    double max_abs = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) throw InvalidArgument("cannot quantize non-finite value");
        max_abs = std::max(max_abs, std::abs(v));
    }
    WeightTensor t;
    t.bit_width = bit_width;
    t.shape = shape.empty() ? std::vector<std::size_t>{values.size()} : std::move(shape);
    const auto limit = t.code_limit();
    t.scale = max_abs > 0.0 ? max_abs / limit : 1.0;
    t.codes.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double q = std::round(values[i] / t.scale);
        t.codes[i] = static_cast<std::int32_t>(std::clamp(q, -double(limit), double(limit)));
    }
    return t;
}

FeatureShape QuantizedNetwork::output_shape() const {
    return layers.empty() ? input : layers.back().spec.output_shape();
}

std::size_t QuantizedNetwork::weight_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size();
    return n;
}

void QuantizedNetwork::validate() const {
    if (!is_supported_bit_width(bit_width))
        throw ValidationError("bit_width must be 4, 6 or 8");
    if (layers.empty()) throw ValidationError("network has no layers");
    std::vector<LayerSpec> specs;
    for (const auto& l : layers) specs.push_back(l.spec);
    std::vector<LayerSpec> propagated;
    try {
        propagated = propagate_shapes(input, specs);
    } catch (const InvalidArgument& e) {
        throw ValidationError(e.what());
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (!(propagated[i] == l.spec))
            throw ValidationError(layer_name(i) + ": recorded input extent disagrees with shape "
                                                  "propagation");
        if (l.weights.bit_width != bit_width)
            throw ValidationError(layer_name(i) + ": bit_width differs from network bit_width");
        if (l.weights.shape != l.spec.weight_shape())
            throw ValidationError(layer_name(i) + ": weight shape does not match layer spec");
        try {
            l.weights.validate();
        } catch (const ValidationError& e) {
            throw ValidationError(layer_name(i) + ": " + e.what());
        }
    }
}

std::vector<LayerSpec> propagate_shapes(FeatureShape input, std::vector<LayerSpec> arch) {
    FeatureShape cur = input;
    if (cur.channels < 1 || cur.x < 1 || cur.y < 1)
        throw InvalidArgument("input shape extents must be >= 1");
    for (std::size_t i = 0; i < arch.size(); ++i) {
        auto& s = arch[i];
        try {
            s.validate();
            if (s.is_conv()) {
                if (s.in_channels != cur.channels)
                    throw InvalidArgument("expects " + std::to_string(s.in_channels) +
                                          " input channels, previous layer provides " +
                                          std::to_string(cur.channels));
                if (s.kind == LayerKind::conv1d && cur.y != 1)
                    throw InvalidArgument("conv1d needs an input Y extent of 1");
                s.in_x = cur.x;
                s.in_y = cur.y;
            } else {
                if (static_cast<std::size_t>(s.in_features) != cur.size())
                    throw InvalidArgument("expects " + std::to_string(s.in_features) +
                                          " input features, previous layer provides " +
                                          std::to_string(cur.size()));
                s.in_x = 1;
                s.in_y = 1;
            }
            cur = s.output_shape();
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(layer_name(i) + ": " + e.what());
        }
    }
    return arch;
}

Sparsity sparsity(const QuantizedNetwork& net) {
    Sparsity s;
    for (const auto& l : net.layers) {
        s.total += l.weights.codes.size();
        s.zero_count += static_cast<std::size_t>(
            std::count(l.weights.codes.begin(), l.weights.codes.end(), 0));
    }
    s.fraction = s.total ? double(s.zero_count) / double(s.total) : 0.0;
    return s;
}

std::vector<double> layer_forward(const LayerSpec& spec, std::span<const double> weights,
                                  std::span<const double> input) {
    const auto in_shape = spec.input_shape();
    if (input.size() != in_shape.size())
        throw InvalidArgument("input has " + std::to_string(input.size()) +
                              " features, layer expects " + std::to_string(in_shape.size()));
    if (weights.size() != spec.weight_count()) throw InvalidArgument("weight count mismatch");

    if (!spec.is_conv()) {
        const auto n_in = static_cast<std::size_t>(spec.in_features);
        std::vector<double> out(static_cast<std::size_t>(spec.out_features), 0.0);
        for (std::size_t o = 0; o < out.size(); ++o) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n_in; ++i) acc += weights[o * n_in + i] * input[i];
            out[o] = acc;
        }
        return out;
    }

    const int ox_n = spec.out_x(), oy_n = spec.out_y();
    const int C = spec.in_channels, H = spec.kernel_h, W = spec.kernel_w;
    const int X = spec.in_x, Y = spec.in_y;
    std::vector<double> out(static_cast<std::size_t>(spec.out_kernels) * ox_n * oy_n, 0.0);
    for (int k = 0; k < spec.out_kernels; ++k)
        for (int ox = 0; ox < ox_n; ++ox)
            for (int oy = 0; oy < oy_n; ++oy) {
                double acc = 0.0;
                for (int c = 0; c < C; ++c)
                    for (int h = 0; h < H; ++h) {
                        const int ix = ox * spec.stride + h * spec.dilation - spec.pad_x();
                        if (ix < 0 || ix >= X) continue;
                        for (int w = 0; w < W; ++w) {
                            const int iy = oy * spec.stride + w * spec.dilation - spec.pad_y();
                            if (iy < 0 || iy >= Y) continue;
                            acc += weights[((std::size_t(k) * C + c) * H + h) * W + w] *
                                   input[(std::size_t(c) * X + ix) * Y + iy];
                        }
                    }
                out[(std::size_t(k) * ox_n + ox) * oy_n + oy] = acc;
            }
    return out;
}

std::vector<Batch> ideal_layer_outputs(const QuantizedNetwork& net, const Batch& batch) {
    std::vector<std::vector<double>> weights;
    weights.reserve(net.layers.size());
    for (const auto& l : net.layers) weights.push_back(l.weights.dequantize());

    std::vector<Batch> per_layer(net.layers.size(), Batch(batch.size()));
    for (std::size_t s = 0; s < batch.size(); ++s) {
        std::vector<double> x = batch[s];
        for (std::size_t li = 0; li < net.layers.size(); ++li) {
            auto y = layer_forward(net.layers[li].spec, weights[li], x);
            per_layer[li][s] = y;
            if (li + 1 < net.layers.size())
                for (auto& v : y) v = relu(v);
            x = std::move(y);
        }
    }
    return per_layer;
}

Batch ideal_forward(const QuantizedNetwork& net, const Batch& batch) {
    if (net.layers.empty()) return batch;
    return std::move(ideal_layer_outputs(net, batch).back());
}

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) throw InvalidArgument("argmax of empty vector");
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) -
                                    values.begin());
}

void Dataset::validate() const {
    if (class_count < 2) throw ValidationError("dataset needs at least 2 classes");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (s.label < 0 || s.label >= class_count)
            throw ValidationError("sample " + std::to_string(i) + ": label " +
                                  std::to_string(s.label) + " outside [0, " +
                                  std::to_string(class_count) + ")");
        if (s.features.size() != shape.size())
            throw ValidationError("sample " + std::to_string(i) + ": feature count " +
                                  std::to_string(s.features.size()) + " != " +
                                  std::to_string(shape.size()));
    }
}

Batch Dataset::features(std::size_t first, std::size_t count) const {
    Batch b;
    const auto last = std::min(samples.size(), first + count);
    for (std::size_t i = first; i < last; ++i) b.push_back(samples[i].features);
    return b;
}

Dataset generate_synthetic_dataset(std::uint64_t seed, std::size_t n, int classes,
                                   FeatureShape shape, double noise_std) {
    if (classes < 2) throw InvalidArgument("need at least 2 classes");
    if (n < static_cast<std::size_t>(classes)) throw InvalidArgument("need n >= classes");
    if (shape.size() == 0) throw InvalidArgument("empty feature shape");
    if (!(noise_std >= 0.0)) throw InvalidArgument("noise_std must be >= 0");

    // Class means come from a fixed stream so every seed shares them.
    std::vector<std::vector<double>> means(static_cast<std::size_t>(classes));
    for (int c = 0; c < classes; ++c) {
        CounterRng rng(mix_key({0xC1A55ULL, std::uint64_t(c)}));
        means[c].resize(shape.size());
        for (auto& m : means[c]) m = 2.0 * rng.uniform() - 1.0;
    }

    Dataset d;
    d.shape = shape;
    d.class_count = classes;
    d.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        CounterRng rng(mix_key({seed, 0x5A3Bull, i}));
        auto& s = d.samples[i];
        s.label = static_cast<int>(i % static_cast<std::size_t>(classes));
        s.features = means[s.label];
        for (auto& f : s.features) f += noise_std * rng.normal();
    }
    return d;
}

double ideal_accuracy(const QuantizedNetwork& net, const Dataset& data) {
    if (data.samples.empty()) throw InvalidArgument("empty dataset");
    const auto logits = ideal_forward(net, data.features(0, data.samples.size()));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < logits.size(); ++i)
        correct += argmax(logits[i]) == static_cast<std::size_t>(data.samples[i].label);
    return double(correct) / double(data.samples.size());
}

}  // namespace rram::qnet
