#include "rram/qnet.hpp"

#include "rram/error.hpp"
#include "rram/rng.hpp"

#include <algorithm>
#include <cmath>

namespace rram::qnet {

namespace {

// Accumulates dL/dW into grad_w and writes dL/dx into grad_in.
void layer_backward(const LayerSpec& spec, std::span<const double> weights,
                    std::span<const double> input, std::span<const double> grad_out,
                    std::span<double> grad_w, std::span<double> grad_in) {
    std::fill(grad_in.begin(), grad_in.end(), 0.0);
    if (!spec.is_conv()) {
        const auto n_in = static_cast<std::size_t>(spec.in_features);
        for (std::size_t o = 0; o < grad_out.size(); ++o) {
            const double g = grad_out[o];
            if (g == 0.0) continue;
            for (std::size_t i = 0; i < n_in; ++i) {
                grad_w[o * n_in + i] += g * input[i];
                grad_in[i] += g * weights[o * n_in + i];
            }
        }
        return;
    }
    const int ox_n = spec.out_x(), oy_n = spec.out_y();
    const int C = spec.in_channels, H = spec.kernel_h, W = spec.kernel_w;
    const int X = spec.in_x, Y = spec.in_y;
    for (int k = 0; k < spec.out_kernels; ++k)
        for (int ox = 0; ox < ox_n; ++ox)
            for (int oy = 0; oy < oy_n; ++oy) {
                const double g = grad_out[(std::size_t(k) * ox_n + ox) * oy_n + oy];
                if (g == 0.0) continue;
                for (int c = 0; c < C; ++c)
                    for (int h = 0; h < H; ++h) {
                        const int ix = ox * spec.stride + h * spec.dilation - spec.pad_x();
                        if (ix < 0 || ix >= X) continue;
                        for (int w = 0; w < W; ++w) {
                            const int iy = oy * spec.stride + w * spec.dilation - spec.pad_y();
                            if (iy < 0 || iy >= Y) continue;
                            const auto wi = ((std::size_t(k) * C + c) * H + h) * W + w;
                            const auto xi = (std::size_t(c) * X + ix) * Y + iy;
                            grad_w[wi] += g * input[xi];
                            grad_in[xi] += g * weights[wi];
                        }
                    }
            }
}

std::size_t fan_in(const LayerSpec& s) {
    return s.is_conv() ? std::size_t(s.in_channels) * s.kernel_h * s.kernel_w
                       : std::size_t(s.in_features);
}

}  // namespace

QuantizedNetwork train_fixture(std::uint64_t seed, const std::vector<LayerSpec>& arch,
                               const Dataset& data, double l1, const TrainOptions& options) {
    data.validate();
    if (data.samples.empty()) throw InvalidArgument("cannot train on an empty dataset");
    if (arch.empty()) throw InvalidArgument("architecture has no layers");
    if (!(l1 >= 0.0)) throw InvalidArgument("l1 must be >= 0");
    if (options.epochs < 1 || options.batch_size < 1 || !(options.learning_rate > 0.0))
        throw InvalidArgument("invalid training options");
    if (!is_supported_bit_width(options.bit_width))
        throw InvalidArgument("bit_width must be 4, 6 or 8");

    const auto specs = propagate_shapes(data.shape, arch);
    if (specs.back().output_shape().size() != static_cast<std::size_t>(data.class_count))
        throw InvalidArgument("final layer width does not match class count");

    const std::size_t n_layers = specs.size();
    std::vector<std::vector<double>> weights(n_layers), grads(n_layers);
    for (std::size_t li = 0; li < n_layers; ++li) {
        CounterRng rng(mix_key({seed, 0x1417ULL, li}));
        const double std_dev = std::sqrt(2.0 / double(fan_in(specs[li])));
        weights[li].resize(specs[li].weight_count());
        for (auto& w : weights[li]) w = std_dev * rng.normal();
        grads[li].assign(weights[li].size(), 0.0);
    }

    const std::size_t n = data.samples.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    // Per-layer inputs (post-activation) and pre-activation outputs.
    std::vector<std::vector<double>> inputs(n_layers), pre(n_layers);
    std::vector<double> grad, grad_in;

    const double lr = options.learning_rate;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        CounterRng shuffle_rng(mix_key({seed, 0x5EFFULL, std::uint64_t(epoch)}));
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        for (std::size_t start = 0; start < n; start += std::size_t(options.batch_size)) {
            const std::size_t stop = std::min(n, start + std::size_t(options.batch_size));
            for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);

            for (std::size_t b = start; b < stop; ++b) {
                const auto& sample = data.samples[order[b]];
                std::vector<double> x = sample.features;
                for (std::size_t li = 0; li < n_layers; ++li) {
                    inputs[li] = x;
                    pre[li] = layer_forward(specs[li], weights[li], x);
                    x = pre[li];
                    if (li + 1 < n_layers)
                        for (auto& v : x) v = relu(v);
                }
                // Softmax cross-entropy gradient.
                const double top = *std::max_element(x.begin(), x.end());
                double sum = 0.0;
                for (auto& v : x) sum += (v = std::exp(v - top));
                grad.resize(x.size());
                for (std::size_t c = 0; c < x.size(); ++c)
                    grad[c] = x[c] / sum - (int(c) == sample.label ? 1.0 : 0.0);

                for (std::size_t li = n_layers; li-- > 0;) {
                    if (li + 1 < n_layers)
                        for (std::size_t j = 0; j < grad.size(); ++j)
                            if (pre[li][j] <= 0.0) grad[j] = 0.0;
                    grad_in.assign(inputs[li].size(), 0.0);
                    layer_backward(specs[li], weights[li], inputs[li], grad, grads[li], grad_in);
                    grad.swap(grad_in);
                }
            }

            const double step = lr / double(stop - start);
            const double shrink = lr * l1;
            for (std::size_t li = 0; li < n_layers; ++li)
                for (std::size_t j = 0; j < weights[li].size(); ++j) {
                    const double w = weights[li][j] - step * grads[li][j];
                    const double mag = std::abs(w) - shrink;
                    weights[li][j] = mag > 0.0 ? std::copysign(mag, w) : 0.0;
                }
        }
    }

    QuantizedNetwork net;
    net.name = "fixture";
    net.bit_width = options.bit_width;
    net.seed = seed;
    net.input = data.shape;
    for (std::size_t li = 0; li < n_layers; ++li)
        net.layers.push_back(
            {specs[li], quantize_weights(weights[li], options.bit_width, specs[li].weight_shape())});
    net.validate();
    return net;
}

FeatureShape fixture_input_shape() { return {1, 8, 8}; }

std::vector<LayerSpec> fixture_architecture() {
    return {LayerSpec::conv2d(1, 4, 3, 3), LayerSpec::linear(4 * 6 * 6, fixture_classes)};
}

Fixture make_fixture(std::uint64_t seed, int bit_width) {
    constexpr double noise = 1.2;
    Fixture f;
    f.train = generate_synthetic_dataset(mix_key({seed, 1}), 800, fixture_classes,
                                         fixture_input_shape(), noise);
    f.test = generate_synthetic_dataset(mix_key({seed, 2}), 400, fixture_classes,
                                        fixture_input_shape(), noise);
    TrainOptions opts;
    opts.bit_width = bit_width;
    f.net = train_fixture(seed, fixture_architecture(), f.train, fixture_l1, opts);
    return f;
}

}  // namespace rram::qnet
