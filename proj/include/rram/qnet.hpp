#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rram::qnet {

enum class LayerKind { conv2d, conv1d, linear };

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view name);

/// Activation tensor shape, stored channel-major (C, X, Y) and row-major.
struct FeatureShape {
    int channels = 1;
    int x = 1;
    int y = 1;

    std::size_t size() const noexcept {
        return static_cast<std::size_t>(channels) * static_cast<std::size_t>(x) *
               static_cast<std::size_t>(y);
    }
    bool operator==(const FeatureShape&) const = default;
};

/// floor((extent + 2*pad - dilation*(kernel-1) - 1) / stride) + 1.
/// Throws InvalidArgument when the window does not fit at least once.
int conv_output_extent(int extent, int kernel, int stride, int pad, int dilation);

/// One layer's hyper-parameters.
///
/// Conv weights are laid out [K, C, H, W]; linear weights [out, in]. For
/// conv1d W is 1, the input Y extent is 1 and padding only applies along X.
/// `in_x`/`in_y` are filled by shape propagation.
struct LayerSpec {
    LayerKind kind = LayerKind::linear;

    int in_channels = 1;
    int out_kernels = 1;
    int kernel_h = 1;
    int kernel_w = 1;
    int stride = 1;
    int padding = 0;
    int dilation = 1;

    int in_features = 0;
    int out_features = 0;

    int in_x = 0;
    int in_y = 1;

    static LayerSpec conv2d(int in_channels, int kernels, int kernel_h, int kernel_w,
                            int stride = 1, int padding = 0, int dilation = 1);
    static LayerSpec conv1d(int in_channels, int kernels, int kernel_h, int stride = 1,
                            int padding = 0, int dilation = 1);
    static LayerSpec linear(int in_features, int out_features);

    bool is_conv() const noexcept { return kind != LayerKind::linear; }
    int pad_x() const noexcept { return padding; }
    int pad_y() const noexcept { return kind == LayerKind::conv2d ? padding : 0; }
    int out_x() const;
    int out_y() const;

    FeatureShape input_shape() const;
    FeatureShape output_shape() const;

    std::vector<std::size_t> weight_shape() const;
    std::size_t weight_count() const;

    /// Checks per-field invariants (H, W, S, D, K >= 1, P >= 0, ...).
    void validate() const;

    bool operator==(const LayerSpec&) const = default;
};

/// Signed integer weight codes with one per-tensor scale.
struct WeightTensor {
    std::vector<std::size_t> shape;
    std::vector<std::int32_t> codes;
    double scale = 1.0;
    int bit_width = 8;

    std::size_t size() const noexcept { return codes.size(); }
    std::int32_t code_limit() const noexcept { return (std::int32_t{1} << (bit_width - 1)) - 1; }
    double value(std::size_t i) const noexcept { return codes[i] * scale; }
    std::vector<double> dequantize() const;
    std::int32_t max_abs_code() const noexcept;

    void validate() const;

    bool operator==(const WeightTensor&) const = default;
};

bool is_supported_bit_width(int bits) noexcept;

/// Symmetric per-tensor uniform quantization.
///
/// scale = max|v| / (2^(b-1) - 1) and codes are rounded half away from zero,
/// so -2^(b-1) is never produced. An all-zero tensor gets scale 1.
WeightTensor quantize_weights(std::span<const double> values, int bit_width,
                              std::vector<std::size_t> shape = {});

struct Layer {
    LayerSpec spec;
    WeightTensor weights;

    bool operator==(const Layer&) const = default;
};

struct QuantizedNetwork {
    std::string name;
    int bit_width = 8;
    std::uint64_t seed = 0;
    FeatureShape input;
    std::vector<Layer> layers;

    FeatureShape output_shape() const;
    std::size_t weight_count() const;

    /// Checks shapes compose and every tensor respects the bit-width.
    /// Messages name the offending layer.
    void validate() const;

    bool operator==(const QuantizedNetwork&) const = default;
};

/// Fills `in_x`/`in_y` and checks each layer consumes the previous output.
/// Linear layers flatten whatever precedes them.
std::vector<LayerSpec> propagate_shapes(FeatureShape input, std::vector<LayerSpec> arch);

struct Sparsity {
    std::size_t zero_count = 0;
    std::size_t total = 0;
    double fraction = 0.0;
};

Sparsity sparsity(const QuantizedNetwork& net);

using Batch = std::vector<std::vector<double>>;

/// Pre-activation output of one layer, direct sliding-window for conv.
std::vector<double> layer_forward(const LayerSpec& spec, std::span<const double> weights,
                                  std::span<const double> input);

inline double relu(double v) noexcept { return v > 0.0 ? v : 0.0; }

/// Reference forward pass on dequantized weights: ReLU between layers, none
/// after the last one.
Batch ideal_forward(const QuantizedNetwork& net, const Batch& batch);

/// Same as ideal_forward but also returns every layer's pre-activation output.
std::vector<Batch> ideal_layer_outputs(const QuantizedNetwork& net, const Batch& batch);

/// Index of the largest element; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values);

struct Sample {
    std::vector<double> features;
    int label = 0;

    bool operator==(const Sample&) const = default;
};

struct Dataset {
    FeatureShape shape;
    int class_count = 0;
    std::vector<Sample> samples;

    void validate() const;
    Batch features(std::size_t first, std::size_t count) const;

    bool operator==(const Dataset&) const = default;
};

/// Gaussian blobs around fixed class means (the means do not depend on
/// `seed`; only the per-sample noise does). Labels cycle 0..classes-1.
Dataset generate_synthetic_dataset(std::uint64_t seed, std::size_t n, int classes,
                                   FeatureShape shape, double noise_std = 1.0);

double ideal_accuracy(const QuantizedNetwork& net, const Dataset& data);

struct TrainOptions {
    int epochs = 30;
    int batch_size = 16;
    double learning_rate = 0.05;
    int bit_width = 8;
};

/// Mini-batch gradient descent on softmax cross-entropy with an L1 penalty
/// applied as a proximal (soft-threshold) step, then post-hoc quantization.
/// Single-threaded and bit-reproducible for a given seed.
QuantizedNetwork train_fixture(std::uint64_t seed, const std::vector<LayerSpec>& arch,
                               const Dataset& data, double l1, const TrainOptions& options = {});

struct Fixture {
    QuantizedNetwork net;
    Dataset train;
    Dataset test;
};

FeatureShape fixture_input_shape();
std::vector<LayerSpec> fixture_architecture();
inline constexpr int fixture_classes = 4;
inline constexpr double fixture_l1 = 5e-4;

/// The desk-scale network + data used by the CLI and the acceptance suite.
Fixture make_fixture(std::uint64_t seed, int bit_width = 8);

// File formats (format_version 1).
std::string network_to_json(const QuantizedNetwork& net);
QuantizedNetwork network_from_json(std::string_view text);
void save_network(const QuantizedNetwork& net, const std::filesystem::path& path);
QuantizedNetwork load_network(const std::filesystem::path& path);

std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(std::string_view text);
void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace rram::qnet
