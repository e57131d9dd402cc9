#pragma once

#include "rram/mapping.hpp"
#include "rram/qnet.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rram::xbar {

/// Per-device resistance distributions and fault rates. Resistances in ohms.
struct DeviceModel {
    double r_on_mean = 10e3;
    double r_on_std = 1e3;
    double r_off_mean = 100e3;
    double r_off_std = 10e3;
    /// Programmable conductance levels per device; 0 means continuous.
    int n_states = 0;
    double p_stuck_on = 0.005;
    double p_stuck_off = 0.005;

    /// No variability, no stuck devices, continuous conductance.
    static DeviceModel ideal();

    double g_on_nominal() const noexcept { return 1.0 / r_on_mean; }
    double g_off_nominal() const noexcept { return 1.0 / r_off_mean; }

    void validate() const;

    bool operator==(const DeviceModel&) const = default;
};

/// Resistance samples are truncated at this many standard deviations.
inline constexpr double truncation_sigmas = 3.0;

enum class DeviceState : std::uint8_t { free, stuck_on, stuck_off };

/// One t x t crossbar. Storage is row-major: device (row, col) at
/// row * size + col, rows are word lines, columns bit lines.
struct TileArray {
    int tile_id = 0;
    int size = 0;
    std::vector<double> r_on;
    std::vector<double> r_off;
    std::vector<double> g;
    std::vector<DeviceState> state;

    std::size_t index(int row, int col) const noexcept {
        return std::size_t(row) * std::size_t(size) + std::size_t(col);
    }
    double g_on(std::size_t i) const noexcept { return 1.0 / r_on[i]; }
    double g_off(std::size_t i) const noexcept { return 1.0 / r_off[i]; }

    bool operator==(const TileArray&) const = default;
};

/// Parallel to MappingPlan::tiles.
using TileSet = std::vector<TileArray>;

/// How a device's random stream is keyed. `physical` keys on (tile, row,
/// col); `logical` keys on the logical matrix cell and polarity the device
/// carries, so two plans of the same layer draw identical devices for the
/// same weight.
enum class SamplingKey { physical, logical };

struct SamplingOptions {
    std::uint64_t config_hash = 0;
    std::uint64_t layer = 0;
    SamplingKey key = SamplingKey::physical;
};

TileSet sample_devices(std::uint64_t seed, const mapping::MappingPlan& plan,
                       const DeviceModel& model, const SamplingOptions& options = {});

/// Nearest of `n_states` evenly spaced levels between g_off and g_on.
/// `n_states` < 2 returns g unchanged.
double snap_to_states(double g, double g_off, double g_on, int n_states);

/// Differential programming: a weight w >= 0 drives the positive device to
/// g_off + (w / w_max)(g_on - g_off) and leaves the negative one at g_off;
/// negative weights mirror. Each device uses its own sampled g_on/g_off and
/// its own level grid. Stuck devices keep their conductance.
TileSet program(TileSet tiles, const mapping::MappingPlan& plan,
                const qnet::WeightTensor& weights, const DeviceModel& model);

struct IOConfig {
    int io_bit_width = 8;
    double v_max = 0.3;
    int batch_size = 256;

    static constexpr int max_bit_width = 48;

    void validate() const;

    bool operator==(const IOConfig&) const = default;
};

/// Positive levels of the symmetric mid-tread quantizer: 2^(b-1) - 1, at
/// least 1, so zero is always exact and b = 1 gives {-range, 0, range}.
double quantizer_levels(int bits);
double quantize_symmetric(double v, double range, int bits);

struct EncodedBatch {
    qnet::Batch voltages;
    /// Volts per input unit applied before quantization.
    double volts_per_unit = 0.0;
};

/// Scales the whole batch so max|x| maps to v_max, then quantizes to the
/// DAC resolution. An all-zero batch yields zero volts.
EncodedBatch encode_inputs(const qnet::Batch& batch, const IOConfig& io);

/// I[n] = sum_m V[m] * G[m][n] for a row-major rows x cols conductance block,
/// rows = voltages.size().
std::vector<double> tile_vmm(std::span<const double> voltages, std::span<const double> conductance,
                             std::size_t cols);

struct ReadoutCalibration {
    double volts_per_unit = 1.0;
    double siemens_per_weight = 1.0;
    /// ADC full-scale in weight-domain output units; nullopt disables the ADC.
    std::optional<double> adc_range;
};

/// y = (i_pos - i_neg) / (volts_per_unit * siemens_per_weight), then
/// quantized over [-adc_range, adc_range].
std::vector<double> readout(std::span<const double> i_pos, std::span<const double> i_neg,
                            const ReadoutCalibration& calibration, const IOConfig& io);

struct LayerHardware {
    mapping::MappingPlan plan;
    TileSet tiles;
    double siemens_per_weight = 1.0;
};

struct Hardware {
    mapping::Scheme scheme = mapping::Scheme::sparse_staggered;
    int tile_size = 0;
    std::vector<LayerHardware> layers;
};

/// Maps, samples and programs every layer. Layer i's streams are keyed with
/// SamplingOptions::layer = i.
Hardware build_hardware(const qnet::QuantizedNetwork& net, mapping::Scheme scheme, int tile_size,
                        const DeviceModel& model, std::uint64_t seed,
                        const SamplingOptions& sampling = {});

/// Per-layer ADC full-scale: max |pre-activation| of the noiseless network
/// over `batch`.
std::vector<double> calibrate_adc(const qnet::QuantizedNetwork& net, const qnet::Batch& batch);

/// Runs `batch` as one scaling group through the programmed tiles.
qnet::Batch simulate_forward(const qnet::QuantizedNetwork& net, const Hardware& hardware,
                             const qnet::Batch& batch, const IOConfig& io,
                             std::span<const double> adc_ranges);

struct HardwareConfig {
    int tile_size = 64;
    IOConfig io;
    DeviceModel device;
    SamplingOptions sampling;
};

/// Top-1 accuracy with the dataset split into scaling groups of
/// io.batch_size and the ADC calibrated on the same data without noise.
double evaluate_accuracy(const qnet::QuantizedNetwork& net, mapping::Scheme scheme,
                         const HardwareConfig& config, const qnet::Dataset& data,
                         std::uint64_t seed);

}  // namespace rram::xbar
