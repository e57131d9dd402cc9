#include "rram/xbar.hpp"

#include "rram/error.hpp"
#include "rram/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rram::xbar {

DeviceModel DeviceModel::ideal() {
    DeviceModel m;
    m.r_on_std = 0.0;
    m.r_off_std = 0.0;
    m.n_states = 0;
    m.p_stuck_on = 0.0;
    m.p_stuck_off = 0.0;
    return m;
}

void DeviceModel::validate() const {
    if (!(r_on_mean > 0.0) || !(r_off_mean > r_on_mean))
        throw InvalidArgument("device model needs 0 < r_on_mean < r_off_mean");
    if (!(r_on_std >= 0.0) || !(r_off_std >= 0.0))
        throw InvalidArgument("resistance standard deviations must be >= 0");
    if (n_states == 1 || n_states < 0)
        throw InvalidArgument("n_states must be 0 (continuous) or >= 2");
    if (!(p_stuck_on >= 0.0) || !(p_stuck_off >= 0.0) || p_stuck_on + p_stuck_off > 1.0)
        throw InvalidArgument("stuck probabilities must be >= 0 and sum to at most 1");
}

namespace {

constexpr std::uint64_t kPhysicalTag = 0x9A75ULL;
constexpr std::uint64_t kLogicalTag = 0x10C1ULL;

void draw_device(CounterRng& rng, const DeviceModel& m, double& r_on, double& r_off,
                 DeviceState& state) {
    const double u = rng.uniform();
    state = u < m.p_stuck_on                    ? DeviceState::stuck_on
            : u < m.p_stuck_on + m.p_stuck_off ? DeviceState::stuck_off
                                                : DeviceState::free;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        r_on = m.r_on_mean + m.r_on_std * rng.truncated_normal(truncation_sigmas);
        r_off = m.r_off_mean + m.r_off_std * rng.truncated_normal(truncation_sigmas);
        if (r_on > 0.0 && r_off > r_on) return;
    }
    r_on = m.r_on_mean;
    r_off = m.r_off_mean;
}

}  // namespace

TileSet sample_devices(std::uint64_t seed, const mapping::MappingPlan& plan,
                       const DeviceModel& model, const SamplingOptions& options) {
    model.validate();
    const int t = plan.tile_size;
    TileSet tiles;
    tiles.reserve(plan.tiles.size());
    for (const auto& tile : plan.tiles) {
        TileArray ta;
        ta.tile_id = tile.id;
        ta.size = t;
        const auto n = std::size_t(t) * std::size_t(t);
        ta.r_on.resize(n);
        ta.r_off.resize(n);
        ta.g.resize(n);
        ta.state.resize(n);

        // Logical cell carried by each device, if any.
        std::vector<std::int64_t> cell(n, -1);
        if (options.key == SamplingKey::logical)
            for (std::size_t p = 0; p < tile.pairs.size(); ++p)
                for (std::size_t r = 0; r < tile.pairs[p].row_map.size(); ++r) {
                    const auto lc = std::int64_t(tile.pairs[p].logical_col);
                    const auto lr = std::int64_t(tile.pairs[p].row_map[r]);
                    const auto base = lr * plan.matrix.cols + lc;
                    cell[ta.index(int(r), int(2 * p))] = 2 * base;
                    cell[ta.index(int(r), int(2 * p + 1))] = 2 * base + 1;
                }

        for (int row = 0; row < t; ++row)
            for (int col = 0; col < t; ++col) {
                const auto i = ta.index(row, col);
                const auto key =
                    cell[i] >= 0
                        ? mix_key({seed, options.config_hash, options.layer, kLogicalTag,
                                   std::uint64_t(cell[i])})
                        : mix_key({seed, options.config_hash, options.layer, kPhysicalTag,
                                   std::uint64_t(tile.id), std::uint64_t(row), std::uint64_t(col)});
                CounterRng rng(key);
                draw_device(rng, model, ta.r_on[i], ta.r_off[i], ta.state[i]);
                ta.g[i] = ta.state[i] == DeviceState::stuck_on ? ta.g_on(i) : ta.g_off(i);
            }
        tiles.push_back(std::move(ta));
    }
    return tiles;
}

double snap_to_states(double g, double g_off, double g_on, int n_states) {
    if (n_states < 2 || g_on == g_off) return g;
    const double steps = n_states - 1;
    const double frac = std::clamp((g - g_off) / (g_on - g_off), 0.0, 1.0);
    return std::lerp(g_off, g_on, std::round(frac * steps) / steps);
}

TileSet program(TileSet tiles, const mapping::MappingPlan& plan,
                const qnet::WeightTensor& weights, const DeviceModel& model) {
    if (tiles.size() != plan.tiles.size())
        throw InvalidArgument("tile set does not match plan");
    const double w_max = weights.max_abs_code();
    const double steps = model.n_states >= 2 ? model.n_states - 1 : 0.0;

    auto set = [&](TileArray& ta, std::size_t i, double frac) {
        if (ta.state[i] != DeviceState::free) return;
        if (steps > 0.0) frac = std::round(frac * steps) / steps;
        ta.g[i] = std::lerp(ta.g_off(i), ta.g_on(i), frac);
    };

    for (std::size_t ti = 0; ti < plan.tiles.size(); ++ti) {
        auto& ta = tiles[ti];
        const auto& tile = plan.tiles[ti];
        for (std::size_t p = 0; p < tile.pairs.size(); ++p) {
            const auto& pair = tile.pairs[p];
            for (std::size_t r = 0; r < pair.row_map.size(); ++r) {
                const auto wi = plan.matrix.at(pair.row_map[r], pair.logical_col);
                if (wi >= 0 && std::size_t(wi) >= weights.codes.size())
                    throw InvalidArgument("plan references weight " + std::to_string(wi) +
                                          " outside the tensor");
                const double w = wi >= 0 ? weights.codes[std::size_t(wi)] : 0.0;
                const double frac = w_max > 0.0 ? std::abs(w) / w_max : 0.0;
                set(ta, ta.index(int(r), int(2 * p)), w > 0.0 ? frac : 0.0);
                set(ta, ta.index(int(r), int(2 * p + 1)), w < 0.0 ? frac : 0.0);
            }
        }
    }
    return tiles;
}

void IOConfig::validate() const {
    if (io_bit_width < 1 || io_bit_width > max_bit_width)
        throw InvalidArgument("io_bit_width must be in [1, " + std::to_string(max_bit_width) + "]");
    if (!(v_max > 0.0)) throw InvalidArgument("v_max must be > 0");
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
}

double quantizer_levels(int bits) {
    if (bits < 1 || bits > IOConfig::max_bit_width) throw InvalidArgument("bit width out of range");
    return std::max(1.0, std::ldexp(1.0, bits - 1) - 1.0);
}

double quantize_symmetric(double v, double range, int bits) {
    if (!(range > 0.0)) return 0.0;
    const double levels = quantizer_levels(bits);
    const double q = std::clamp(std::round(v / range * levels), -levels, levels);
    return q / levels * range;
}

EncodedBatch encode_inputs(const qnet::Batch& batch, const IOConfig& io) {
    io.validate();
    if (batch.empty()) throw InvalidArgument("cannot encode an empty batch");
    double max_abs = 0.0;
    for (const auto& x : batch)
        for (double v : x) {
            if (!std::isfinite(v)) throw InvalidArgument("non-finite input activation");
            max_abs = std::max(max_abs, std::abs(v));
        }
    EncodedBatch out;
    out.volts_per_unit = max_abs > 0.0 ? io.v_max / max_abs : io.v_max;
    out.voltages.resize(batch.size());
    for (std::size_t s = 0; s < batch.size(); ++s) {
        auto& v = out.voltages[s];
        v.resize(batch[s].size());
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] = quantize_symmetric(batch[s][i] * out.volts_per_unit, io.v_max, io.io_bit_width);
    }
    return out;
}

std::vector<double> tile_vmm(std::span<const double> voltages, std::span<const double> conductance,
                             std::size_t cols) {
    if (conductance.size() != voltages.size() * cols)
        throw InvalidArgument("tile_vmm: conductance block is not rows x cols");
    std::vector<double> current(cols, 0.0);
    for (std::size_t m = 0; m < voltages.size(); ++m) {
        const double v = voltages[m];
        if (v == 0.0) continue;
        const double* row = conductance.data() + m * cols;
        for (std::size_t n = 0; n < cols; ++n) current[n] += v * row[n];
    }
    return current;
}

std::vector<double> readout(std::span<const double> i_pos, std::span<const double> i_neg,
                            const ReadoutCalibration& calibration, const IOConfig& io) {
    if (i_pos.size() != i_neg.size()) throw InvalidArgument("readout: unmatched column pairs");
    const double denom = calibration.volts_per_unit * calibration.siemens_per_weight;
    if (denom == 0.0 || !std::isfinite(denom))
        throw InvalidArgument("readout: zero calibration scale");
    std::vector<double> y(i_pos.size());
    for (std::size_t n = 0; n < y.size(); ++n) {
        y[n] = (i_pos[n] - i_neg[n]) / denom;
        if (calibration.adc_range)
            y[n] = quantize_symmetric(y[n], *calibration.adc_range, io.io_bit_width);
    }
    return y;
}

}  // namespace rram::xbar
