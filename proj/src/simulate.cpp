#include "rram/xbar.hpp"

#include "rram/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rram::xbar {

Hardware build_hardware(const qnet::QuantizedNetwork& net, mapping::Scheme scheme, int tile_size,
                        const DeviceModel& model, std::uint64_t seed,
                        const SamplingOptions& sampling) {
    model.validate();
    Hardware hw;
    hw.scheme = scheme;
    hw.tile_size = tile_size;
    const double g_span = model.g_on_nominal() - model.g_off_nominal();
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const auto& layer = net.layers[li];
        LayerHardware lh;
        try {
            lh.plan = mapping::map_layer(layer, scheme, tile_size);
        } catch (const InvalidArgument& e) {
            throw InvalidArgument("layer " + std::to_string(li) + ": " + e.what());
        }
        auto opts = sampling;
        opts.layer = li;
        lh.tiles = program(sample_devices(seed, lh.plan, model, opts), lh.plan, layer.weights, model);
        const double w_max = std::max<std::int32_t>(1, layer.weights.max_abs_code());
        lh.siemens_per_weight = g_span / (w_max * layer.weights.scale);
        hw.layers.push_back(std::move(lh));
    }
    return hw;
}

std::vector<double> calibrate_adc(const qnet::QuantizedNetwork& net, const qnet::Batch& batch) {
    std::vector<double> ranges(net.layers.size(), 0.0);
    const auto outputs = qnet::ideal_layer_outputs(net, batch);
    for (std::size_t li = 0; li < outputs.size(); ++li)
        for (const auto& y : outputs[li])
            for (double v : y) ranges[li] = std::max(ranges[li], std::abs(v));
    return ranges;
}

namespace {

// Column pairs of one tile that share a word-line routing and can be read
// in the same cycle.
struct ReadGroup {
    const std::vector<int>* row_map = nullptr;
    std::vector<std::size_t> pairs;
};

std::vector<std::vector<ReadGroup>> read_groups(const mapping::MappingPlan& plan) {
    std::vector<std::vector<ReadGroup>> out(plan.tiles.size());
    for (std::size_t ti = 0; ti < plan.tiles.size(); ++ti) {
        const auto& pairs = plan.tiles[ti].pairs;
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            auto it = std::find_if(out[ti].begin(), out[ti].end(), [&](const ReadGroup& g) {
                return *g.row_map == pairs[p].row_map;
            });
            if (it == out[ti].end()) {
                out[ti].push_back({&pairs[p].row_map, {}});
                it = out[ti].end() - 1;
            }
            it->pairs.push_back(p);
        }
    }
    return out;
}

}  // namespace

qnet::Batch simulate_forward(const qnet::QuantizedNetwork& net, const Hardware& hardware,
                             const qnet::Batch& batch, const IOConfig& io,
                             std::span<const double> adc_ranges) {
    if (hardware.layers.size() != net.layers.size())
        throw InvalidArgument("hardware does not cover every layer");
    if (!adc_ranges.empty() && adc_ranges.size() != net.layers.size())
        throw InvalidArgument("one ADC range per layer required");

    qnet::Batch x = batch;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const auto& lh = hardware.layers[li];
        const auto& plan = lh.plan;
        const auto t = std::size_t(plan.tile_size);
        if (!x.empty() && x.front().size() != net.layers[li].spec.input_shape().size())
            throw InvalidArgument("layer " + std::to_string(li) + ": input shape mismatch");

        const auto encoded = encode_inputs(x, io);
        ReadoutCalibration calib{encoded.volts_per_unit, lh.siemens_per_weight, std::nullopt};
        if (!adc_ranges.empty()) calib.adc_range = adc_ranges[li];

        const auto groups = read_groups(plan);
        const auto cols = std::size_t(plan.matrix.cols);
        std::vector<double> i_pos(cols), i_neg(cols), v;

        qnet::Batch y(x.size());
        for (std::size_t s = 0; s < x.size(); ++s) {
            const auto& volts = encoded.voltages[s];
            y[s].assign(std::size_t(plan.output_size()), 0.0);
            for (int read = 0; read < plan.read_positions(); ++read) {
                std::fill(i_pos.begin(), i_pos.end(), 0.0);
                std::fill(i_neg.begin(), i_neg.end(), 0.0);
                for (std::size_t ti = 0; ti < plan.tiles.size(); ++ti) {
                    const auto& ta = lh.tiles[ti];
                    const auto& pairs = plan.tiles[ti].pairs;
                    for (const auto& group : groups[ti]) {
                        const auto& rows = *group.row_map;
                        v.resize(rows.size());
                        for (std::size_t r = 0; r < rows.size(); ++r) {
                            const int in = plan.input_index(read, rows[r]);
                            v[r] = in >= 0 ? volts[std::size_t(in)] : 0.0;
                        }
                        const auto current =
                            tile_vmm(v, std::span<const double>(ta.g.data(), rows.size() * t), t);
                        for (auto p : group.pairs) {
                            const auto lc = std::size_t(pairs[p].logical_col);
                            i_pos[lc] += current[2 * p];
                            i_neg[lc] += current[2 * p + 1];
                        }
                    }
                }
                const auto out = readout(i_pos, i_neg, calib, io);
                for (std::size_t lc = 0; lc < cols; ++lc)
                    y[s][std::size_t(plan.output_index(read, int(lc)))] = out[lc];
            }
            if (li + 1 < net.layers.size())
                for (auto& val : y[s]) val = qnet::relu(val);
        }
        x = std::move(y);
    }
    return x;
}

double evaluate_accuracy(const qnet::QuantizedNetwork& net, mapping::Scheme scheme,
                         const HardwareConfig& config, const qnet::Dataset& data,
                         std::uint64_t seed) {
    if (data.samples.empty()) throw InvalidArgument("cannot evaluate on an empty dataset");
    config.io.validate();
    const auto hw = build_hardware(net, scheme, config.tile_size, config.device, seed,
                                   config.sampling);
    const auto ranges = calibrate_adc(net, data.features(0, data.samples.size()));

    std::size_t correct = 0;
    const auto group = std::size_t(config.io.batch_size);
    for (std::size_t first = 0; first < data.samples.size(); first += group) {
        const auto logits = simulate_forward(net, hw, data.features(first, group), config.io, ranges);
        for (std::size_t i = 0; i < logits.size(); ++i)
            correct += qnet::argmax(logits[i]) == std::size_t(data.samples[first + i].label);
    }
    return double(correct) / double(data.samples.size());
}

}  // namespace rram::xbar
