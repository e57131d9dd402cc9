#include "rram/error.hpp"
#include "rram/xbar.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace rram;
using namespace rram::xbar;

namespace {

mapping::MappingPlan square_plan(int t, int tiles) {
    mapping::MappingPlan plan;
    plan.tile_size = t;
    plan.matrix = mapping::linear_matrix(t, tiles * t / 2);
    for (int ti = 0; ti < tiles; ++ti) {
        mapping::Tile tile{ti, {}};
        for (int p = 0; p < t / 2; ++p) {
            mapping::ColumnPair pair{ti * t / 2 + p, {}};
            for (int r = 0; r < t; ++r) pair.row_map.push_back(r);
            tile.pairs.push_back(pair);
        }
        plan.tiles.push_back(tile);
    }
    return plan;
}

qnet::QuantizedNetwork linear_net(int in, int out, std::mt19937_64& rng, bool allow_zero) {
    qnet::QuantizedNetwork net;
    net.input = {1, in, 1};
    const auto specs = qnet::propagate_shapes(net.input, {qnet::LayerSpec::linear(in, out)});
    qnet::Layer l{specs.front(), {}};
    l.weights.shape = l.spec.weight_shape();
    l.weights.scale = 0.02;
    std::uniform_int_distribution<int> code(allow_zero ? -127 : 1, 127);
    std::bernoulli_distribution flip(0.5);
    for (std::size_t i = 0; i < l.spec.weight_count(); ++i) {
        int c = code(rng);
        if (!allow_zero && flip(rng)) c = -c;
        l.weights.codes.push_back(c);
    }
    net.layers.push_back(l);
    net.validate();
    return net;
}

qnet::Batch random_batch(std::size_t n, std::size_t features, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    qnet::Batch b(n, std::vector<double>(features));
    for (auto& x : b)
        for (auto& v : x) v = g(rng);
    return b;
}

IOConfig wide_io() {
    IOConfig io;
    io.io_bit_width = IOConfig::max_bit_width;
    return io;
}

// max_j |a_j - b_j| <= tol * max_j |b_j|
bool close_logits(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    if (a.size() != b.size()) return false;
    double scale = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        scale = std::max(scale, std::abs(b[i]));
        diff = std::max(diff, std::abs(a[i] - b[i]));
    }
    return diff <= tol * scale;
}

}  // namespace

TEST_SUITE("xbar") {

TEST_CASE("device model validation") {
    CHECK_NOTHROW(DeviceModel{}.validate());
    DeviceModel m;
    m.r_off_mean = m.r_on_mean;
    CHECK_THROWS_AS(m.validate(), InvalidArgument);
    m = {};
    m.n_states = 1;
    CHECK_THROWS_AS(m.validate(), InvalidArgument);
    m = {};
    m.p_stuck_on = 0.7;
    m.p_stuck_off = 0.4;
    CHECK_THROWS_AS(m.validate(), InvalidArgument);
    m = {};
    m.r_on_std = -1.0;
    CHECK_THROWS_AS(m.validate(), InvalidArgument);
}

TEST_CASE("sampling is deterministic and keyed by seed") {
    const auto plan = square_plan(8, 3);
    const DeviceModel m;
    const auto a = sample_devices(0, plan, m);
    CHECK(a == sample_devices(0, plan, m));
    CHECK_FALSE(a == sample_devices(1, plan, m));
    SamplingOptions other;
    other.config_hash = 17;
    CHECK_FALSE(a == sample_devices(0, plan, m, other));
}

TEST_CASE("sampled resistances stay within three sigma and ordered") {
    const auto plan = square_plan(32, 4);
    const DeviceModel m;
    for (const auto& ta : sample_devices(3, plan, m))
        for (std::size_t i = 0; i < ta.r_on.size(); ++i) {
            CHECK(ta.r_on[i] > 0.0);
            CHECK(ta.r_off[i] > ta.r_on[i]);
            CHECK(std::abs(ta.r_on[i] - m.r_on_mean) <= 3 * m.r_on_std + 1e-9);
            CHECK(std::abs(ta.r_off[i] - m.r_off_mean) <= 3 * m.r_off_std + 1e-9);
        }
}

TEST_CASE("device statistics on a small sample") {
    const auto plan = square_plan(64, 50);  // 204800 devices
    DeviceModel m;
    m.p_stuck_on = 0.01;
    m.p_stuck_off = 0.02;
    double sum = 0.0, n = 0.0, on = 0.0, off = 0.0;
    for (const auto& ta : sample_devices(0, plan, m))
        for (std::size_t i = 0; i < ta.r_off.size(); ++i) {
            sum += ta.r_off[i];
            on += ta.state[i] == DeviceState::stuck_on;
            off += ta.state[i] == DeviceState::stuck_off;
            n += 1.0;
        }
    CHECK(sum / n == doctest::Approx(m.r_off_mean).epsilon(0.01));
    CHECK(on / n == doctest::Approx(0.01).epsilon(0.1));
    CHECK(off / n == doctest::Approx(0.02).epsilon(0.1));
}

TEST_CASE("programming endpoints and bounds") {
    std::mt19937_64 rng(2);
    auto net = linear_net(4, 2, rng, true);
    auto& codes = net.layers[0].weights.codes;
    codes = {127, 0, -127, 64, 0, 0, 0, 1};
    const auto plan = mapping::map_layer(net.layers[0], mapping::Scheme::sparse_staggered, 8);

    const auto ideal = DeviceModel::ideal();
    const auto tiles = program(sample_devices(0, plan, ideal), plan, net.layers[0].weights, ideal);
    const auto& ta = tiles.front();
    // Weight 0 sits on row 0 of column pair 0: w = w_max.
    CHECK(ta.g[ta.index(0, 0)] == doctest::Approx(1.0 / ideal.r_on_mean).epsilon(1e-15));
    CHECK(ta.g[ta.index(0, 1)] == doctest::Approx(1.0 / ideal.r_off_mean).epsilon(1e-15));
    // Weight 1 is zero: both sides at g_off.
    CHECK(ta.g[ta.index(1, 0)] == 1.0 / ideal.r_off_mean);
    CHECK(ta.g[ta.index(1, 1)] == 1.0 / ideal.r_off_mean);
    // Weight 2 is -w_max: mirrored.
    CHECK(ta.g[ta.index(2, 1)] == doctest::Approx(1.0 / ideal.r_on_mean).epsilon(1e-15));
    CHECK(ta.g[ta.index(2, 0)] == 1.0 / ideal.r_off_mean);

    // Bounds and stuck dominance under a noisy model.
    DeviceModel noisy;
    noisy.p_stuck_on = 0.1;
    noisy.p_stuck_off = 0.1;
    noisy.n_states = 8;
    const auto sampled = sample_devices(5, plan, noisy);
    const auto programmed = program(sampled, plan, net.layers[0].weights, noisy);
    for (std::size_t ti = 0; ti < programmed.size(); ++ti)
        for (std::size_t i = 0; i < programmed[ti].g.size(); ++i) {
            const auto& p = programmed[ti];
            CHECK(p.g[i] >= p.g_off(i) * (1 - 1e-12));
            CHECK(p.g[i] <= p.g_on(i) * (1 + 1e-12));
            if (p.state[i] != DeviceState::free) CHECK(p.g[i] == sampled[ti].g[i]);
            if (p.state[i] == DeviceState::stuck_on) CHECK(p.g[i] == p.g_on(i));
            if (p.state[i] == DeviceState::stuck_off) CHECK(p.g[i] == p.g_off(i));
        }
}

TEST_CASE("snapping to a finite level grid") {
    const double g_off = 1e-5, g_on = 1e-4;
    const int n = 4;
    const double gap = (g_on - g_off) / (n - 1);
    std::set<double> levels;
    for (int i = 0; i <= 1000; ++i) {
        const double g = g_off + (g_on - g_off) * i / 1000.0;
        const double s = snap_to_states(g, g_off, g_on, n);
        CHECK(std::abs(s - g) <= gap / 2 + 1e-18);
        levels.insert(s);
    }
    CHECK(levels.size() == 4);
    CHECK(snap_to_states(3e-5, g_off, g_on, 0) == 3e-5);
    // Midway between levels 1 and 2 lands on one of them.
    const double mid = g_off + 1.5 * gap;
    const double s = snap_to_states(mid, g_off, g_on, n);
    CHECK((s == doctest::Approx(g_off + gap) || s == doctest::Approx(g_off + 2 * gap)));
}

TEST_CASE("input encoding") {
    IOConfig io = wide_io();
    const auto e = encode_inputs({{1.0, -2.0, 0.0}}, io);
    CHECK(e.voltages[0][0] == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(e.voltages[0][1] == doctest::Approx(-0.3).epsilon(1e-12));
    CHECK(e.voltages[0][2] == 0.0);

    io.io_bit_width = 1;
    std::mt19937_64 rng(1);
    const auto b = random_batch(20, 10, rng);
    for (const auto& v : encode_inputs(b, io).voltages)
        for (double x : v) CHECK((x == 0.0 || x == 0.3 || x == -0.3));

    const auto zero = encode_inputs({{0.0, 0.0}}, IOConfig{});
    CHECK(zero.voltages[0] == std::vector<double>{0.0, 0.0});
    CHECK_THROWS_AS(encode_inputs({{1.0, INFINITY}}, IOConfig{}), InvalidArgument);
    CHECK_THROWS_AS(encode_inputs({}, IOConfig{}), InvalidArgument);
    io.io_bit_width = 0;
    CHECK_THROWS_AS(encode_inputs({{1.0}}, io), InvalidArgument);
}

TEST_CASE("tile_vmm") {
    const std::vector<double> v{0.1, 0.2};
    const std::vector<double> g{1e-4, 2e-4, 3e-4, 4e-4};
    const auto i = tile_vmm(v, g, 2);
    CHECK(i[0] == doctest::Approx(7e-5).epsilon(1e-12));
    CHECK(i[1] == doctest::Approx(1.0e-4).epsilon(1e-12));

    const std::vector<double> zero{0.0, 0.0};
    CHECK(tile_vmm(zero, g, 2) == std::vector<double>{0.0, 0.0});

    const std::vector<double> diag{5e-5, 0.0, 0.0, 5e-5};
    const auto d = tile_vmm(v, diag, 2);
    CHECK(d[0] == doctest::Approx(5e-5 * 0.1));
    CHECK(d[1] == doctest::Approx(5e-5 * 0.2));

    CHECK_THROWS_AS(tile_vmm(v, std::vector<double>(3), 2), InvalidArgument);
}

TEST_CASE("tile_vmm is linear") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-0.3, 0.3), gu(1e-5, 1e-4);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t rows = 1 + rng() % 16, cols = 1 + rng() % 16;
        std::vector<double> g(rows * cols), v1(rows), v2(rows), mix(rows);
        for (auto& x : g) x = gu(rng);
        for (auto& x : v1) x = u(rng);
        for (auto& x : v2) x = u(rng);
        const double a = u(rng), b = u(rng);
        for (std::size_t r = 0; r < rows; ++r) mix[r] = a * v1[r] + b * v2[r];
        const auto i1 = tile_vmm(v1, g, cols), i2 = tile_vmm(v2, g, cols), im = tile_vmm(mix, g, cols);
        for (std::size_t c = 0; c < cols; ++c)
            CHECK(im[c] == doctest::Approx(a * i1[c] + b * i2[c]).epsilon(1e-12).scale(1e-5));
    }
}

TEST_CASE("readout") {
    const IOConfig io = wide_io();
    ReadoutCalibration cal{2.0, 0.5, std::nullopt};
    const std::vector<double> pos{3.0, 1.0}, neg{1.0, 1.0};
    const auto y = readout(pos, neg, cal, io);
    CHECK(y[0] == 2.0);
    CHECK(y[1] == 0.0);

    cal.siemens_per_weight = 0.0;
    CHECK_THROWS_AS(readout(pos, neg, cal, io), InvalidArgument);

    IOConfig two;
    two.io_bit_width = 2;
    ReadoutCalibration adc{1.0, 1.0, 1.0};
    std::vector<double> p(200), n(200, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = -1.5 + 3.0 * double(i) / 199.0;
    const auto q = readout(p, n, adc, two);
    CHECK(std::set<double>(q.begin(), q.end()).size() <= 4);
}

TEST_CASE("single weight through the analog path") {
    std::mt19937_64 rng(4);
    auto net = linear_net(1, 1, rng, false);
    net.layers[0].weights.codes = {-37};
    const auto hw = build_hardware(net, mapping::Scheme::sparse_staggered, 2, DeviceModel::ideal(), 0);
    for (double x : {0.7, -1.3, 2.5}) {
        const auto y = simulate_forward(net, hw, {{x}}, wide_io(), {});
        const double expect = -37 * net.layers[0].weights.scale * x;
        CHECK(y[0][0] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("noise-off pipeline equals the ideal forward pass") {
    std::mt19937_64 rng(31);
    HardwareConfig off;
    off.device = DeviceModel::ideal();
    off.io = wide_io();
    for (int trial = 0; trial < 20; ++trial) {
        const auto net = testing::random_network(rng);
        const auto batch = random_batch(6, net.input.size(), rng);
        const auto ideal = qnet::ideal_forward(net, batch);
        const auto ranges = calibrate_adc(net, batch);
        for (auto scheme : mapping::all_schemes) {
            Hardware hw;
            try {
                hw = build_hardware(net, scheme, 16, off.device, 0);
            } catch (const InvalidArgument&) {
                continue;
            }
            const auto y = simulate_forward(net, hw, batch, off.io, ranges);
            for (std::size_t s = 0; s < y.size(); ++s) CHECK(close_logits(y[s], ideal[s], 1e-6));
        }
    }
}

TEST_CASE("all devices stuck off gives chance accuracy") {
    const auto& fx = testing::fixture();
    HardwareConfig cfg;
    cfg.device.p_stuck_on = 0.0;
    cfg.device.p_stuck_off = 1.0;
    const double tsa = evaluate_accuracy(fx.net, mapping::Scheme::sparse_staggered, cfg, fx.test, 0);
    CHECK(std::abs(tsa - 0.25) <= 0.10);

    // Without variability every logit is exactly zero.
    cfg.device.r_on_std = cfg.device.r_off_std = 0.0;
    const auto hw = build_hardware(fx.net, mapping::Scheme::dense_kernel, 64, cfg.device, 0);
    const auto y = simulate_forward(fx.net, hw, fx.test.features(0, 8), cfg.io, {});
    for (const auto& s : y)
        for (double v : s) CHECK(v == 0.0);
}

TEST_CASE("simulation is deterministic per seed") {
    const auto& fx = testing::fixture();
    const DeviceModel m;
    const auto batch = fx.test.features(0, 32);
    const auto a = simulate_forward(fx.net, build_hardware(fx.net, mapping::Scheme::dense_routed, 32, m, 0),
                                    batch, IOConfig{}, {});
    const auto b = simulate_forward(fx.net, build_hardware(fx.net, mapping::Scheme::dense_routed, 32, m, 0),
                                    batch, IOConfig{}, {});
    const auto c = simulate_forward(fx.net, build_hardware(fx.net, mapping::Scheme::dense_routed, 32, m, 1),
                                    batch, IOConfig{}, {});
    CHECK(a == b);
    CHECK_FALSE(a == c);
}

TEST_CASE("sparse and routed plans agree under logical keying") {
    std::mt19937_64 rng(12);
    DeviceModel m;
    m.p_stuck_on = m.p_stuck_off = 0.05;
    m.n_states = 16;
    SamplingOptions logical;
    logical.key = SamplingKey::logical;
    for (int trial = 0; trial < 5; ++trial) {
        // No zero weights, so both plans hold the same logical cells.
        const auto net = linear_net(20, 6, rng, false);
        const auto batch = random_batch(10, 20, rng);
        const auto ranges = calibrate_adc(net, batch);
        const auto sparse = build_hardware(net, mapping::Scheme::sparse_staggered, 8, m, 3, logical);
        const auto routed = build_hardware(net, mapping::Scheme::dense_routed, 8, m, 3, logical);
        CHECK(simulate_forward(net, sparse, batch, IOConfig{}, ranges) ==
              simulate_forward(net, routed, batch, IOConfig{}, ranges));
    }

    // With zero weights present the plans differ only by the reclaimed
    // pairs, which carry no current on ideal devices.
    const auto& fx = testing::fixture();
    HardwareConfig cfg;
    cfg.device = DeviceModel::ideal();
    cfg.device.n_states = 16;
    cfg.sampling = logical;
    qnet::QuantizedNetwork head;
    head.input = fx.net.layers[1].spec.input_shape();
    head.layers = {fx.net.layers[1]};
    qnet::Dataset feats;
    feats.shape = head.input;
    feats.class_count = 4;
    const auto hidden = qnet::ideal_layer_outputs(fx.net, fx.test.features(0, 200));
    for (std::size_t i = 0; i < 200; ++i) {
        std::vector<double> h = hidden[0][i];
        for (auto& v : h) v = qnet::relu(v);
        feats.samples.push_back({h, fx.test.samples[i].label});
    }
    CHECK(evaluate_accuracy(head, mapping::Scheme::sparse_staggered, cfg, feats, 0) ==
          evaluate_accuracy(head, mapping::Scheme::dense_routed, cfg, feats, 0));
}

TEST_CASE("evaluate_accuracy rejects an empty dataset") {
    const auto& fx = testing::fixture();
    qnet::Dataset empty;
    empty.shape = fx.test.shape;
    empty.class_count = 4;
    CHECK_THROWS_AS(evaluate_accuracy(fx.net, mapping::Scheme::sparse_staggered, HardwareConfig{}, empty, 0),
                    InvalidArgument);
}

}  // TEST_SUITE
