// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "rram/cli.hpp"
#include "rram/dse.hpp"
#include "rram/error.hpp"
#include "rram/mapping.hpp"
#include "rram/qnet.hpp"
#include "rram/report.hpp"
#include "rram/xbar.hpp"

#include "support.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>

using namespace rram;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report_line(int id, const char* name, const std::function<Verdict()>& check) {
    Verdict v;
    try {
        v = check();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d %-44s %s  %s\n", id, name, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
    if (!v.pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double max_rel_diff(const qnet::Batch& a, const qnet::Batch& b) {
    double worst = 0.0;
    for (std::size_t s = 0; s < a.size(); ++s) {
        double scale = 0.0, diff = 0.0;
        for (std::size_t j = 0; j < a[s].size(); ++j) {
            scale = std::max(scale, std::abs(b[s][j]));
            diff = std::max(diff, std::abs(a[s][j] - b[s][j]));
        }
        if (diff > 0.0) worst = std::max(worst, scale > 0.0 ? diff / scale : INFINITY);
    }
    return worst;
}

xbar::IOConfig wide_io() {
    xbar::IOConfig io;
    io.io_bit_width = xbar::IOConfig::max_bit_width;
    return io;
}

// 1. Cost formulas on at least 20 hand-evaluated geometries.
Verdict formulas() {
    int n = 0, bad = 0;
    for (const auto& c : testing::eq_cases) {
        const auto g = testing::eq_geometry(c);
        const auto e1 = mapping::devices_sparse_eq1(g);
        const auto e3 = mapping::steps_dense_eq3(g);
        const bool ok = e1.floor() == c.eq1_floor && e1.integral() == c.eq1_exact &&
                        mapping::devices_dense_eq2(g) == c.eq2 && e3.floor() == c.eq3_floor &&
                        e3.integral() == c.eq3_exact;
        bad += !ok;
        ++n;
    }
    return {n >= 20 && bad == 0, fmt("%d cases, %d mismatches", n, bad)};
}

// 2. Every plan carries exactly the brute-force products.
Verdict connectivity() {
    std::mt19937_64 rng(2024);
    int n = 0, bad = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto layer = testing::random_layer(rng);
        const int t = std::uniform_int_distribution<int>(1, 8)(rng) * 2;
        const auto all = testing::brute_force_products(layer, false);
        const auto nonzero = testing::brute_force_products(layer, true);
        bad += testing::plan_products(mapping::map_layer(layer, mapping::Scheme::sparse_staggered, t)) != all;
        bad += testing::plan_products(mapping::map_layer(layer, mapping::Scheme::dense_routed, t)) != nonzero;
        if (!layer.spec.is_conv() ||
            layer.spec.in_channels * layer.spec.kernel_h * layer.spec.kernel_w <= t)
            bad += testing::plan_products(mapping::map_layer(layer, mapping::Scheme::dense_kernel, t)) != all;
        ++n;
    }
    return {n >= 100 && bad == 0, fmt("%d random layers, %d mismatches", n, bad)};
}

// 3. Costs derived from one simulated scheme equal the constructed plans of
// every scheme.
Verdict cross_scheme() {
    std::mt19937_64 rng(77);
    int nets = 0, compared = 0, bad = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const auto net = testing::random_network(rng);
        for (int t : {4, 8, 16, 32})
            for (auto sim : mapping::all_schemes) {
                std::array<mapping::NetworkCost, 3> derived;
                try {
                    derived = mapping::derive_costs_cross_scheme(sim, net, t);
                } catch (const InvalidArgument&) {
                    continue;  // the simulated scheme itself cannot be placed
                }
                for (std::size_t i = 0; i < mapping::all_schemes.size(); ++i) {
                    const auto scheme = mapping::all_schemes[i];
                    if (!derived[i].total.feasible) {
                        bool threw = false;
                        try {
                            mapping::constructive_cost(net, scheme, t);
                        } catch (const InvalidArgument&) {
                            threw = true;
                        }
                        bad += !threw;
                    } else {
                        bad += !(derived[i] == mapping::constructive_cost(net, scheme, t));
                    }
                    ++compared;
                }
            }
        ++nets;
    }
    return {bad == 0 && compared >= 100,
            fmt("%d networks, %d derived reports, %d mismatches", nets, compared, bad)};
}

// 4. Noise-off fixture run matches the ideal network.
Verdict noise_off() {
    const auto& fx = testing::fixture();
    xbar::HardwareConfig cfg;
    cfg.device = xbar::DeviceModel::ideal();
    cfg.io = wide_io();
    const double ideal = qnet::ideal_accuracy(fx.net, fx.test);
    const auto batch = fx.test.features(0, fx.test.samples.size());
    const auto ref = qnet::ideal_forward(fx.net, batch);
    const auto ranges = xbar::calibrate_adc(fx.net, batch);
    bool ok = true;
    double worst = 0.0;
    std::string accs;
    for (auto scheme : mapping::all_schemes) {
        const double tsa = xbar::evaluate_accuracy(fx.net, scheme, cfg, fx.test, 0);
        ok = ok && tsa == ideal;
        accs += fmt("%s %.4f ", std::string(mapping::to_string(scheme)).c_str(), tsa);
        const auto hw = xbar::build_hardware(fx.net, scheme, cfg.tile_size, cfg.device, 0);
        worst = std::max(worst, max_rel_diff(xbar::simulate_forward(fx.net, hw, batch, cfg.io, ranges), ref));
    }
    ok = ok && worst <= 1e-6;
    return {ok, fmt("ideal %.4f; ", ideal) + accs + fmt("; max logit rel diff %.2e", worst)};
}

// 5. Device statistics over a million devices.
Verdict device_statistics() {
    mapping::MappingPlan plan;
    const int t = 128, tiles = 62;  // 1,015,808 devices
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
    const xbar::DeviceModel m;
    double n = 0, s_off = 0, ss_off = 0, s_on = 0, on = 0, off = 0;
    for (const auto& ta : xbar::sample_devices(0, plan, m))
        for (std::size_t i = 0; i < ta.r_off.size(); ++i) {
            n += 1;
            s_off += ta.r_off[i];
            ss_off += ta.r_off[i] * ta.r_off[i];
            s_on += ta.r_on[i];
            on += ta.state[i] == xbar::DeviceState::stuck_on;
            off += ta.state[i] == xbar::DeviceState::stuck_off;
        }
    const double mean_off = s_off / n, mean_on = s_on / n;
    const double sd_off = std::sqrt(ss_off / n - mean_off * mean_off);
    const double f_on = on / n, f_off = off / n;
    const bool ok = n >= 1e6 && std::abs(mean_off - 100e3) <= 0.01 * 100e3 &&
                    std::abs(sd_off - 10e3) <= 0.05 * 10e3 && std::abs(mean_on - 10e3) <= 0.01 * 10e3 &&
                    std::abs(f_on - 0.005) <= 0.001 && std::abs(f_off - 0.005) <= 0.001;
    return {ok, fmt("n %.0f; mean R_off %.1f, sd R_off %.1f, mean R_on %.1f, stuck on %.4f, off %.4f",
                    n, mean_off, sd_off, mean_on, f_on, f_off)};
}

// 6. Accuracy degrades monotonically with device faults.
Verdict degradation() {
    const auto& fx = testing::fixture();
    const auto median_tsa = [&](const xbar::DeviceModel& dev) {
        xbar::HardwareConfig cfg;
        cfg.device = dev;
        std::vector<double> v;
        for (std::uint64_t seed = 0; seed < 5; ++seed)
            v.push_back(xbar::evaluate_accuracy(fx.net, mapping::Scheme::sparse_staggered, cfg, fx.test, seed));
        std::sort(v.begin(), v.end());
        return v[2];
    };
    bool ok = true;
    std::string detail = "stuck";
    double prev = INFINITY;
    for (double p : {0.0, 0.02, 0.10}) {
        xbar::DeviceModel d;
        d.p_stuck_on = d.p_stuck_off = p;
        const double m = median_tsa(d);
        ok = ok && m <= prev;
        prev = m;
        detail += fmt(" %.2f:%.4f", p, m);
    }
    detail += "; states";
    prev = INFINITY;
    for (int s : {0, 16, 4, 2}) {
        xbar::DeviceModel d;
        d.n_states = s;
        const double m = median_tsa(d);
        ok = ok && m <= prev;
        prev = m;
        detail += s == 0 ? fmt(" inf:%.4f", m) : fmt(" %d:%.4f", s, m);
    }
    xbar::HardwareConfig dead;
    dead.device.p_stuck_on = 0.0;
    dead.device.p_stuck_off = 1.0;
    const double chance = xbar::evaluate_accuracy(fx.net, mapping::Scheme::sparse_staggered, dead, fx.test, 0);
    ok = ok && std::abs(chance - 0.25) <= 0.10;
    detail += fmt("; all stuck off %.4f", chance);
    return {ok, detail};
}

// 7. Score and normalization.
Verdict scoring() {
    const double s = dse::weighted_score(88.52, 2113536, 135616);
    const double oracle = 88.52 / (2113536.0 * 135616.0);
    bool ok = std::abs(s - oracle) <= 1e-9 * oracle && std::abs(s - 3.088e-10) <= 1e-3 * 3.088e-10;

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1e-9);
    for (int trial = 0; trial < 200 && ok; ++trial) {
        std::vector<double> v(2 + rng() % 30);
        for (auto& x : v) x = u(rng);
        const auto n = dse::min_max_normalize(v);
        const auto hi = std::max_element(v.begin(), v.end()) - v.begin();
        const auto lo = std::min_element(v.begin(), v.end()) - v.begin();
        ok = n[std::size_t(hi)] == 1.0 && n[std::size_t(lo)] == 0.0 &&
             std::max_element(n.begin(), n.end()) - n.begin() == hi;
    }
    return {ok, fmt("score %.6e (oracle %.6e, rtol 1e-9); 200 random normalizations", s, oracle)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

bool same_tree(const fs::path& a, const fs::path& b) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename().string());
    std::size_t count_b = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(b)) ++count_b;
    if (names.size() != count_b) return false;
    return std::all_of(names.begin(), names.end(),
                       [&](const auto& n) { return fs::exists(b / n) && slurp(a / n) == slurp(b / n); });
}

// 8. End-to-end tile x batch x scheme sweep through the CLI.
Verdict sweep() {
    std::ostringstream sink;
    const auto fx = testing::temp_dir("acceptance_fixture");
    if (cli::run({"fixture", "--out", fx.string()}, sink, sink) != 0) return {false, "fixture failed"};
    const auto cfg = (fx / "config.json").string();
    const int many = int(std::max(2u, std::thread::hardware_concurrency()));

    const auto run_dse = [&](const char* name, int jobs, double* secs) {
        const auto out = testing::temp_dir(name);
        const auto start = std::chrono::steady_clock::now();
        const int code = cli::run({"dse", "--config", cfg, "--out", out.string(), "--jobs",
                                   std::to_string(jobs), "--seed", "0"},
                                  sink, sink);
        if (secs) *secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (code != 0) throw Error("dse exited with " + std::to_string(code));
        return out;
    };
    double secs = 0.0;
    const auto a = run_dse("acceptance_dse_a", 1, &secs);
    const auto b = run_dse("acceptance_dse_b", 1, nullptr);
    const auto c = run_dse("acceptance_dse_c", many, nullptr);

    const auto results = report::parse_results_csv(slurp(a / "results.csv"));
    bool ok = results.size() == 12 && secs < 300.0;
    std::size_t grids = 0;
    for (const char* scheme : {"sparse_staggered", "dense_kernel"}) {
        const auto g = report::parse_contour_csv(
            slurp(a / (std::string("contour_tsa_tile_size_batch_size_scheme-") + scheme + ".csv")));
        ok = ok && g.x_labels.size() == 3 && g.y_labels.size() == 2 && g.missing_cells() == 0;
        ++grids;
    }
    const bool rerun = same_tree(a, b), parallel = same_tree(a, c);
    ok = ok && rerun && parallel;
    return {ok, fmt("%zu rows, %zu contours 3x2, %.1f s (limit 300), rerun %s, jobs 1 vs %d %s",
                    results.size(), grids, secs, rerun ? "identical" : "DIFFER", many,
                    parallel ? "identical" : "DIFFER")};
}

}  // namespace

int main() {
    report_line(1, "cost formulas on hand-evaluated cases", formulas);
    report_line(2, "mapping connectivity on random layers", connectivity);
    report_line(3, "cross-scheme costs equal constructed costs", cross_scheme);
    report_line(4, "noise-off fixture equals ideal", noise_off);
    report_line(5, "device statistics over 1e6 devices", device_statistics);
    report_line(6, "monotone degradation and chance floor", degradation);
    report_line(7, "weighted score and normalization", scoring);
    report_line(8, "tile x batch x scheme sweep", sweep);
    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
