#pragma once

#include "rram/mapping.hpp"
#include "rram/qnet.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

namespace testing {

using Triple = std::array<int, 3>;  // input index, weight index, output index

// Random layer with propagated input extents and random codes, roughly a
// third of them zero. conv1d layers get in_y = 1.
rram::qnet::Layer random_layer(std::mt19937_64& rng, int bit_width = 8);

// Small random network: up to two conv layers then a linear head.
rram::qnet::QuantizedNetwork random_network(std::mt19937_64& rng);

// Every (input, weight, output) product of the layer by direct definition,
// sorted. With skip_zero_codes, products of zero-coded weights are dropped.
std::vector<Triple> brute_force_products(const rram::qnet::Layer& layer, bool skip_zero_codes);

// Same products as carried by a plan's devices, sorted.
std::vector<Triple> plan_products(const rram::mapping::MappingPlan& plan);

// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

// Trained once per process.
const rram::qnet::Fixture& fixture();

}  // namespace testing

namespace testing {

// Hand-evaluated cost formula cases. span = X + 2P - D(H-1) - 1;
// eq1 = K^2 X W span / (S+1), eq3 = span / (S+1), eq2 = K H W.
struct EqCase {
    int k, h, w, x, s, p, d;
    std::int64_t eq1_floor;
    bool eq1_exact;
    std::int64_t eq2;
    std::int64_t eq3_floor;
    bool eq3_exact;
};

inline constexpr EqCase eq_cases[] = {
    // k  h  w   x  s  p  d      eq1  exact  eq2  eq3  exact
    {1, 3, 1, 5, 1, 0, 1, 5, true, 3, 1, true},
    {1, 3, 1, 3, 1, 0, 1, 0, true, 3, 0, true},
    {2, 1, 1, 4, 0, 0, 1, 48, true, 2, 3, true},
    {64, 3, 3, 32, 1, 1, 1, 6094848, true, 576, 15, false},
    {512, 3, 3, 4, 1, 1, 1, 4718592, true, 4608, 1, false},
    {1, 1, 1, 1, 1, 0, 1, 0, true, 1, 0, true},
    {3, 3, 3, 8, 2, 1, 1, 504, true, 27, 2, false},
    {2, 5, 5, 10, 1, 2, 1, 900, true, 50, 4, false},
    {4, 3, 3, 7, 1, 0, 2, 336, true, 36, 1, true},
    {1, 2, 2, 6, 3, 0, 1, 12, true, 4, 1, true},
    {5, 1, 1, 9, 1, 0, 1, 900, true, 5, 4, true},
    {3, 3, 1, 6, 1, 0, 1, 81, true, 9, 1, false},
    {1, 3, 3, 5, 2, 1, 1, 20, true, 9, 1, false},
    {7, 3, 3, 9, 1, 1, 1, 5292, true, 63, 4, true},
    {2, 3, 3, 5, 4, 0, 1, 24, true, 18, 0, false},
    {1, 3, 1, 4, 1, 0, 1, 2, true, 3, 0, false},
    {3, 2, 1, 5, 1, 0, 3, 22, false, 6, 0, false},
    {6, 1, 1, 3, 2, 1, 1, 144, true, 6, 1, false},
    {1, 5, 5, 32, 1, 2, 1, 2480, true, 25, 15, false},
    {10, 3, 3, 28, 1, 0, 1, 105000, true, 90, 12, false},
    {3, 3, 3, 7, 2, 0, 1, 252, true, 27, 1, false},
    {1, 3, 1, 5, 1, 1, 1, 10, true, 3, 2, true},
    {2, 3, 1, 5, 2, 0, 1, 13, false, 6, 0, false},
};

inline rram::mapping::ConvGeometry eq_geometry(const EqCase& c) {
    rram::mapping::ConvGeometry g;
    g.kernels = c.k;
    g.kernel_h = c.h;
    g.kernel_w = c.w;
    g.in_x = c.x;
    g.in_y = c.x;
    g.stride = c.s;
    g.padding = c.p;
    g.dilation = c.d;
    return g;
}

}  // namespace testing
