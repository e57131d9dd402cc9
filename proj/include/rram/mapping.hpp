#pragma once

#include "rram/qnet.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rram::mapping {

/// The three hardware layouts. On linear layers `sparse_staggered` and
/// `dense_kernel` both place the plain differential matrix; `dense_routed`
/// reclaims zero-weight pairs by rerouting word lines per column.
enum class Scheme { sparse_staggered, dense_routed, dense_kernel };

inline constexpr std::array<Scheme, 3> all_schemes{Scheme::sparse_staggered, Scheme::dense_routed,
                                                   Scheme::dense_kernel};

std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view name);

struct ConvGeometry {
    int kernels = 1;   // K
    int kernel_h = 1;  // H
    int kernel_w = 1;  // W
    int in_x = 1;      // X
    int in_y = 1;      // Y
    int stride = 1;    // S
    int padding = 0;   // P
    int dilation = 1;  // D
    int channels = 1;
    bool one_d = false;

    static ConvGeometry from_layer(const qnet::LayerSpec& spec);

    int pad_y() const noexcept { return one_d ? 0 : padding; }
    int padded_x() const noexcept { return in_x + 2 * padding; }
    int padded_y() const noexcept { return in_y + 2 * pad_y(); }
    int out_x() const;
    int out_y() const;
    int output_positions() const { return out_x() * out_y(); }
    int kernel_rows() const noexcept { return channels * kernel_h * kernel_w; }

    void validate() const;
};

/// Exact rational in lowest terms, positive denominator.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static Rational make(std::int64_t num, std::int64_t den);
    bool integral() const noexcept { return den == 1; }
    std::int64_t floor() const noexcept;
    double value() const noexcept { return double(num) / double(den); }
    bool operator==(const Rational&) const = default;
};

/// K^2 * X * W * (X + 2P - D(H-1) - 1) / (S + 1), evaluated verbatim.
Rational devices_sparse_eq1(const ConvGeometry& g);
/// K * H * W.
std::int64_t devices_dense_eq2(const ConvGeometry& g);
/// (X + 2P - D(H-1) - 1) / (S + 1), evaluated verbatim.
Rational steps_dense_eq3(const ConvGeometry& g);

/// ceil(rows / t) * ceil(cols / t).
std::int64_t tile_count(std::int64_t rows, std::int64_t cols, int t);

enum class Layout { linear, staggered, kernel };

/// Rows are word lines (inputs), columns are logical outputs. Each cell
/// holds the flat index of the weight it carries, or -1 for a structural
/// zero (staggered layout only).
struct LogicalMatrix {
    Layout layout = Layout::linear;
    int rows = 0;
    int cols = 0;
    std::vector<std::int32_t> weight_index;
    std::optional<ConvGeometry> geometry;

    std::int32_t at(int row, int col) const {
        return weight_index[std::size_t(row) * std::size_t(cols) + std::size_t(col)];
    }
    std::size_t structural_nonzeros() const;
};

/// Linear layer with weights [out, in]: cell (i, o) carries weight o*in + i.
LogicalMatrix linear_matrix(int in_features, int out_features);

/// Toeplitz unrolling: one row per padded input element (channels stacked),
/// one column per (kernel, output position), each column a shifted kernel.
LogicalMatrix unroll_conv_staggered(const ConvGeometry& g);

/// Kernel matrix: rows are (c, h, w) within one receptive field, one column
/// per kernel. Output positions are produced by repeated reads.
LogicalMatrix conv_kernel_matrix(const ConvGeometry& g);

/// A differential column pair: column 2*pair carries the positive device,
/// 2*pair+1 the negative one. Physical row r is driven by logical row
/// row_map[r]; rows past row_map.size() are unused.
struct ColumnPair {
    int logical_col = 0;
    std::vector<int> row_map;

    bool operator==(const ColumnPair&) const = default;
};

struct Tile {
    int id = 0;
    std::vector<ColumnPair> pairs;

    bool operator==(const Tile&) const = default;
};

struct Placement {
    int logical_row = 0;
    int logical_col = 0;
    int tile = 0;  // index into MappingPlan::tiles
    int row = 0;
    int pair = 0;
};

struct MappingPlan {
    Scheme scheme = Scheme::sparse_staggered;
    int tile_size = 0;
    LogicalMatrix matrix;
    std::vector<Tile> tiles;

    int pairs_per_tile() const noexcept { return tile_size / 2; }

    /// Sliding-window reads per sample: the output-position count for the
    /// kernel layout, otherwise 1.
    int read_positions() const;
    /// Input activation feeding logical row on a given read, -1 for padding.
    int input_index(int read, int logical_row) const;
    int output_index(int read, int logical_col) const;
    int output_size() const;

    std::vector<Placement> placements() const;
    std::int64_t allocated_devices() const;

    /// Number of distinct row routings in a tile; each needs its own read.
    int routing_groups(const Tile& tile) const;

    /// Checks occupancy and uniqueness invariants. Throws ValidationError.
    void validate() const;
};

MappingPlan map_linear_sparse(const qnet::WeightTensor& weights, int t);
MappingPlan map_linear_dense(const qnet::WeightTensor& weights, int t);
MappingPlan map_conv_staggered(const ConvGeometry& g, const qnet::WeightTensor& weights, int t);
MappingPlan map_conv_dense(const ConvGeometry& g, const qnet::WeightTensor& weights, int t);
/// Kernel matrix with zero reclamation (the routed scheme applied to convs).
MappingPlan map_conv_routed(const ConvGeometry& g, const qnet::WeightTensor& weights, int t);

/// Dispatch on layer kind and scheme.
MappingPlan map_layer(const qnet::Layer& layer, Scheme scheme, int t);

/// Per-layer (or summed) cost. `rwo` counts read cycles per inference
/// sample with all tiles read in parallel; programming writes are separate.
struct CostReport {
    std::int64_t rd = 0;
    std::int64_t tiles = 0;
    std::int64_t rwo = 0;
    std::int64_t programming_writes = 0;

    bool has_eq = false;
    Rational eq1;
    std::int64_t eq2 = 0;
    Rational eq3;
    /// eq1 (floored) for the staggered scheme, eq2 for the dense ones.
    std::int64_t eq_formula_devices = 0;
    /// Inexact division in the formula relevant to the scheme (eq1 for
    /// staggered, eq3 for dense).
    bool remainder_flag = false;

    bool feasible = true;
    std::string note;

    CostReport& operator+=(const CostReport& other);
    bool operator==(const CostReport&) const = default;
};

CostReport cost(const MappingPlan& plan);

struct NetworkCost {
    Scheme scheme = Scheme::sparse_staggered;
    int tile_size = 0;
    std::vector<CostReport> layers;
    CostReport total;

    bool operator==(const NetworkCost&) const = default;
};

/// Builds every layer's plan and costs it.
NetworkCost constructive_cost(const qnet::QuantizedNetwork& net, Scheme scheme, int t);

/// Same numbers from layer geometry and zero counts alone. A layer that
/// cannot be placed under the scheme is reported with feasible = false.
NetworkCost analytic_cost(const qnet::QuantizedNetwork& net, Scheme scheme, int t);

/// Costs for all three schemes given one simulated scheme: the simulated
/// one is costed from its constructed plans, the others analytically.
/// Indexed in `all_schemes` order.
std::array<NetworkCost, 3> derive_costs_cross_scheme(Scheme simulated,
                                                     const qnet::QuantizedNetwork& net, int t);

}  // namespace rram::mapping
