#include "rram/mapping.hpp"

#include "rram/error.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace rram::mapping {

std::string_view to_string(Scheme scheme) {
    switch (scheme) {
        case Scheme::sparse_staggered: return "sparse_staggered";
        case Scheme::dense_routed: return "dense_routed";
        case Scheme::dense_kernel: return "dense_kernel";
    }
    return "?";
}

Scheme parse_scheme(std::string_view name) {
    if (name == "sparse_staggered" || name == "staggered" || name == "sparse")
        return Scheme::sparse_staggered;
    if (name == "dense_routed" || name == "routed") return Scheme::dense_routed;
    if (name == "dense_kernel" || name == "kernel") return Scheme::dense_kernel;
    throw InvalidArgument("unknown mapping scheme '" + std::string(name) +
                          "' (expected sparse_staggered, dense_routed or dense_kernel)");
}

ConvGeometry ConvGeometry::from_layer(const qnet::LayerSpec& spec) {
    if (!spec.is_conv()) throw InvalidArgument("layer is not a convolution");
    ConvGeometry g;
    g.kernels = spec.out_kernels;
    g.kernel_h = spec.kernel_h;
    g.kernel_w = spec.kernel_w;
    g.in_x = spec.in_x;
    g.in_y = spec.in_y;
    g.stride = spec.stride;
    g.padding = spec.padding;
    g.dilation = spec.dilation;
    g.channels = spec.in_channels;
    g.one_d = spec.kind == qnet::LayerKind::conv1d;
    return g;
}

int ConvGeometry::out_x() const {
    return qnet::conv_output_extent(in_x, kernel_h, stride, padding, dilation);
}

int ConvGeometry::out_y() const {
    return qnet::conv_output_extent(in_y, kernel_w, stride, pad_y(), dilation);
}

void ConvGeometry::validate() const {
    if (kernels < 1 || kernel_h < 1 || kernel_w < 1 || stride < 1 || dilation < 1 ||
        channels < 1 || in_x < 1 || in_y < 1 || padding < 0)
        throw InvalidArgument("invalid conv geometry");
    if (one_d && (kernel_w != 1 || in_y != 1))
        throw InvalidArgument("1-d convolution requires W = 1 and Y = 1");
    (void)out_x();
    (void)out_y();
}

Rational Rational::make(std::int64_t num, std::int64_t den) {
    if (den == 0) throw InvalidArgument("zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const auto g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    if (num == 0) den = 1;
    return {num, den};
}

std::int64_t Rational::floor() const noexcept {
    auto q = num / den;
    if (num % den != 0 && num < 0) --q;
    return q;
}

namespace {

std::int64_t sliding_span(const ConvGeometry& g) {
    return std::int64_t(g.in_x) + 2 * std::int64_t(g.padding) -
           std::int64_t(g.dilation) * (g.kernel_h - 1) - 1;
}

}  // namespace

Rational devices_sparse_eq1(const ConvGeometry& g) {
    const std::int64_t K = g.kernels;
    return Rational::make(K * K * g.in_x * g.kernel_w * sliding_span(g),
                          std::int64_t(g.stride) + 1);
}

std::int64_t devices_dense_eq2(const ConvGeometry& g) {
    return std::int64_t(g.kernels) * g.kernel_h * g.kernel_w;
}

Rational steps_dense_eq3(const ConvGeometry& g) {
    return Rational::make(sliding_span(g), std::int64_t(g.stride) + 1);
}

std::int64_t tile_count(std::int64_t rows, std::int64_t cols, int t) {
    if (rows < 1 || cols < 1 || t < 1) throw InvalidArgument("tile_count needs positive inputs");
    return ((rows + t - 1) / t) * ((cols + t - 1) / t);
}

std::size_t LogicalMatrix::structural_nonzeros() const {
    return static_cast<std::size_t>(
        std::count_if(weight_index.begin(), weight_index.end(), [](auto i) { return i >= 0; }));
}

LogicalMatrix linear_matrix(int in_features, int out_features) {
    if (in_features < 1 || out_features < 1) throw InvalidArgument("empty linear layer");
    LogicalMatrix m;
    m.layout = Layout::linear;
    m.rows = in_features;
    m.cols = out_features;
    m.weight_index.resize(std::size_t(in_features) * out_features);
    for (int i = 0; i < in_features; ++i)
        for (int o = 0; o < out_features; ++o)
            m.weight_index[std::size_t(i) * out_features + o] = o * in_features + i;
    return m;
}

LogicalMatrix unroll_conv_staggered(const ConvGeometry& g) {
    g.validate();
    const int Xp = g.padded_x(), Yp = g.padded_y();
    const int OX = g.out_x(), OY = g.out_y();
    LogicalMatrix m;
    m.layout = Layout::staggered;
    m.geometry = g;
    m.rows = g.channels * Xp * Yp;
    m.cols = g.kernels * OX * OY;
    m.weight_index.assign(std::size_t(m.rows) * m.cols, -1);
    for (int k = 0; k < g.kernels; ++k)
        for (int ox = 0; ox < OX; ++ox)
            for (int oy = 0; oy < OY; ++oy) {
                const int col = (k * OX + ox) * OY + oy;
                for (int c = 0; c < g.channels; ++c)
                    for (int h = 0; h < g.kernel_h; ++h)
                        for (int w = 0; w < g.kernel_w; ++w) {
                            const int xp = ox * g.stride + h * g.dilation;
                            const int yp = oy * g.stride + w * g.dilation;
                            const int row = (c * Xp + xp) * Yp + yp;
                            m.weight_index[std::size_t(row) * m.cols + col] =
                                ((k * g.channels + c) * g.kernel_h + h) * g.kernel_w + w;
                        }
            }
    return m;
}

LogicalMatrix conv_kernel_matrix(const ConvGeometry& g) {
    g.validate();
    LogicalMatrix m;
    m.layout = Layout::kernel;
    m.geometry = g;
    m.rows = g.kernel_rows();
    m.cols = g.kernels;
    m.weight_index.resize(std::size_t(m.rows) * m.cols);
    for (int r = 0; r < m.rows; ++r)
        for (int k = 0; k < m.cols; ++k) m.weight_index[std::size_t(r) * m.cols + k] = k * m.rows + r;
    return m;
}

int MappingPlan::read_positions() const {
    if (matrix.layout == Layout::kernel) return matrix.geometry->output_positions();
    return 1;
}

int MappingPlan::input_index(int read, int logical_row) const {
    switch (matrix.layout) {
        case Layout::linear: return logical_row;
        case Layout::staggered: {
            const auto& g = *matrix.geometry;
            const int Xp = g.padded_x(), Yp = g.padded_y();
            const int c = logical_row / (Xp * Yp);
            const int xp = (logical_row / Yp) % Xp;
            const int yp = logical_row % Yp;
            const int ix = xp - g.padding, iy = yp - g.pad_y();
            if (ix < 0 || ix >= g.in_x || iy < 0 || iy >= g.in_y) return -1;
            return (c * g.in_x + ix) * g.in_y + iy;
        }
        case Layout::kernel: {
            const auto& g = *matrix.geometry;
            const int OY = g.out_y();
            const int ox = read / OY, oy = read % OY;
            const int hw = g.kernel_h * g.kernel_w;
            const int c = logical_row / hw;
            const int h = (logical_row / g.kernel_w) % g.kernel_h;
            const int w = logical_row % g.kernel_w;
            const int ix = ox * g.stride + h * g.dilation - g.padding;
            const int iy = oy * g.stride + w * g.dilation - g.pad_y();
            if (ix < 0 || ix >= g.in_x || iy < 0 || iy >= g.in_y) return -1;
            return (c * g.in_x + ix) * g.in_y + iy;
        }
    }
    return -1;
}

int MappingPlan::output_index(int read, int logical_col) const {
    if (matrix.layout != Layout::kernel) return logical_col;
    return logical_col * read_positions() + read;
}

int MappingPlan::output_size() const {
    return matrix.layout == Layout::kernel ? matrix.cols * read_positions() : matrix.cols;
}

std::vector<Placement> MappingPlan::placements() const {
    std::vector<Placement> out;
    for (std::size_t ti = 0; ti < tiles.size(); ++ti)
        for (std::size_t p = 0; p < tiles[ti].pairs.size(); ++p) {
            const auto& pair = tiles[ti].pairs[p];
            for (std::size_t r = 0; r < pair.row_map.size(); ++r)
                out.push_back({pair.row_map[r], pair.logical_col, int(ti), int(r), int(p)});
        }
    return out;
}

std::int64_t MappingPlan::allocated_devices() const {
    std::int64_t n = 0;
    for (const auto& t : tiles)
        for (const auto& p : t.pairs) n += 2 * std::int64_t(p.row_map.size());
    return n;
}

int MappingPlan::routing_groups(const Tile& tile) const {
    std::vector<const std::vector<int>*> seen;
    for (const auto& p : tile.pairs) {
        const bool dup = std::any_of(seen.begin(), seen.end(),
                                     [&](const std::vector<int>* s) { return *s == p.row_map; });
        if (!dup) seen.push_back(&p.row_map);
    }
    return int(seen.size());
}

void MappingPlan::validate() const {
    if (tile_size < 2 || tile_size % 2) throw ValidationError("tile size must be even and >= 2");
    std::vector<char> used(std::size_t(matrix.rows) * matrix.cols, 0);
    for (std::size_t ti = 0; ti < tiles.size(); ++ti) {
        const auto& t = tiles[ti];
        if (int(t.pairs.size()) > pairs_per_tile())
            throw ValidationError("tile " + std::to_string(ti) + " holds too many column pairs");
        for (const auto& p : t.pairs) {
            if (int(p.row_map.size()) > tile_size)
                throw ValidationError("tile " + std::to_string(ti) + " column exceeds tile rows");
            if (p.logical_col < 0 || p.logical_col >= matrix.cols)
                throw ValidationError("logical column out of range");
            for (int r : p.row_map) {
                if (r < 0 || r >= matrix.rows) throw ValidationError("logical row out of range");
                auto& u = used[std::size_t(r) * matrix.cols + p.logical_col];
                if (u)
                    throw ValidationError("logical cell (" + std::to_string(r) + ", " +
                                          std::to_string(p.logical_col) + ") placed twice");
                u = 1;
            }
        }
    }
    if (scheme != Scheme::dense_routed &&
        std::find(used.begin(), used.end(), 0) != used.end())
        throw ValidationError("unrouted plan leaves logical cells unplaced");
}

namespace {

void check_tile_size(int t) {
    if (t < 2) throw InvalidArgument("tile size must be >= 2 to hold a differential pair");
    if (t % 2) throw InvalidArgument("tile size must be even");
}

// Row-block-major grid over the full matrix; zeros keep their devices.
MappingPlan place_full(LogicalMatrix matrix, Scheme scheme, int t) {
    check_tile_size(t);
    MappingPlan plan;
    plan.scheme = scheme;
    plan.tile_size = t;
    const int per_tile = t / 2;
    const int row_blocks = (matrix.rows + t - 1) / t;
    const int col_blocks = (matrix.cols + per_tile - 1) / per_tile;
    for (int rb = 0; rb < row_blocks; ++rb) {
        std::vector<int> rows;
        for (int r = rb * t; r < std::min(matrix.rows, (rb + 1) * t); ++r) rows.push_back(r);
        for (int cb = 0; cb < col_blocks; ++cb) {
            Tile tile;
            tile.id = int(plan.tiles.size());
            for (int c = cb * per_tile; c < std::min(matrix.cols, (cb + 1) * per_tile); ++c)
                tile.pairs.push_back({c, rows});
            plan.tiles.push_back(std::move(tile));
        }
    }
    plan.matrix = std::move(matrix);
    return plan;
}

// Greedy zero reclamation: each column keeps only its nonzero rows, packed
// from physical row 0 in t-row segments. Segment j of every column that has
// one is packed into tiles t/2 pairs at a time, in column order.
MappingPlan place_compacted(LogicalMatrix matrix, const qnet::WeightTensor& weights, int t) {
    check_tile_size(t);
    const int per_tile = t / 2;
    std::vector<std::vector<int>> kept(std::size_t(matrix.cols));
    for (int c = 0; c < matrix.cols; ++c)
        for (int r = 0; r < matrix.rows; ++r) {
            const auto wi = matrix.at(r, c);
            if (wi >= 0 && weights.codes[std::size_t(wi)] != 0) kept[c].push_back(r);
        }
    std::size_t segments = 0;
    for (const auto& k : kept) segments = std::max(segments, (k.size() + t - 1) / std::size_t(t));

    MappingPlan plan;
    plan.scheme = Scheme::dense_routed;
    plan.tile_size = t;
    for (std::size_t j = 0; j < segments; ++j) {
        Tile tile;
        for (int c = 0; c < matrix.cols; ++c) {
            const auto& k = kept[c];
            const std::size_t begin = j * std::size_t(t);
            if (begin >= k.size()) continue;
            const std::size_t end = std::min(k.size(), begin + std::size_t(t));
            tile.pairs.push_back({c, std::vector<int>(k.begin() + std::ptrdiff_t(begin),
                                                      k.begin() + std::ptrdiff_t(end))});
            if (int(tile.pairs.size()) == per_tile) {
                tile.id = int(plan.tiles.size());
                plan.tiles.push_back(std::move(tile));
                tile = {};
            }
        }
        if (!tile.pairs.empty()) {
            tile.id = int(plan.tiles.size());
            plan.tiles.push_back(std::move(tile));
        }
    }
    plan.matrix = std::move(matrix);
    return plan;
}

const qnet::WeightTensor& require_2d(const qnet::WeightTensor& w) {
    if (w.shape.size() != 2 || w.shape[0] == 0 || w.shape[1] == 0)
        throw InvalidArgument("linear mapping needs a 2-D weight tensor [out, in]");
    if (w.codes.size() != w.shape[0] * w.shape[1]) throw InvalidArgument("codes/shape mismatch");
    return w;
}

void check_conv_weights(const ConvGeometry& g, const qnet::WeightTensor& w) {
    if (w.codes.size() != std::size_t(g.kernels) * std::size_t(g.kernel_rows()))
        throw InvalidArgument("conv weight count does not match geometry");
}

}  // namespace

MappingPlan map_linear_sparse(const qnet::WeightTensor& weights, int t) {
    check_tile_size(t);
    const auto& w = require_2d(weights);
    return place_full(linear_matrix(int(w.shape[1]), int(w.shape[0])), Scheme::sparse_staggered,
                      t);
}

MappingPlan map_linear_dense(const qnet::WeightTensor& weights, int t) {
    check_tile_size(t);
    const auto& w = require_2d(weights);
    return place_compacted(linear_matrix(int(w.shape[1]), int(w.shape[0])), w, t);
}

MappingPlan map_conv_staggered(const ConvGeometry& g, const qnet::WeightTensor& weights, int t) {
    check_tile_size(t);
    check_conv_weights(g, weights);
    return place_full(unroll_conv_staggered(g), Scheme::sparse_staggered, t);
}

MappingPlan map_conv_dense(const ConvGeometry& g, const qnet::WeightTensor& weights, int t) {
    check_tile_size(t);
    check_conv_weights(g, weights);
    if (g.kernel_rows() > t)
        throw InvalidArgument("kernel footprint " + std::to_string(g.kernel_rows()) +
                              " (C*H*W) exceeds tile rows " + std::to_string(t));
    return place_full(conv_kernel_matrix(g), Scheme::dense_kernel, t);
}

MappingPlan map_conv_routed(const ConvGeometry& g, const qnet::WeightTensor& weights, int t) {
    check_tile_size(t);
    check_conv_weights(g, weights);
    return place_compacted(conv_kernel_matrix(g), weights, t);
}

MappingPlan map_layer(const qnet::Layer& layer, Scheme scheme, int t) {
    if (!layer.spec.is_conv()) {
        if (scheme == Scheme::dense_routed) return map_linear_dense(layer.weights, t);
        auto plan = map_linear_sparse(layer.weights, t);
        plan.scheme = scheme;
        return plan;
    }
    const auto g = ConvGeometry::from_layer(layer.spec);
    switch (scheme) {
        case Scheme::sparse_staggered: return map_conv_staggered(g, layer.weights, t);
        case Scheme::dense_routed: return map_conv_routed(g, layer.weights, t);
        case Scheme::dense_kernel: return map_conv_dense(g, layer.weights, t);
    }
    throw InvalidArgument("unknown scheme");
}

}  // namespace rram::mapping
