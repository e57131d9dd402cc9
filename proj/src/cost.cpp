#include "rram/mapping.hpp"

#include "rram/error.hpp"

#include <algorithm>

namespace rram::mapping {

namespace {

Rational add(const Rational& a, const Rational& b) {
    return Rational::make(a.num * b.den + b.num * a.den, a.den * b.den);
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

void fill_equations(CostReport& r, const ConvGeometry& g, Scheme scheme) {
    r.has_eq = true;
    r.eq1 = devices_sparse_eq1(g);
    r.eq2 = devices_dense_eq2(g);
    r.eq3 = steps_dense_eq3(g);
    if (scheme == Scheme::sparse_staggered) {
        r.eq_formula_devices = r.eq1.floor();
        r.remainder_flag = !r.eq1.integral();
    } else {
        r.eq_formula_devices = r.eq2;
        r.remainder_flag = !r.eq3.integral();
    }
}

// Zero-reclaimed layout summary: devices, tiles and worst-case routings per
// tile, derived from each column's list of nonzero rows.
struct RoutedCounts {
    std::int64_t devices = 0;
    std::int64_t tiles = 0;
    int max_routings = 0;
};

RoutedCounts count_routed(const std::vector<std::vector<int>>& kept, int t) {
    const std::size_t per_tile = std::size_t(t) / 2;
    RoutedCounts rc;
    std::size_t segments = 0;
    for (const auto& k : kept) {
        rc.devices += 2 * std::int64_t(k.size());
        segments = std::max(segments, (k.size() + std::size_t(t) - 1) / std::size_t(t));
    }
    for (std::size_t j = 0; j < segments; ++j) {
        std::vector<std::vector<int>> slices;
        auto flush = [&] {
            if (slices.empty()) return;
            ++rc.tiles;
            std::sort(slices.begin(), slices.end());
            const auto distinct = std::unique(slices.begin(), slices.end()) - slices.begin();
            rc.max_routings = std::max(rc.max_routings, int(distinct));
            slices.clear();
        };
        for (const auto& k : kept) {
            const std::size_t begin = j * std::size_t(t);
            if (begin >= k.size()) continue;
            const std::size_t end = std::min(k.size(), begin + std::size_t(t));
            slices.emplace_back(k.begin() + std::ptrdiff_t(begin), k.begin() + std::ptrdiff_t(end));
            if (slices.size() == per_tile) flush();
        }
        flush();
    }
    return rc;
}

CostReport analytic_layer(const qnet::Layer& layer, Scheme scheme, int t) {
    if (t < 2 || t % 2) throw InvalidArgument("tile size must be even and >= 2");
    const auto& spec = layer.spec;
    const std::int64_t pairs = t / 2;
    CostReport r;

    std::int64_t rows = 0, cols = 0, reads = 1;
    std::optional<ConvGeometry> g;
    if (spec.is_conv()) {
        g = ConvGeometry::from_layer(spec);
        g->validate();
        if (scheme == Scheme::sparse_staggered) {
            rows = std::int64_t(g->channels) * g->padded_x() * g->padded_y();
            cols = std::int64_t(g->kernels) * g->output_positions();
        } else {
            rows = g->kernel_rows();
            cols = g->kernels;
            reads = g->output_positions();
        }
        fill_equations(r, *g, scheme);
    } else {
        rows = spec.in_features;
        cols = spec.out_features;
    }

    if (scheme != Scheme::dense_routed) {
        if (g && scheme == Scheme::dense_kernel && rows > t) {
            r.feasible = false;
            r.note = "kernel footprint " + std::to_string(rows) + " exceeds tile rows " +
                     std::to_string(t);
            return r;
        }
        r.rd = 2 * rows * cols;
        r.tiles = ceil_div(rows, t) * ceil_div(cols, pairs);
        r.rwo = reads;
    } else {
        // Column c of the matrix holds weight index c*rows + r for both the
        // kernel matrix ([K, C*H*W]) and the linear matrix ([out, in]).
        std::vector<std::vector<int>> kept(static_cast<std::size_t>(cols));
        for (std::int64_t c = 0; c < cols; ++c)
            for (std::int64_t row = 0; row < rows; ++row)
                if (layer.weights.codes[std::size_t(c * rows + row)] != 0)
                    kept[std::size_t(c)].push_back(int(row));
        const auto rc = count_routed(kept, t);
        r.rd = rc.devices;
        r.tiles = rc.tiles;
        r.rwo = rc.tiles ? reads * rc.max_routings : 0;
    }
    r.programming_writes = r.rd;
    return r;
}

}  // namespace

CostReport& CostReport::operator+=(const CostReport& o) {
    rd += o.rd;
    tiles += o.tiles;
    rwo += o.rwo;
    programming_writes += o.programming_writes;
    if (o.has_eq) {
        eq1 = has_eq ? add(eq1, o.eq1) : o.eq1;
        eq3 = has_eq ? add(eq3, o.eq3) : o.eq3;
        eq2 += o.eq2;
        eq_formula_devices += o.eq_formula_devices;
        has_eq = true;
    }
    remainder_flag = remainder_flag || o.remainder_flag;
    feasible = feasible && o.feasible;
    if (!o.note.empty()) note += (note.empty() ? "" : "; ") + o.note;
    return *this;
}

CostReport cost(const MappingPlan& plan) {
    CostReport r;
    r.rd = plan.allocated_devices();
    r.tiles = std::int64_t(plan.tiles.size());
    int routings = 0;
    for (const auto& t : plan.tiles) routings = std::max(routings, plan.routing_groups(t));
    r.rwo = std::int64_t(plan.read_positions()) * routings;
    r.programming_writes = r.rd;
    if (plan.matrix.geometry) fill_equations(r, *plan.matrix.geometry, plan.scheme);
    return r;
}

NetworkCost constructive_cost(const qnet::QuantizedNetwork& net, Scheme scheme, int t) {
    NetworkCost nc;
    nc.scheme = scheme;
    nc.tile_size = t;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        try {
            nc.layers.push_back(cost(map_layer(net.layers[i], scheme, t)));
        } catch (const InvalidArgument& e) {
            throw InvalidArgument("layer " + std::to_string(i) + ": " + e.what());
        }
        nc.total += nc.layers.back();
    }
    return nc;
}

NetworkCost analytic_cost(const qnet::QuantizedNetwork& net, Scheme scheme, int t) {
    NetworkCost nc;
    nc.scheme = scheme;
    nc.tile_size = t;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        auto r = analytic_layer(net.layers[i], scheme, t);
        if (!r.feasible) r.note = "layer " + std::to_string(i) + ": " + r.note;
        nc.total += r;
        nc.layers.push_back(std::move(r));
    }
    return nc;
}

std::array<NetworkCost, 3> derive_costs_cross_scheme(Scheme simulated,
                                                     const qnet::QuantizedNetwork& net, int t) {
    std::array<NetworkCost, 3> out;
    for (std::size_t i = 0; i < all_schemes.size(); ++i)
        out[i] = all_schemes[i] == simulated ? constructive_cost(net, all_schemes[i], t)
                                             : analytic_cost(net, all_schemes[i], t);
    return out;
}

}  // namespace rram::mapping
