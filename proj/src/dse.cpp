#include "rram/dse.hpp"

#include "rram/text.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace rram::dse {

EvaluationError::EvaluationError(Configuration config, const std::string& what)
    : Error(what), config_(std::move(config)) {}

BudgetExceeded::BudgetExceeded(std::size_t required, std::size_t budget)
    : Error("search space has " + std::to_string(required) + " configurations, budget is " +
            std::to_string(budget)),
      required_(required) {}

std::string dimension_label(const Configuration& c, std::string_view dim) {
    if (dim == "network") return c.network;
    if (dim == "scheme") return std::string(mapping::to_string(c.scheme));
    if (dim == "io_bit_width") return std::to_string(c.io_bit_width);
    if (dim == "tile_size") return std::to_string(c.tile_size);
    if (dim == "v_max") return text::format_double(c.v_max);
    if (dim == "p_stuck_on") return text::format_double(c.p_stuck_on);
    if (dim == "p_stuck_off") return text::format_double(c.p_stuck_off);
    if (dim == "n_states") return std::to_string(c.n_states);
    if (dim == "std_multiplier") return text::format_double(c.std_multiplier);
    if (dim == "batch_size") return std::to_string(c.batch_size);
    throw InvalidArgument("unknown dimension '" + std::string(dim) + "'");
}

namespace {

std::array<std::size_t, 10> extents(const SearchSpace& s) {
    return {s.networks.size(),   s.schemes.size(),     s.io_bit_widths.size(),
            s.tile_sizes.size(), s.v_max.size(),       s.p_stuck_on.size(),
            s.p_stuck_off.size(), s.n_states.size(),   s.std_multipliers.size(),
            s.batch_sizes.size()};
}

}  // namespace

void SearchSpace::validate() const {
    std::vector<std::string> problems;
    const auto ext = extents(*this);
    for (std::size_t d = 0; d < ext.size(); ++d)
        if (ext[d] == 0) problems.push_back("search." + std::string(dimension_names[d]) + ": empty");
    for (int b : io_bit_widths)
        if (b < 1 || b > xbar::IOConfig::max_bit_width)
            problems.push_back("search.io_bit_width: " + std::to_string(b) + " out of range");
    for (int t : tile_sizes)
        if (t < 2 || t % 2)
            problems.push_back("search.tile_size: " + std::to_string(t) + " must be even and >= 2");
    for (double v : v_max)
        if (!(v > 0.0)) problems.push_back("search.v_max: values must be > 0");
    for (double p : p_stuck_on)
        if (!(p >= 0.0 && p <= 1.0)) problems.push_back("search.p_stuck_on: outside [0, 1]");
    for (double p : p_stuck_off)
        if (!(p >= 0.0 && p <= 1.0)) problems.push_back("search.p_stuck_off: outside [0, 1]");
    for (double a : p_stuck_on)
        for (double b : p_stuck_off)
            if (a + b > 1.0) problems.push_back("search: p_stuck_on + p_stuck_off exceeds 1");
    for (int n : n_states)
        if (n < 0 || n == 1) problems.push_back("search.n_states: must be 0 or >= 2");
    for (double m : std_multipliers)
        if (!(m >= 0.0)) problems.push_back("search.std_multiplier: must be >= 0");
    for (int b : batch_sizes)
        if (b < 1) problems.push_back("search.batch_size: must be >= 1");
    try {
        auto probe = base_device;
        probe.p_stuck_on = probe.p_stuck_off = 0.0;
        probe.n_states = 0;
        probe.validate();
    } catch (const InvalidArgument& e) {
        problems.push_back(std::string("device: ") + e.what());
    }
    if (!problems.empty()) throw ConfigError(std::move(problems));
}

std::size_t SearchSpace::cardinality() const {
    std::size_t n = 1;
    for (auto e : extents(*this)) n *= e;
    return n;
}

Configuration SearchSpace::at(std::size_t index) const {
    if (index >= cardinality()) throw InvalidArgument("configuration index out of range");
    const auto ext = extents(*this);
    std::array<std::size_t, 10> digit{};
    for (std::size_t d = ext.size(); d-- > 0;) {
        digit[d] = index % ext[d];
        index /= ext[d];
    }
    Configuration c;
    c.network = networks[digit[0]];
    c.scheme = schemes[digit[1]];
    c.io_bit_width = io_bit_widths[digit[2]];
    c.tile_size = tile_sizes[digit[3]];
    c.v_max = v_max[digit[4]];
    c.p_stuck_on = p_stuck_on[digit[5]];
    c.p_stuck_off = p_stuck_off[digit[6]];
    c.n_states = n_states[digit[7]];
    c.std_multiplier = std_multipliers[digit[8]];
    c.batch_size = batch_sizes[digit[9]];
    return c;
}

xbar::HardwareConfig hardware_config(const SearchSpace& space, const Configuration& c) {
    xbar::HardwareConfig hc;
    hc.tile_size = c.tile_size;
    hc.io = {c.io_bit_width, c.v_max, c.batch_size};
    hc.device = space.base_device;
    hc.device.r_on_std *= c.std_multiplier;
    hc.device.r_off_std *= c.std_multiplier;
    hc.device.p_stuck_on = c.p_stuck_on;
    hc.device.p_stuck_off = c.p_stuck_off;
    hc.device.n_states = c.n_states;
    return hc;
}

double weighted_score(double tsa, std::int64_t rd, std::int64_t rwo, const ScoreWeights& w) {
    if (rd <= 0 || rwo <= 0) throw InvalidArgument("weighted score needs RD > 0 and RWO > 0");
    if (w.accuracy == 1.0 && w.devices == 1.0 && w.reads == 1.0)
        return tsa / (double(rd) * double(rwo));
    return std::pow(tsa, w.accuracy) / (std::pow(double(rd), w.devices) *
                                        std::pow(double(rwo), w.reads));
}

std::vector<double> min_max_normalize(std::span<const double> scores) {
    if (scores.empty()) return {};
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    const double min = *lo, span = *hi - *lo;
    std::vector<double> out(scores.size(), 1.0);
    if (span > 0.0)
        for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - min) / span;
    return out;
}

ConfigResult evaluate_configuration(const SearchSpace& space, std::size_t index,
                                    std::span<const NamedNetwork> networks,
                                    const qnet::Dataset& data, std::uint64_t seed,
                                    const ScoreWeights& weights) {
    const auto config = space.at(index);
    try {
        const auto it = std::find_if(networks.begin(), networks.end(),
                                     [&](const NamedNetwork& n) { return n.id == config.network; });
        if (it == networks.end()) throw InvalidArgument("unknown network '" + config.network + "'");
        const auto& net = it->net;

        ConfigResult r;
        r.index = index;
        r.config = config;
        r.seed = seed;
        r.tsa = xbar::evaluate_accuracy(net, config.scheme, hardware_config(space, config), data,
                                        seed);
        const auto costs = mapping::derive_costs_cross_scheme(config.scheme, net, config.tile_size);
        for (std::size_t s = 0; s < costs.size(); ++s) {
            const auto& total = costs[s].total;
            r.scheme_costs[s] = {costs[s].scheme, total.feasible, total.rd, total.tiles, total.rwo};
            if (costs[s].scheme == config.scheme) {
                r.rd = total.rd;
                r.tiles = total.tiles;
                r.rwo = total.rwo;
            }
        }
        r.raw_score = weighted_score(r.tsa, r.rd, r.rwo, weights);
        return r;
    } catch (const EvaluationError&) {
        throw;
    } catch (const std::exception& e) {
        std::string where;
        for (auto dim : dimension_names)
            where += std::string(where.empty() ? "" : ", ") + std::string(dim) + "=" +
                     dimension_label(config, dim);
        throw EvaluationError(config, "configuration #" + std::to_string(index) + " (" + where +
                                          "): " + e.what());
    }
}

std::vector<ConfigResult> grid_search(const SearchSpace& space,
                                      std::span<const NamedNetwork> networks,
                                      const qnet::Dataset& data, std::uint64_t seed,
                                      const GridOptions& options) {
    space.validate();
    const std::size_t n = space.cardinality();
    if (options.budget > 0 && n > options.budget) throw BudgetExceeded(n, options.budget);

    std::vector<std::optional<ConfigResult>> slots(n);
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::size_t error_index = n;
    std::exception_ptr error;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                slots[i] = evaluate_configuration(space, i, networks, data, seed, options.weights);
            } catch (...) {
                // Keep the lowest failing index so the report is schedule-independent.
                std::lock_guard lock(error_mutex);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
    };

    const int jobs = std::max(1, std::min<int>(options.jobs, int(n)));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);

    std::vector<ConfigResult> results;
    results.reserve(n);
    for (auto& s : slots) results.push_back(std::move(*s));
    std::vector<double> raw;
    for (const auto& r : results) raw.push_back(r.raw_score);
    const auto norm = min_max_normalize(raw);
    for (std::size_t i = 0; i < n; ++i) results[i].normalized_score = norm[i];
    return results;
}

double metric_value(const ConfigResult& r, std::string_view metric) {
    if (metric == "tsa") return r.tsa;
    if (metric == "rd") return double(r.rd);
    if (metric == "tiles") return double(r.tiles);
    if (metric == "rwo") return double(r.rwo);
    if (metric == "raw_score") return r.raw_score;
    if (metric == "normalized_score") return r.normalized_score;
    throw InvalidArgument("unknown metric '" + std::string(metric) + "'");
}

std::size_t ContourGrid::missing_cells() const {
    return std::size_t(std::count_if(values.begin(), values.end(),
                                     [](const auto& v) { return !v.has_value(); }));
}

ContourGrid contour_grid(std::span<const ConfigResult> results, std::string_view x_dim,
                         std::string_view y_dim, std::string_view metric,
                         const ResultFilter& filter) {
    if (x_dim == y_dim) throw InvalidArgument("contour axes must differ");
    const auto known = [](std::string_view d) {
        return std::find(dimension_names.begin(), dimension_names.end(), d) !=
               dimension_names.end();
    };
    if (!known(x_dim) || !known(y_dim)) throw InvalidArgument("unknown contour dimension");

    ContourGrid g;
    g.x_dim = x_dim;
    g.y_dim = y_dim;
    g.metric = metric;
    auto index_of = [](std::vector<std::string>& labels, const std::string& l) {
        auto it = std::find(labels.begin(), labels.end(), l);
        if (it == labels.end()) {
            labels.push_back(l);
            return labels.size() - 1;
        }
        return std::size_t(it - labels.begin());
    };
    for (const auto& r : results) {
        if (filter && !filter(r)) continue;
        index_of(g.x_labels, dimension_label(r.config, x_dim));
        index_of(g.y_labels, dimension_label(r.config, y_dim));
    }
    g.values.assign(g.x_labels.size() * g.y_labels.size(), std::nullopt);
    for (const auto& r : results) {
        if (filter && !filter(r)) continue;
        const auto xi = index_of(g.x_labels, dimension_label(r.config, x_dim));
        const auto yi = index_of(g.y_labels, dimension_label(r.config, y_dim));
        auto& cell = g.values[xi * g.y_labels.size() + yi];
        const double v = metric_value(r, metric);
        cell = cell ? std::max(*cell, v) : v;
    }
    return g;
}

std::vector<ConfigResult> rank(std::vector<ConfigResult> results) {
    std::sort(results.begin(), results.end(), [](const ConfigResult& a, const ConfigResult& b) {
        if (a.normalized_score != b.normalized_score) return a.normalized_score > b.normalized_score;
        if (a.rd != b.rd) return a.rd < b.rd;
        if (a.rwo != b.rwo) return a.rwo < b.rwo;
        return a.index < b.index;
    });
    return results;
}

}  // namespace rram::dse
