#pragma once

#include "rram/error.hpp"
#include "rram/mapping.hpp"
#include "rram/qnet.hpp"
#include "rram/xbar.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rram::dse {

/// One point of the search space.
struct Configuration {
    std::string network;
    mapping::Scheme scheme = mapping::Scheme::sparse_staggered;
    int io_bit_width = 8;
    int tile_size = 64;
    double v_max = 0.3;
    double p_stuck_on = 0.005;
    double p_stuck_off = 0.005;
    int n_states = 0;
    double std_multiplier = 1.0;
    int batch_size = 256;

    bool operator==(const Configuration&) const = default;
};

/// Dimension order used for lexicographic enumeration (last varies fastest).
inline constexpr std::array<std::string_view, 10> dimension_names{
    "network",     "scheme",  "io_bit_width",   "tile_size", "v_max", "p_stuck_on",
    "p_stuck_off", "n_states", "std_multiplier", "batch_size"};

/// Text form of one dimension's value, as written to CSV.
std::string dimension_label(const Configuration& config, std::string_view dimension);

struct SearchSpace {
    std::vector<std::string> networks;
    std::vector<mapping::Scheme> schemes;
    std::vector<int> io_bit_widths;
    std::vector<int> tile_sizes;
    std::vector<double> v_max;
    std::vector<double> p_stuck_on;
    std::vector<double> p_stuck_off;
    std::vector<int> n_states;
    std::vector<double> std_multipliers;
    std::vector<int> batch_sizes;

    /// Resistance means and standard deviations before std_multiplier.
    xbar::DeviceModel base_device;

    /// Throws ConfigError listing every empty or out-of-range dimension.
    void validate() const;
    std::size_t cardinality() const;
    Configuration at(std::size_t index) const;
};

xbar::HardwareConfig hardware_config(const SearchSpace& space, const Configuration& config);

/// Exponents of TSA^a / (RD^b * RWO^c). The default is the plain ratio.
struct ScoreWeights {
    double accuracy = 1.0;
    double devices = 1.0;
    double reads = 1.0;
};

double weighted_score(double tsa, std::int64_t rd, std::int64_t rwo, const ScoreWeights& w = {});

/// (s - min) / (max - min); a list with no spread maps to all 1.0.
std::vector<double> min_max_normalize(std::span<const double> scores);

struct SchemeCost {
    mapping::Scheme scheme = mapping::Scheme::sparse_staggered;
    bool feasible = true;
    std::int64_t rd = 0;
    std::int64_t tiles = 0;
    std::int64_t rwo = 0;

    bool operator==(const SchemeCost&) const = default;
};

struct ConfigResult {
    std::size_t index = 0;
    Configuration config;
    double tsa = 0.0;
    std::int64_t rd = 0;
    std::int64_t tiles = 0;
    std::int64_t rwo = 0;
    double raw_score = 0.0;
    double normalized_score = 0.0;
    std::uint64_t seed = 0;
    /// Costs of the same network under every scheme, `all_schemes` order.
    std::array<SchemeCost, 3> scheme_costs{};

    bool operator==(const ConfigResult&) const = default;
};

struct NamedNetwork {
    std::string id;
    qnet::QuantizedNetwork net;
};

struct GridOptions {
    int jobs = 1;
    /// Maximum number of configurations; 0 means unlimited.
    std::size_t budget = 0;
    ScoreWeights weights;
};

/// Raised when a configuration fails; carries the offending point.
class EvaluationError : public Error {
public:
    EvaluationError(Configuration config, const std::string& what);
    const Configuration& config() const noexcept { return config_; }

private:
    Configuration config_;
};

class BudgetExceeded : public Error {
public:
    BudgetExceeded(std::size_t required, std::size_t budget);
    std::size_t required() const noexcept { return required_; }

private:
    std::size_t required_;
};

/// Scores one configuration; normalized_score is left at 0.
ConfigResult evaluate_configuration(const SearchSpace& space, std::size_t index,
                                    std::span<const NamedNetwork> networks,
                                    const qnet::Dataset& data, std::uint64_t seed,
                                    const ScoreWeights& weights = {});

/// Evaluates every configuration once and min-max normalizes the scores.
/// The result order is the enumeration order whatever `jobs` is.
std::vector<ConfigResult> grid_search(const SearchSpace& space,
                                      std::span<const NamedNetwork> networks,
                                      const qnet::Dataset& data, std::uint64_t seed,
                                      const GridOptions& options = {});

/// Metric names: tsa, rd, tiles, rwo, raw_score, normalized_score.
double metric_value(const ConfigResult& result, std::string_view metric);

/// Metric over two dimensions. Other dimensions collapse with max. Cells no
/// result covers stay empty (missing).
struct ContourGrid {
    std::string x_dim;
    std::string y_dim;
    std::string metric;
    std::vector<std::string> x_labels;
    std::vector<std::string> y_labels;
    std::vector<std::optional<double>> values;  // x-major

    const std::optional<double>& at(std::size_t xi, std::size_t yi) const {
        return values[xi * y_labels.size() + yi];
    }
    std::size_t missing_cells() const;
};

using ResultFilter = std::function<bool(const ConfigResult&)>;

ContourGrid contour_grid(std::span<const ConfigResult> results, std::string_view x_dim,
                         std::string_view y_dim, std::string_view metric,
                         const ResultFilter& filter = {});

/// Descending normalized score; ties by smaller RD, smaller RWO, then
/// enumeration index.
std::vector<ConfigResult> rank(std::vector<ConfigResult> results);

}  // namespace rram::dse
