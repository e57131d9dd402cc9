#pragma once

#include "rram/dse.hpp"
#include "rram/mapping.hpp"
#include "rram/xbar.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace rram::cli {

struct NetworkRef {
    std::string id;
    std::filesystem::path path;
};

struct ContourSpec {
    std::string x = "tile_size";
    std::string y = "batch_size";
    std::string metric = "tsa";
    /// One grid per value of this dimension; empty collapses everything.
    std::string split = "scheme";
};

/// Everything a run needs, with defaults filled in. Paths are absolute
/// after loading (relative ones resolve against the config file).
struct RunConfig {
    std::uint64_t seed = 0;
    std::vector<NetworkRef> networks;
    std::filesystem::path dataset;
    xbar::DeviceModel device;
    xbar::IOConfig io;
    mapping::Scheme scheme = mapping::Scheme::sparse_staggered;
    int tile_size = 64;
    double std_multiplier = 1.0;

    /// Single-valued dimensions default to the scalar fields above.
    dse::SearchSpace search;
    std::size_t budget = 1000;
    int jobs = 1;
    std::vector<ContourSpec> contours{ContourSpec{}};
    bool heatmaps = false;
};

/// Parses and validates a config document. Every problem found is listed
/// in the thrown ConfigError.
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Fully materialized config, suitable for parse_run_config.
std::string run_config_to_json(const RunConfig& config);

/// Entry point shared by the executable and the tests. args excludes the
/// program name. Returns 0 on success, 1 on runtime failure, 2 on usage or
/// configuration errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rram::cli
