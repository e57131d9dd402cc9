#pragma once

#include "rram/dse.hpp"
#include "rram/mapping.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rram::report {

/// Generic CSV: leading `# key: value` comment lines, one header row,
/// then data rows. Fields never contain commas or quotes.
struct CsvTable {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column position by name; throws ParseError when absent.
    std::size_t column(std::string_view name) const;
    const std::string* meta_value(std::string_view key) const;
};

CsvTable parse_csv(std::string_view text);
std::string to_csv(const CsvTable& table);

/// One row per configuration, enumeration order.
std::string results_csv(std::span<const dse::ConfigResult> results, std::uint64_t seed);
/// Reads results.csv or ranking.csv (the leading rank column is ignored).
std::vector<dse::ConfigResult> parse_results_csv(std::string_view text);

/// results ranked with a leading 1-based rank column.
std::string ranking_csv(std::span<const dse::ConfigResult> ranked, std::uint64_t seed);

/// Rows are x labels, columns y labels; missing cells are written as NA.
std::string contour_csv(const dse::ContourGrid& grid, std::uint64_t seed);
dse::ContourGrid parse_contour_csv(std::string_view text);

/// Per-layer and total cost table of one scheme.
std::string cost_csv(const mapping::NetworkCost& cost, std::uint64_t seed);

/// Presentational heatmap of a contour grid.
std::string heatmap_svg(const dse::ContourGrid& grid);

}  // namespace rram::report
