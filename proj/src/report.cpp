#include "rram/report.hpp"

#include "rram/error.hpp"
#include "rram/text.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rram::report {

using text::format_double;

std::size_t CsvTable::column(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError("csv: missing column '" + std::string(name) + "'");
    return std::size_t(it - header.begin());
}

const std::string* CsvTable::meta_value(std::string_view key) const {
    for (const auto& [k, v] : meta)
        if (k == key) return &v;
    return nullptr;
}

CsvTable parse_csv(std::string_view text) {
    CsvTable t;
    bool have_header = false;
    std::size_t line_no = 0;
    for (auto line : text::lines(text)) {
        ++line_no;
        if (!have_header && line.starts_with("#")) {
            line.remove_prefix(1);
            const auto colon = line.find(':');
            if (colon == std::string_view::npos)
                throw ParseError("csv line " + std::to_string(line_no) + ": comment without key");
            t.meta.emplace_back(std::string(text::trim(line.substr(0, colon))),
                                std::string(text::trim(line.substr(colon + 1))));
            continue;
        }
        std::vector<std::string> fields;
        for (auto f : text::split(line, ',')) fields.emplace_back(text::trim(f));
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size())
            throw ParseError("csv line " + std::to_string(line_no) + ": expected " +
                             std::to_string(t.header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
    }
    if (!have_header) throw ParseError("csv: missing header row");
    return t;
}

std::string to_csv(const CsvTable& t) {
    std::string out;
    for (const auto& [k, v] : t.meta) out += "# " + k + ": " + v + "\n";
    auto row = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out += ',';
            out += fields[i];
        }
        out += '\n';
    };
    row(t.header);
    for (const auto& r : t.rows) row(r);
    return out;
}

namespace {

const std::vector<std::string>& result_columns() {
    static const std::vector<std::string> cols = [] {
        std::vector<std::string> c{"index"};
        for (auto d : dse::dimension_names) c.emplace_back(d);
        for (const char* m : {"seed", "tsa", "rd", "tiles", "rwo", "raw_score", "normalized_score"})
            c.emplace_back(m);
        for (auto s : mapping::all_schemes)
            for (const char* m : {"rd_", "tiles_", "rwo_"}) c.push_back(m + std::string(to_string(s)));
        return c;
    }();
    return cols;
}

std::vector<std::string> result_fields(const dse::ConfigResult& r) {
    std::vector<std::string> f{std::to_string(r.index)};
    for (auto d : dse::dimension_names) f.push_back(dse::dimension_label(r.config, d));
    f.push_back(std::to_string(r.seed));
    f.push_back(format_double(r.tsa));
    f.push_back(std::to_string(r.rd));
    f.push_back(std::to_string(r.tiles));
    f.push_back(std::to_string(r.rwo));
    f.push_back(format_double(r.raw_score));
    f.push_back(format_double(r.normalized_score));
    for (const auto& sc : r.scheme_costs)
        for (auto v : {sc.rd, sc.tiles, sc.rwo})
            f.push_back(sc.feasible ? std::to_string(v) : "NA");
    return f;
}

CsvTable results_table(std::span<const dse::ConfigResult> results, std::uint64_t seed) {
    CsvTable t;
    t.meta = {{"seed", std::to_string(seed)}};
    t.header = result_columns();
    for (const auto& r : results) t.rows.push_back(result_fields(r));
    return t;
}

}  // namespace

std::string results_csv(std::span<const dse::ConfigResult> results, std::uint64_t seed) {
    return to_csv(results_table(results, seed));
}

std::string ranking_csv(std::span<const dse::ConfigResult> ranked, std::uint64_t seed) {
    auto t = results_table(ranked, seed);
    t.header.insert(t.header.begin(), "rank");
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        t.rows[i].insert(t.rows[i].begin(), std::to_string(i + 1));
    return to_csv(t);
}

std::vector<dse::ConfigResult> parse_results_csv(std::string_view text) {
    const auto t = parse_csv(text);
    std::vector<dse::ConfigResult> out;
    for (std::size_t ri = 0; ri < t.rows.size(); ++ri) {
        const auto& row = t.rows[ri];
        const std::string where = "results row " + std::to_string(ri + 1) + ".";
        auto field = [&](std::string_view name) -> const std::string& { return row[t.column(name)]; };
        auto num = [&](std::string_view name) {
            return text::parse_double(field(name), where + std::string(name));
        };
        auto integer = [&](std::string_view name) {
            return text::parse_int(field(name), where + std::string(name));
        };

        dse::ConfigResult r;
        r.index = std::size_t(integer("index"));
        auto& c = r.config;
        c.network = field("network");
        c.scheme = mapping::parse_scheme(field("scheme"));
        c.io_bit_width = int(integer("io_bit_width"));
        c.tile_size = int(integer("tile_size"));
        c.v_max = num("v_max");
        c.p_stuck_on = num("p_stuck_on");
        c.p_stuck_off = num("p_stuck_off");
        c.n_states = int(integer("n_states"));
        c.std_multiplier = num("std_multiplier");
        c.batch_size = int(integer("batch_size"));
        r.seed = std::uint64_t(integer("seed"));
        r.tsa = num("tsa");
        r.rd = integer("rd");
        r.tiles = integer("tiles");
        r.rwo = integer("rwo");
        r.raw_score = num("raw_score");
        r.normalized_score = num("normalized_score");
        for (std::size_t s = 0; s < mapping::all_schemes.size(); ++s) {
            auto& sc = r.scheme_costs[s];
            sc.scheme = mapping::all_schemes[s];
            const std::string suffix(to_string(sc.scheme));
            if (field("rd_" + suffix) == "NA") {
                sc.feasible = false;
                continue;
            }
            sc.rd = integer("rd_" + suffix);
            sc.tiles = integer("tiles_" + suffix);
            sc.rwo = integer("rwo_" + suffix);
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::string contour_csv(const dse::ContourGrid& grid, std::uint64_t seed) {
    CsvTable t;
    t.meta = {{"seed", std::to_string(seed)}, {"metric", grid.metric}};
    t.header.push_back(grid.x_dim + "/" + grid.y_dim);
    t.header.insert(t.header.end(), grid.y_labels.begin(), grid.y_labels.end());
    for (std::size_t xi = 0; xi < grid.x_labels.size(); ++xi) {
        std::vector<std::string> row{grid.x_labels[xi]};
        for (std::size_t yi = 0; yi < grid.y_labels.size(); ++yi) {
            const auto& v = grid.at(xi, yi);
            row.push_back(v ? format_double(*v) : "NA");
        }
        t.rows.push_back(std::move(row));
    }
    return to_csv(t);
}

dse::ContourGrid parse_contour_csv(std::string_view text) {
    const auto t = parse_csv(text);
    dse::ContourGrid g;
    if (const auto* m = t.meta_value("metric")) g.metric = *m;
    const auto& corner = t.header.front();
    const auto slash = corner.find('/');
    if (slash == std::string::npos) throw ParseError("contour csv: header must start with x/y");
    g.x_dim = corner.substr(0, slash);
    g.y_dim = corner.substr(slash + 1);
    g.y_labels.assign(t.header.begin() + 1, t.header.end());
    for (const auto& row : t.rows) {
        g.x_labels.push_back(row.front());
        for (std::size_t i = 1; i < row.size(); ++i)
            g.values.push_back(row[i] == "NA" ? std::nullopt
                                              : std::optional(text::parse_double(row[i], "contour cell")));
    }
    return g;
}

std::string cost_csv(const mapping::NetworkCost& cost, std::uint64_t seed) {
    CsvTable t;
    t.meta = {{"seed", std::to_string(seed)},
              {"scheme", std::string(to_string(cost.scheme))},
              {"tile_size", std::to_string(cost.tile_size)}};
    t.header = {"layer", "feasible", "rd",       "tiles",    "rwo", "programming_writes",
                "eq1",   "eq2",      "eq3",      "eq_formula_devices", "remainder_flag"};
    auto rational = [](const mapping::Rational& r) {
        return r.integral() ? std::to_string(r.num)
                            : std::to_string(r.num) + "/" + std::to_string(r.den);
    };
    auto row = [&](const std::string& name, const mapping::CostReport& c) {
        const bool eq = c.has_eq;
        t.rows.push_back({name, c.feasible ? "1" : "0", std::to_string(c.rd), std::to_string(c.tiles),
                          std::to_string(c.rwo), std::to_string(c.programming_writes),
                          eq ? rational(c.eq1) : "NA", eq ? std::to_string(c.eq2) : "NA",
                          eq ? rational(c.eq3) : "NA",
                          eq ? std::to_string(c.eq_formula_devices) : "NA",
                          c.remainder_flag ? "1" : "0"});
    };
    for (std::size_t i = 0; i < cost.layers.size(); ++i) row(std::to_string(i), cost.layers[i]);
    row("total", cost.total);
    return to_csv(t);
}

namespace {

// Viridis-like ramp sampled at five stops.
std::string ramp(double f) {
    static constexpr double stops[5][3] = {
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
    f = std::clamp(f, 0.0, 1.0) * 4.0;
    const int i = std::min(3, int(f));
    const double u = f - i;
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                  int(std::lround(std::lerp(stops[i][0], stops[i + 1][0], u))),
                  int(std::lround(std::lerp(stops[i][1], stops[i + 1][1], u))),
                  int(std::lround(std::lerp(stops[i][2], stops[i + 1][2], u))));
    return buf;
}

}  // namespace

std::string heatmap_svg(const dse::ContourGrid& grid) {
    constexpr int cell = 48, margin = 80;
    const int w = margin + cell * int(grid.x_labels.size()) + 20;
    const int h = margin + cell * int(grid.y_labels.size()) + 40;
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& v : grid.values)
        if (v) lo = std::min(lo, *v), hi = std::max(hi, *v);

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<text x=\"" << margin << "\" y=\"20\" font-size=\"13\">" << grid.metric << " over "
        << grid.x_dim << " x " << grid.y_dim << "</text>\n";
    for (std::size_t xi = 0; xi < grid.x_labels.size(); ++xi) {
        const int x = margin + cell * int(xi);
        svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << h - 15 << "\" text-anchor=\"middle\">"
            << grid.x_labels[xi] << "</text>\n";
        for (std::size_t yi = 0; yi < grid.y_labels.size(); ++yi) {
            // y grows upwards
            const int y = margin + cell * int(grid.y_labels.size() - 1 - yi) - 40;
            const auto& v = grid.at(xi, yi);
            const double f = v && hi > lo ? (*v - lo) / (hi - lo) : 1.0;
            svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\""
                << cell << "\" fill=\"" << (v ? ramp(f) : std::string("#cccccc"))
                << "\" stroke=\"white\"/>\n";
            svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
                << "\" text-anchor=\"middle\" fill=\"" << (f > 0.6 ? "black" : "white") << "\">";
            if (v) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.3g", *v);
                svg << buf;
            } else {
                svg << "NA";
            }
            svg << "</text>\n";
        }
    }
    for (std::size_t yi = 0; yi < grid.y_labels.size(); ++yi) {
        const int y = margin + cell * int(grid.y_labels.size() - 1 - yi) - 40;
        svg << "<text x=\"" << margin - 6 << "\" y=\"" << y + cell / 2 + 4
            << "\" text-anchor=\"end\">" << grid.y_labels[yi] << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace rram::report
