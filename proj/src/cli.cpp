#include "rram/cli.hpp"

#include "rram/error.hpp"
#include "rram/qnet.hpp"
#include "rram/report.hpp"
#include "rram/text.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>

namespace rram::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr double kAccuracyGate = 0.90;

// Bad flags, missing directories, unknown names: exit code 2.
class UsageError : public Error {
public:
    using Error::Error;
};

void require_dir(const fs::path& dir) {
    if (!fs::is_directory(dir))
        throw UsageError("output directory does not exist: " + dir.string());
}

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
    return buf;
}

mapping::Scheme scheme_flag(const std::string& name) {
    try {
        return mapping::parse_scheme(name);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
}

struct Options {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool scheme_given = false;
    bool tile_given = false;
    int jobs = 0;
    int bits = 8;
    std::string network;
    std::string scheme = "sparse_staggered";
    int tile = 64;
    std::string results;
    std::string x = "tile_size";
    std::string y = "batch_size";
    std::string metric = "tsa";
    std::string split = "scheme";
    bool heatmap = false;
};

RunConfig config_with_overrides(const Options& o) {
    auto c = load_run_config(o.config);
    if (o.seed_given) c.seed = o.seed;
    if (o.jobs > 0) c.jobs = o.jobs;
    return c;
}

std::vector<dse::NamedNetwork> load_networks(const RunConfig& c) {
    std::vector<dse::NamedNetwork> nets;
    for (const auto& ref : c.networks) nets.push_back({ref.id, qnet::load_network(ref.path)});
    return nets;
}

// ---- fixture -------------------------------------------------------------

int cmd_fixture(const Options& o, std::ostream& out) {
    const fs::path dir(o.out);
    require_dir(dir);
    if (!qnet::is_supported_bit_width(o.bits)) throw UsageError("--bits must be 4, 6 or 8");
    const auto fx = qnet::make_fixture(o.seed, o.bits);

    qnet::save_network(fx.net, dir / "network.json");
    qnet::save_dataset(fx.train, dir / "train.csv");
    qnet::save_dataset(fx.test, dir / "test.csv");

    // Starter config for the tile x batch x scheme sweep.
    RunConfig rc;
    rc.seed = o.seed;
    rc.networks = {{"fixture", "network.json"}};
    rc.dataset = "test.csv";
    rc.search.networks = {"fixture"};
    rc.search.schemes = {mapping::Scheme::sparse_staggered, mapping::Scheme::dense_kernel};
    rc.search.io_bit_widths = {rc.io.io_bit_width};
    rc.search.tile_sizes = {32, 64, 128};
    rc.search.v_max = {rc.io.v_max};
    rc.search.p_stuck_on = {rc.device.p_stuck_on};
    rc.search.p_stuck_off = {rc.device.p_stuck_off};
    rc.search.n_states = {rc.device.n_states};
    rc.search.std_multipliers = {rc.std_multiplier};
    rc.search.batch_sizes = {16, 256};
    text::write_file(dir / "config.json", run_config_to_json(rc));

    const double acc = qnet::ideal_accuracy(fx.net, fx.test);
    const auto sp = qnet::sparsity(fx.net);
    out << "fixture seed " << o.seed << ", " << o.bits << "-bit weights\n";
    out << "  wrote network.json, train.csv, test.csv, config.json to " << dir.string() << "\n";
    out << "  ideal test accuracy " << pct(acc) << " (gate >= " << pct(kAccuracyGate) << ": "
        << (acc >= kAccuracyGate ? "PASS" : "FAIL") << ")\n";
    out << "  zero weights " << sp.zero_count << "/" << sp.total << " (" << pct(sp.fraction)
        << ")\n";
    return 0;
}

// ---- cost ----------------------------------------------------------------

void print_cost(const mapping::NetworkCost& nc, std::ostream& out) {
    char buf[256];
    out << "scheme " << to_string(nc.scheme) << ", tile " << nc.tile_size << "x" << nc.tile_size
        << "\n";
    std::snprintf(buf, sizeof buf, "  %-6s %10s %7s %7s %12s %8s %10s %5s\n", "layer", "RD",
                  "tiles", "RWO", "eq1", "eq2", "eq3", "rem");
    out << buf;
    auto rational = [](const mapping::Rational& r) {
        return r.integral() ? std::to_string(r.num)
                            : std::to_string(r.num) + "/" + std::to_string(r.den);
    };
    auto line = [&](const std::string& name, const mapping::CostReport& c) {
        if (!c.feasible) {
            out << "  " << name << "  infeasible: " << c.note << "\n";
            return;
        }
        std::snprintf(buf, sizeof buf, "  %-6s %10lld %7lld %7lld %12s %8s %10s %5s\n",
                      name.c_str(), (long long)c.rd, (long long)c.tiles, (long long)c.rwo,
                      c.has_eq ? rational(c.eq1).c_str() : "-",
                      c.has_eq ? std::to_string(c.eq2).c_str() : "-",
                      c.has_eq ? rational(c.eq3).c_str() : "-", c.remainder_flag ? "yes" : "no");
        out << buf;
    };
    for (std::size_t i = 0; i < nc.layers.size(); ++i) line(std::to_string(i), nc.layers[i]);
    line("total", nc.total);
}

int cmd_cost(const Options& o, std::ostream& out) {
    std::vector<mapping::Scheme> schemes;
    fs::path net_path;
    int tile = o.tile;
    if (!o.config.empty()) {
        const auto c = config_with_overrides(o);
        net_path = c.networks.front().path;
        schemes = {c.scheme};
        tile = c.tile_size;
    }
    if (!o.network.empty()) net_path = o.network;
    if (net_path.empty()) throw UsageError("cost needs --network or --config");
    if (o.tile_given) tile = o.tile;
    if (o.scheme == "all")
        schemes.assign(mapping::all_schemes.begin(), mapping::all_schemes.end());
    else if (schemes.empty() || o.scheme_given)
        schemes = {scheme_flag(o.scheme)};
    if (tile < 2 || tile % 2) throw UsageError("--tile must be even and >= 2");
    if (!o.out.empty()) require_dir(o.out);

    const auto net = qnet::load_network(net_path);
    for (auto s : schemes) {
        const auto nc = mapping::constructive_cost(net, s, tile);
        print_cost(nc, out);
        if (!o.out.empty())
            text::write_file(fs::path(o.out) / ("cost_" + std::string(to_string(s)) + ".csv"),
                             report::cost_csv(nc, o.seed));
    }
    return 0;
}

// ---- simulate ------------------------------------------------------------

ordered_json result_json(const dse::ConfigResult& r) {
    ordered_json j;
    for (auto d : dse::dimension_names) j[std::string(d)] = dse::dimension_label(r.config, d);
    j["tsa"] = r.tsa;
    j["rd"] = r.rd;
    j["tiles"] = r.tiles;
    j["rwo"] = r.rwo;
    j["raw_score"] = r.raw_score;
    j["scheme_costs"] = ordered_json::array();
    for (const auto& sc : r.scheme_costs)
        j["scheme_costs"].push_back({{"scheme", to_string(sc.scheme)},
                                     {"feasible", sc.feasible},
                                     {"rd", sc.rd},
                                     {"tiles", sc.tiles},
                                     {"rwo", sc.rwo}});
    return j;
}

int cmd_simulate(const Options& o, std::ostream& out) {
    if (o.config.empty()) throw UsageError("simulate needs --config");
    if (!o.out.empty()) require_dir(o.out);
    const auto c = config_with_overrides(o);

    // The scalar settings form a one-point space.
    dse::SearchSpace point;
    point.networks = {c.networks.front().id};
    point.schemes = {c.scheme};
    point.io_bit_widths = {c.io.io_bit_width};
    point.tile_sizes = {c.tile_size};
    point.v_max = {c.io.v_max};
    point.p_stuck_on = {c.device.p_stuck_on};
    point.p_stuck_off = {c.device.p_stuck_off};
    point.n_states = {c.device.n_states};
    point.std_multipliers = {c.std_multiplier};
    point.batch_sizes = {c.io.batch_size};
    point.base_device = c.device;
    point.validate();

    const auto nets = load_networks(c);
    const auto data = qnet::load_dataset(c.dataset);
    const auto r = dse::evaluate_configuration(point, 0, nets, data, c.seed);
    const double ideal = qnet::ideal_accuracy(nets.front().net, data);

    out << "network " << r.config.network << ", scheme " << to_string(r.config.scheme) << ", tile "
        << r.config.tile_size << ", seed " << c.seed << "\n";
    out << "  TSA        " << pct(r.tsa) << " (ideal " << pct(ideal) << ")\n";
    out << "  RD         " << r.rd << "\n";
    out << "  tiles      " << r.tiles << "\n";
    out << "  RWO        " << r.rwo << "\n";
    out << "  raw score  " << text::format_double(r.raw_score) << "\n";

    if (!o.out.empty()) {
        ordered_json j;
        j["format_version"] = 1;
        j["seed"] = c.seed;
        j["config"] = ordered_json::parse(run_config_to_json(c));
        j["ideal_tsa"] = ideal;
        j["result"] = result_json(r);
        text::write_file(fs::path(o.out) / "simulate.json", j.dump(2) + "\n");
    }
    return 0;
}

// ---- dse / report --------------------------------------------------------

std::string file_token(std::string s) {
    for (auto& ch : s)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '.' && ch != '-' && ch != '_')
            ch = '_';
    return s;
}

// Writes one contour CSV per value of the split dimension. Returns the
// file names written.
std::vector<std::string> write_contours(std::span<const dse::ConfigResult> results,
                                        const ContourSpec& cs, const fs::path& dir,
                                        std::uint64_t seed, bool heatmap) {
    std::vector<std::pair<std::string, dse::ResultFilter>> slices;
    if (cs.split.empty()) {
        slices.emplace_back("", dse::ResultFilter{});
    } else {
        std::vector<std::string> values;
        for (const auto& r : results) {
            auto v = dse::dimension_label(r.config, cs.split);
            if (std::find(values.begin(), values.end(), v) == values.end()) values.push_back(v);
        }
        for (const auto& v : values)
            slices.emplace_back("_" + cs.split + "-" + v, [split = cs.split, v](const auto& r) {
                return dse::dimension_label(r.config, split) == v;
            });
    }
    std::vector<std::string> written;
    for (const auto& [suffix, filter] : slices) {
        const auto grid = dse::contour_grid(results, cs.x, cs.y, cs.metric, filter);
        const auto stem = file_token("contour_" + cs.metric + "_" + cs.x + "_" + cs.y + suffix);
        text::write_file(dir / (stem + ".csv"), report::contour_csv(grid, seed));
        written.push_back(stem + ".csv");
        if (heatmap) {
            text::write_file(dir / (stem + ".svg"), report::heatmap_svg(grid));
            written.push_back(stem + ".svg");
        }
    }
    return written;
}

void print_top(std::span<const dse::ConfigResult> ranked, std::ostream& out) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "  %-4s %-18s %5s %6s %8s %10s %8s %12s\n", "rank", "scheme",
                  "tile", "batch", "TSA", "RD", "RWO", "norm score");
    out << buf;
    for (std::size_t i = 0; i < std::min<std::size_t>(ranked.size(), 5); ++i) {
        const auto& r = ranked[i];
        std::snprintf(buf, sizeof buf, "  %-4zu %-18s %5d %6d %8s %10lld %8lld %12.4f\n", i + 1,
                      std::string(to_string(r.config.scheme)).c_str(), r.config.tile_size,
                      r.config.batch_size, pct(r.tsa).c_str(), (long long)r.rd, (long long)r.rwo,
                      r.normalized_score);
        out << buf;
    }
}

int cmd_dse(const Options& o, std::ostream& out) {
    if (o.config.empty()) throw UsageError("dse needs --config");
    if (o.out.empty()) throw UsageError("dse needs --out");
    require_dir(o.out);
    const auto c = config_with_overrides(o);
    const fs::path dir(o.out);

    const auto nets = load_networks(c);
    const auto data = qnet::load_dataset(c.dataset);
    dse::GridOptions opts;
    opts.jobs = c.jobs;
    opts.budget = c.budget;

    const auto start = std::chrono::steady_clock::now();
    const auto results = dse::grid_search(c.search, nets, data, c.seed, opts);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto ranked = dse::rank(results);

    text::write_file(dir / "resolved_config.json", run_config_to_json(c));
    text::write_file(dir / "results.csv", report::results_csv(results, c.seed));
    text::write_file(dir / "ranking.csv", report::ranking_csv(ranked, c.seed));
    std::vector<std::string> written{"resolved_config.json", "results.csv", "ranking.csv"};
    for (const auto& cs : c.contours) {
        auto files = write_contours(results, cs, dir, c.seed, c.heatmaps || o.heatmap);
        written.insert(written.end(), files.begin(), files.end());
    }

    char buf[96];
    std::snprintf(buf, sizeof buf, "%.1f s", secs);
    out << results.size() << " configurations evaluated in " << buf << " (" << c.jobs
        << " jobs, seed " << c.seed << ")\n";
    print_top(ranked, out);
    out << "wrote";
    for (const auto& f : written) out << " " << f;
    out << "\n";
    return 0;
}

int cmd_report(const Options& o, std::ostream& out) {
    if (o.results.empty()) throw UsageError("report needs --results");
    if (o.out.empty()) throw UsageError("report needs --out");
    require_dir(o.out);
    const auto results = report::parse_results_csv(text::read_file(o.results));
    if (results.empty()) throw UsageError("results file has no rows");
    const std::uint64_t seed = o.seed_given ? o.seed : results.front().seed;

    ContourSpec cs{o.x, o.y, o.metric, o.split};
    const auto known = [](const std::string& d) {
        return std::find(dse::dimension_names.begin(), dse::dimension_names.end(), d) !=
               dse::dimension_names.end();
    };
    if (!known(cs.x) || !known(cs.y) || cs.x == cs.y)
        throw UsageError("--x and --y must be two different dimensions");
    if (!cs.split.empty() && (!known(cs.split) || cs.split == cs.x || cs.split == cs.y))
        throw UsageError("--split must be another dimension or empty");
    try {
        dse::metric_value(results.front(), cs.metric);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }

    const auto ranked = dse::rank(results);
    const fs::path dir(o.out);
    text::write_file(dir / "ranking.csv", report::ranking_csv(ranked, seed));
    auto files = write_contours(results, cs, dir, seed, o.heatmap);
    print_top(ranked, out);
    out << "wrote ranking.csv";
    for (const auto& f : files) out << " " << f;
    out << "\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Tiled RRAM crossbar inference simulator and design space explorer", "rramdse"};
    app.require_subcommand(1);
    Options o;

    auto add_seed = [&](CLI::App* sub) {
        sub->add_option("--seed", o.seed, "Random seed (default 0)");
    };
    auto* fixture = app.add_subcommand("fixture", "Train the fixture network and write its data");
    fixture->add_option("--out", o.out, "Output directory (must exist)")->required();
    fixture->add_option("--bits", o.bits, "Weight bit width: 4, 6 or 8");
    add_seed(fixture);

    auto* cost = app.add_subcommand("cost", "Device, tile and read costs of a mapped network");
    cost->add_option("--network", o.network, "Network JSON file");
    cost->add_option("--config", o.config, "Run config (network, scheme and tile taken from it)");
    cost->add_option("--scheme", o.scheme, "sparse_staggered, dense_routed, dense_kernel or all");
    cost->add_option("--tile", o.tile, "Tile size t (t x t devices)");
    cost->add_option("--out", o.out, "Directory for cost CSV files");
    add_seed(cost);

    auto* simulate = app.add_subcommand("simulate", "Evaluate one configuration");
    simulate->add_option("--config", o.config, "Run config")->required();
    simulate->add_option("--out", o.out, "Directory for simulate.json");
    add_seed(simulate);

    auto* dse_cmd = app.add_subcommand("dse", "Grid search over the configured space");
    dse_cmd->add_option("--config", o.config, "Run config")->required();
    dse_cmd->add_option("--out", o.out, "Output directory (must exist)")->required();
    dse_cmd->add_option("--jobs", o.jobs, "Worker threads");
    dse_cmd->add_flag("--heatmap", o.heatmap, "Also write SVG heatmaps");
    add_seed(dse_cmd);

    auto* report_cmd = app.add_subcommand("report", "Contours and ranking from a results.csv");
    report_cmd->add_option("--results", o.results, "results.csv from dse")->required();
    report_cmd->add_option("--out", o.out, "Output directory (must exist)")->required();
    report_cmd->add_option("--x", o.x, "Contour x dimension");
    report_cmd->add_option("--y", o.y, "Contour y dimension");
    report_cmd->add_option("--metric", o.metric, "tsa, rd, tiles, rwo, raw_score, normalized_score");
    report_cmd->add_option("--split", o.split, "One grid per value of this dimension ('' for none)");
    report_cmd->add_flag("--heatmap", o.heatmap, "Also write SVG heatmaps");
    add_seed(report_cmd);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        auto* sub = app.get_subcommands().front();
        auto given = [&](const char* name) {
            const auto* opt = sub->get_option_no_throw(name);
            return opt && opt->count() > 0;
        };
        o.seed_given = given("--seed");
        o.scheme_given = given("--scheme");
        o.tile_given = given("--tile");
        if (sub == fixture) return cmd_fixture(o, out);
        if (sub == cost) return cmd_cost(o, out);
        if (sub == simulate) return cmd_simulate(o, out);
        if (sub == dse_cmd) return cmd_dse(o, out);
        return cmd_report(o, out);
    } catch (const ConfigError& e) {
        err << "error: invalid configuration\n";
        for (const auto& p : e.problems()) err << "  " << p << "\n";
        return 2;
    } catch (const dse::BudgetExceeded& e) {
        err << "error: " << e.what() << "; refusing to run " << e.required()
            << " configurations\n";
        return 2;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace rram::cli
