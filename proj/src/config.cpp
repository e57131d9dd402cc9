#include "rram/cli.hpp"

#include "rram/error.hpp"
#include "rram/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

namespace rram::cli {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr int kFormatVersion = 1;

// Collects problems instead of stopping at the first one.
class Reader {
public:
    std::vector<std::string> problems;

    void problem(const std::string& path, const std::string& msg) {
        problems.push_back(path + ": " + msg);
    }

    template <typename T>
    T get(const json& obj, const char* key, const std::string& path, T fallback) {
        const auto it = obj.find(key);
        if (it == obj.end()) return fallback;
        try {
            return it->get<T>();
        } catch (const json::exception&) {
            problem(path + key, "wrong type");
            return fallback;
        }
    }

    template <typename T>
    std::vector<T> list(const json& obj, const char* key, const std::string& path,
                        std::vector<T> fallback) {
        const auto it = obj.find(key);
        if (it == obj.end()) return fallback;
        if (!it->is_array()) {
            problem(path + key, "expected a list");
            return fallback;
        }
        std::vector<T> out;
        for (std::size_t i = 0; i < it->size(); ++i) {
            try {
                out.push_back((*it)[i].get<T>());
            } catch (const json::exception&) {
                problem(path + key + "[" + std::to_string(i) + "]", "wrong type");
            }
        }
        return out;
    }

    const json& object(const json& obj, const char* key, const std::string& path) {
        static const json empty = json::object();
        const auto it = obj.find(key);
        if (it == obj.end()) return empty;
        if (!it->is_object()) {
            problem(path + key, "expected an object");
            return empty;
        }
        return *it;
    }
};

void check_unknown(Reader& rd, const json& obj, const std::string& path,
                   std::initializer_list<const char*> known) {
    for (const auto& [k, v] : obj.items())
        if (std::none_of(known.begin(), known.end(), [&](const char* n) { return k == n; }))
            rd.problem(path + k, "unknown field");
}

mapping::Scheme scheme_or(Reader& rd, const std::string& name, const std::string& path,
                          mapping::Scheme fallback) {
    try {
        return mapping::parse_scheme(name);
    } catch (const Error& e) {
        rd.problem(path, e.what());
        return fallback;
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text, const fs::path& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("config: not valid JSON: ") + e.what()});
    }
    if (!doc.is_object()) throw ConfigError({"config: top level must be an object"});

    Reader rd;
    RunConfig c;
    check_unknown(rd, doc, "",
                  {"format_version", "seed", "network", "networks", "dataset", "device", "io",
                   "scheme", "tile_size", "std_multiplier", "search", "budget", "jobs",
                   "contours", "heatmaps"});

    const int version = rd.get<int>(doc, "format_version", "", kFormatVersion);
    if (version != kFormatVersion)
        rd.problem("format_version", "unsupported version " + std::to_string(version));
    c.seed = rd.get<std::uint64_t>(doc, "seed", "", 0);

    // Networks: a single path or a list of {id, path}.
    if (doc.contains("network") && doc.contains("networks"))
        rd.problem("network", "give either network or networks, not both");
    if (doc.contains("network")) {
        const auto p = rd.get<std::string>(doc, "network", "", "");
        if (!p.empty()) c.networks.push_back({fs::path(p).stem().string(), resolve(base_dir, p)});
    } else if (doc.contains("networks")) {
        const auto& list = doc["networks"];
        if (!list.is_array()) rd.problem("networks", "expected a list");
        else
            for (std::size_t i = 0; i < list.size(); ++i) {
                const std::string path = "networks[" + std::to_string(i) + "].";
                if (!list[i].is_object()) {
                    rd.problem(path, "expected an object");
                    continue;
                }
                check_unknown(rd, list[i], path, {"id", "path"});
                const auto id = rd.get<std::string>(list[i], "id", path, "");
                const auto p = rd.get<std::string>(list[i], "path", path, "");
                if (p.empty()) rd.problem(path + "path", "missing");
                c.networks.push_back({id.empty() ? fs::path(p).stem().string() : id,
                                      resolve(base_dir, p)});
            }
    }
    if (c.networks.empty()) rd.problem("network", "missing");
    std::set<std::string> ids;
    for (const auto& n : c.networks) {
        if (!ids.insert(n.id).second) rd.problem("networks", "duplicate id '" + n.id + "'");
        if (!n.path.empty() && !fs::is_regular_file(n.path))
            rd.problem("network", "file not found: " + n.path.string());
    }

    const auto dataset = rd.get<std::string>(doc, "dataset", "", "");
    if (dataset.empty()) {
        rd.problem("dataset", "missing");
    } else {
        c.dataset = resolve(base_dir, dataset);
        if (!fs::is_regular_file(c.dataset))
            rd.problem("dataset", "file not found: " + c.dataset.string());
    }

    const auto& dev = rd.object(doc, "device", "");
    check_unknown(rd, dev, "device.",
                  {"r_on_mean", "r_on_std", "r_off_mean", "r_off_std", "n_states", "p_stuck_on",
                   "p_stuck_off"});
    c.device.r_on_mean = rd.get(dev, "r_on_mean", "device.", c.device.r_on_mean);
    c.device.r_on_std = rd.get(dev, "r_on_std", "device.", c.device.r_on_std);
    c.device.r_off_mean = rd.get(dev, "r_off_mean", "device.", c.device.r_off_mean);
    c.device.r_off_std = rd.get(dev, "r_off_std", "device.", c.device.r_off_std);
    c.device.n_states = rd.get(dev, "n_states", "device.", c.device.n_states);
    c.device.p_stuck_on = rd.get(dev, "p_stuck_on", "device.", c.device.p_stuck_on);
    c.device.p_stuck_off = rd.get(dev, "p_stuck_off", "device.", c.device.p_stuck_off);

    const auto& io = rd.object(doc, "io", "");
    check_unknown(rd, io, "io.", {"io_bit_width", "v_max", "batch_size"});
    c.io.io_bit_width = rd.get(io, "io_bit_width", "io.", c.io.io_bit_width);
    c.io.v_max = rd.get(io, "v_max", "io.", c.io.v_max);
    c.io.batch_size = rd.get(io, "batch_size", "io.", c.io.batch_size);

    c.scheme = scheme_or(rd, rd.get<std::string>(doc, "scheme", "", "sparse_staggered"), "scheme",
                         c.scheme);
    c.tile_size = rd.get(doc, "tile_size", "", c.tile_size);
    c.std_multiplier = rd.get(doc, "std_multiplier", "", c.std_multiplier);
    c.budget = rd.get<std::size_t>(doc, "budget", "", c.budget);
    c.jobs = rd.get(doc, "jobs", "", c.jobs);
    if (c.jobs < 1) rd.problem("jobs", "must be >= 1");
    c.heatmaps = rd.get(doc, "heatmaps", "", c.heatmaps);

    // Scalar settings are themselves validated through the search space,
    // whose single-valued dimensions they populate.
    const auto& s = rd.object(doc, "search", "");
    check_unknown(rd, s, "search.",
                  {"network", "scheme", "io_bit_width", "tile_size", "v_max", "p_stuck_on",
                   "p_stuck_off", "n_states", "std_multiplier", "batch_size"});
    auto& sp = c.search;
    std::vector<std::string> all_ids;
    for (const auto& n : c.networks) all_ids.push_back(n.id);
    sp.networks = rd.list<std::string>(s, "network", "search.", all_ids);
    for (const auto& id : sp.networks)
        if (!ids.count(id)) rd.problem("search.network", "unknown network id '" + id + "'");
    for (const auto& name : rd.list<std::string>(s, "scheme", "search.",
                                                 {std::string(to_string(c.scheme))}))
        sp.schemes.push_back(scheme_or(rd, name, "search.scheme", c.scheme));
    sp.io_bit_widths = rd.list<int>(s, "io_bit_width", "search.", {c.io.io_bit_width});
    sp.tile_sizes = rd.list<int>(s, "tile_size", "search.", {c.tile_size});
    sp.v_max = rd.list<double>(s, "v_max", "search.", {c.io.v_max});
    sp.p_stuck_on = rd.list<double>(s, "p_stuck_on", "search.", {c.device.p_stuck_on});
    sp.p_stuck_off = rd.list<double>(s, "p_stuck_off", "search.", {c.device.p_stuck_off});
    sp.n_states = rd.list<int>(s, "n_states", "search.", {c.device.n_states});
    sp.std_multipliers = rd.list<double>(s, "std_multiplier", "search.", {c.std_multiplier});
    sp.batch_sizes = rd.list<int>(s, "batch_size", "search.", {c.io.batch_size});
    sp.base_device = c.device;

    if (doc.contains("contours")) {
        c.contours.clear();
        const auto& list = doc["contours"];
        if (!list.is_array()) rd.problem("contours", "expected a list");
        else
            for (std::size_t i = 0; i < list.size(); ++i) {
                const std::string path = "contours[" + std::to_string(i) + "].";
                if (!list[i].is_object()) {
                    rd.problem(path, "expected an object");
                    continue;
                }
                check_unknown(rd, list[i], path, {"x", "y", "metric", "split"});
                ContourSpec cs;
                cs.x = rd.get(list[i], "x", path, cs.x);
                cs.y = rd.get(list[i], "y", path, cs.y);
                cs.metric = rd.get(list[i], "metric", path, cs.metric);
                cs.split = rd.get(list[i], "split", path, cs.split);
                auto known = [](const std::string& d) {
                    return std::find(dse::dimension_names.begin(), dse::dimension_names.end(), d) !=
                           dse::dimension_names.end();
                };
                if (!known(cs.x)) rd.problem(path + "x", "unknown dimension '" + cs.x + "'");
                if (!known(cs.y)) rd.problem(path + "y", "unknown dimension '" + cs.y + "'");
                if (cs.x == cs.y) rd.problem(path + "y", "must differ from x");
                if (!cs.split.empty() && (!known(cs.split) || cs.split == cs.x || cs.split == cs.y))
                    rd.problem(path + "split", "must be another dimension or empty");
                try {
                    dse::metric_value(dse::ConfigResult{}, cs.metric);
                } catch (const Error&) {
                    rd.problem(path + "metric", "unknown metric '" + cs.metric + "'");
                }
                c.contours.push_back(cs);
            }
    }

    try {
        sp.validate();
    } catch (const ConfigError& e) {
        rd.problems.insert(rd.problems.end(), e.problems().begin(), e.problems().end());
    }
    if (!rd.problems.empty()) throw ConfigError(std::move(rd.problems));
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::string text;
    try {
        text = text::read_file(path);
    } catch (const Error& e) {
        throw ConfigError({e.what()});
    }
    return parse_run_config(text, fs::absolute(path).parent_path());
}

std::string run_config_to_json(const RunConfig& c) {
    ordered_json j;
    j["format_version"] = kFormatVersion;
    j["seed"] = c.seed;
    j["networks"] = ordered_json::array();
    for (const auto& n : c.networks)
        j["networks"].push_back({{"id", n.id}, {"path", n.path.string()}});
    j["dataset"] = c.dataset.string();
    j["device"] = {{"r_on_mean", c.device.r_on_mean},     {"r_on_std", c.device.r_on_std},
                   {"r_off_mean", c.device.r_off_mean},   {"r_off_std", c.device.r_off_std},
                   {"n_states", c.device.n_states},       {"p_stuck_on", c.device.p_stuck_on},
                   {"p_stuck_off", c.device.p_stuck_off}};
    j["io"] = {{"io_bit_width", c.io.io_bit_width},
               {"v_max", c.io.v_max},
               {"batch_size", c.io.batch_size}};
    j["scheme"] = to_string(c.scheme);
    j["tile_size"] = c.tile_size;
    j["std_multiplier"] = c.std_multiplier;
    const auto& s = c.search;
    ordered_json schemes = ordered_json::array();
    for (auto sc : s.schemes) schemes.push_back(to_string(sc));
    j["search"] = {{"network", s.networks},
                   {"scheme", schemes},
                   {"io_bit_width", s.io_bit_widths},
                   {"tile_size", s.tile_sizes},
                   {"v_max", s.v_max},
                   {"p_stuck_on", s.p_stuck_on},
                   {"p_stuck_off", s.p_stuck_off},
                   {"n_states", s.n_states},
                   {"std_multiplier", s.std_multipliers},
                   {"batch_size", s.batch_sizes}};
    j["budget"] = c.budget;
    j["contours"] = ordered_json::array();
    for (const auto& cs : c.contours)
        j["contours"].push_back({{"x", cs.x}, {"y", cs.y}, {"metric", cs.metric}, {"split", cs.split}});
    j["heatmaps"] = c.heatmaps;
    return j.dump(2) + "\n";
}

}  // namespace rram::cli
