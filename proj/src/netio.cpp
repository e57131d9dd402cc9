#include "rram/qnet.hpp"

#include "rram/error.hpp"
#include "rram/text.hpp"

#include <json.hpp>

namespace rram::qnet {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

const json& require(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) throw ParseError(path + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(path + "." + key + ": missing field");
    return *it;
}

template <typename T>
T get_as(const json& obj, const char* key, const std::string& path) {
    const auto& v = require(obj, key, path);
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw ParseError(path + "." + key + ": wrong type");
    }
}

template <typename T>
T get_or(const json& obj, const char* key, const std::string& path, T fallback) {
    if (!obj.contains(key)) return fallback;
    return get_as<T>(obj, key, path);
}

}  // namespace

std::string network_to_json(const QuantizedNetwork& net) {
    json j;
    j["format_version"] = kFormatVersion;
    j["name"] = net.name;
    j["bit_width"] = net.bit_width;
    j["seed"] = net.seed;
    j["input_shape"] = {{"channels", net.input.channels}, {"x", net.input.x}, {"y", net.input.y}};
    json layers = json::array();
    for (const auto& l : net.layers) {
        const auto& s = l.spec;
        json jl;
        jl["kind"] = std::string(to_string(s.kind));
        if (s.is_conv()) {
            jl["in_channels"] = s.in_channels;
            jl["out_kernels"] = s.out_kernels;
            jl["kernel_h"] = s.kernel_h;
            jl["kernel_w"] = s.kernel_w;
            jl["stride"] = s.stride;
            jl["padding"] = s.padding;
            jl["dilation"] = s.dilation;
            jl["in_x"] = s.in_x;
            jl["in_y"] = s.in_y;
        } else {
            jl["in_features"] = s.in_features;
            jl["out_features"] = s.out_features;
        }
        jl["shape"] = l.weights.shape;
        jl["scale"] = l.weights.scale;
        jl["codes"] = l.weights.codes;
        layers.push_back(std::move(jl));
    }
    j["layers"] = std::move(layers);
    return j.dump(1) + "\n";
}

QuantizedNetwork network_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("network: ") + e.what());
    }
    const std::string root = "network";
    const auto version = get_as<int>(j, "format_version", root);
    if (version != kFormatVersion)
        throw ParseError(root + ".format_version: unsupported version " + std::to_string(version));

    QuantizedNetwork net;
    net.name = get_as<std::string>(j, "name", root);
    net.bit_width = get_as<int>(j, "bit_width", root);
    net.seed = get_or<std::uint64_t>(j, "seed", root, 0);
    const auto& shape = require(j, "input_shape", root);
    net.input.channels = get_as<int>(shape, "channels", root + ".input_shape");
    net.input.x = get_as<int>(shape, "x", root + ".input_shape");
    net.input.y = get_as<int>(shape, "y", root + ".input_shape");

    const auto& layers = require(j, "layers", root);
    if (!layers.is_array()) throw ParseError(root + ".layers: expected an array");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string path = root + ".layers[" + std::to_string(i) + "]";
        const auto& jl = layers[i];
        Layer l;
        l.spec.kind = parse_layer_kind(get_as<std::string>(jl, "kind", path));
        if (l.spec.is_conv()) {
            l.spec.in_channels = get_as<int>(jl, "in_channels", path);
            l.spec.out_kernels = get_as<int>(jl, "out_kernels", path);
            l.spec.kernel_h = get_as<int>(jl, "kernel_h", path);
            l.spec.kernel_w = get_or<int>(jl, "kernel_w", path, 1);
            l.spec.stride = get_or<int>(jl, "stride", path, 1);
            l.spec.padding = get_or<int>(jl, "padding", path, 0);
            l.spec.dilation = get_or<int>(jl, "dilation", path, 1);
            l.spec.in_x = get_or<int>(jl, "in_x", path, 0);
            l.spec.in_y = get_or<int>(jl, "in_y", path, 1);
        } else {
            l.spec = LayerSpec::linear(get_as<int>(jl, "in_features", path),
                                       get_as<int>(jl, "out_features", path));
        }
        l.weights.bit_width = net.bit_width;
        l.weights.shape = get_as<std::vector<std::size_t>>(jl, "shape", path);
        l.weights.scale = get_as<double>(jl, "scale", path);
        l.weights.codes = get_as<std::vector<std::int32_t>>(jl, "codes", path);
        net.layers.push_back(std::move(l));
    }

    // Files written by older tools may omit the propagated extents.
    std::vector<LayerSpec> specs;
    for (const auto& l : net.layers) specs.push_back(l.spec);
    try {
        specs = propagate_shapes(net.input, specs);
    } catch (const InvalidArgument& e) {
        throw ValidationError(e.what());
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
        auto& s = net.layers[i].spec;
        if (s.is_conv() && s.in_x == 0) s.in_x = specs[i].in_x;
    }
    net.validate();
    return net;
}

void save_network(const QuantizedNetwork& net, const std::filesystem::path& path) {
    text::write_file(path, network_to_json(net));
}

QuantizedNetwork load_network(const std::filesystem::path& path) {
    return network_from_json(text::read_file(path));
}

// Dataset CSV:
//   # format_version: 1
//   # shape: C,X,Y
//   # classes: N
//   label,f0,f1,...
//   <label>,<features row-major>
std::string dataset_to_csv(const Dataset& data) {
    std::string out;
    out += "# format_version: " + std::to_string(kFormatVersion) + "\n";
    out += "# shape: " + std::to_string(data.shape.channels) + "," +
           std::to_string(data.shape.x) + "," + std::to_string(data.shape.y) + "\n";
    out += "# classes: " + std::to_string(data.class_count) + "\n";
    out += "label";
    for (std::size_t i = 0; i < data.shape.size(); ++i) out += ",f" + std::to_string(i);
    out += "\n";
    for (const auto& s : data.samples) {
        out += std::to_string(s.label);
        for (double f : s.features) {
            out += ',';
            out += text::format_double(f);
        }
        out += '\n';
    }
    return out;
}

Dataset dataset_from_csv(std::string_view contents) {
    Dataset d;
    bool have_version = false, have_shape = false, have_classes = false, have_header = false;
    std::size_t line_no = 0;
    for (auto line : text::lines(contents)) {
        ++line_no;
        const std::string where = "dataset line " + std::to_string(line_no);
        if (line.empty()) continue;
        if (line.front() == '#') {
            auto body = text::trim(line.substr(1));
            const auto colon = body.find(':');
            if (colon == std::string_view::npos) continue;
            const auto key = text::trim(body.substr(0, colon));
            const auto value = text::trim(body.substr(colon + 1));
            if (key == "format_version") {
                if (text::parse_int(value, where + " format_version") != kFormatVersion)
                    throw ParseError(where + ": unsupported format_version");
                have_version = true;
            } else if (key == "shape") {
                const auto dims = text::split(value, ',');
                if (dims.size() != 3) throw ParseError(where + ": shape needs 3 extents");
                d.shape = {int(text::parse_int(dims[0], where + " shape")),
                           int(text::parse_int(dims[1], where + " shape")),
                           int(text::parse_int(dims[2], where + " shape"))};
                have_shape = true;
            } else if (key == "classes") {
                d.class_count = int(text::parse_int(value, where + " classes"));
                have_classes = true;
            }
            continue;
        }
        if (!have_header) {
            if (!line.starts_with("label")) throw ParseError(where + ": expected header row");
            have_header = true;
            continue;
        }
        if (!have_shape || !have_classes) throw ParseError(where + ": missing shape/classes header");
        const auto fields = text::split(line, ',');
        if (fields.size() != d.shape.size() + 1)
            throw ParseError(where + ": expected " + std::to_string(d.shape.size() + 1) +
                             " fields, got " + std::to_string(fields.size()));
        Sample s;
        s.label = int(text::parse_int(fields[0], where + " label"));
        s.features.reserve(d.shape.size());
        for (std::size_t i = 1; i < fields.size(); ++i)
            s.features.push_back(text::parse_double(fields[i], where + " feature"));
        d.samples.push_back(std::move(s));
    }
    if (!have_version) throw ParseError("dataset: missing format_version");
    if (!have_shape || !have_classes) throw ParseError("dataset: missing shape/classes header");
    d.validate();
    return d;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
    text::write_file(path, dataset_to_csv(data));
}

Dataset load_dataset(const std::filesystem::path& path) {
    return dataset_from_csv(text::read_file(path));
}

}  // namespace rram::qnet
