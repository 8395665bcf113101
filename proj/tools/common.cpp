#include "common.hpp"

#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "nlz/error.hpp"

namespace nlz::cli {

FieldInput parse_field_arg(const std::string& arg) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) return {std::filesystem::path(arg).stem().string(), arg};
    if (eq == 0 || eq + 1 == arg.size()) throw UsageError("malformed --field '" + arg + "', expected NAME=PATH");
    return {arg.substr(0, eq), arg.substr(eq + 1)};
}

Dims parse_dims(const std::string& text) {
    Dims d{0, 0, 0};
    std::stringstream ss(text);
    std::string part;
    std::size_t i = 0;
    while (std::getline(ss, part, ',')) {
        if (i == 3) throw UsageError("--dims takes exactly three values");
        try {
            std::size_t used = 0;
            const long long v = std::stoll(part, &used);
            if (used != part.size() || v <= 0) throw std::invalid_argument(part);
            d[i++] = static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            throw UsageError("bad --dims component '" + part + "'");
        }
    }
    if (i != 3) throw UsageError("--dims takes exactly three values, e.g. 64,64,64");
    return d;
}

std::string dims_text(const Dims& d) {
    return std::to_string(d[0]) + "," + std::to_string(d[1]) + "," + std::to_string(d[2]);
}

FieldSet load_fields(const InputSpec& spec) {
    if (spec.fields.empty()) throw UsageError("no input fields (use --field NAME=PATH)");
    FieldSet fs;
    for (const auto& f : spec.fields) {
        try {
            fs.add(load_raw(f.path, spec.dims, spec.precision, spec.order, f.name));
        } catch (const Error& e) {
            throw Error(e.kind(), "field '" + f.name + "': " + e.what());
        }
    }
    return fs;
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

std::string sha256_hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sha256_hex(bytes);
}

json config_to_json(const PipelineConfig& c) {
    json aux = json::object();
    for (const auto& [k, v] : c.aux_map) aux[k] = v;
    return {
        {"rel", c.rel},
        {"radius", c.radius},
        {"mode", to_string(c.mode)},
        {"slice_axis", c.slice_axis},
        {"aux_map", aux},
        {"ablation",
         {{"single_field", c.ablation.single_field},
          {"no_skip", c.ablation.no_skip},
          {"direct_targets", c.ablation.direct_targets}}},
        {"targets", c.targets},
        {"enhance", c.enhance},
        {"outlier_factor", c.outlier_factor},
        {"fallback_if_no_gain", c.fallback_if_no_gain},
        {"block_extent", c.block_extent},
        {"seed", c.seed},
        {"jobs", c.jobs},
        {"net",
         {{"base_width", c.net.base_width},
          {"levels", c.net.levels},
          {"kernel", c.net.kernel},
          {"final_sigmoid", c.net.final_sigmoid}}},
        {"train",
         {{"epochs", c.train.epochs},
          {"batch", c.train.batch},
          {"lr0", c.train.lr0},
          {"optimizer", c.train.optimizer == OptimizerKind::Adam ? "adam" : "sgd"}}},
    };
}

PipelineConfig config_from_json(const json& j) {
    PipelineConfig c;
    c.rel = j.at("rel");
    c.radius = j.at("radius");
    c.mode = parse_bound_mode(j.at("mode"));
    c.slice_axis = j.at("slice_axis");
    for (const auto& [k, v] : j.at("aux_map").items()) c.aux_map[k] = v.get<std::vector<std::string>>();
    const auto& a = j.at("ablation");
    c.ablation.single_field = a.at("single_field");
    c.ablation.no_skip = a.at("no_skip");
    c.ablation.direct_targets = a.at("direct_targets");
    c.targets = j.at("targets").get<std::vector<std::string>>();
    c.enhance = j.at("enhance");
    c.outlier_factor = j.at("outlier_factor");
    c.fallback_if_no_gain = j.at("fallback_if_no_gain");
    c.block_extent = j.at("block_extent");
    c.seed = j.at("seed");
    c.jobs = j.at("jobs");
    const auto& n = j.at("net");
    c.net.base_width = n.at("base_width");
    c.net.levels = n.at("levels");
    c.net.kernel = n.at("kernel");
    c.net.final_sigmoid = n.at("final_sigmoid");
    const auto& t = j.at("train");
    c.train.epochs = t.at("epochs");
    c.train.batch = t.at("batch");
    c.train.lr0 = t.at("lr0");
    c.train.optimizer = t.at("optimizer") == "sgd" ? OptimizerKind::Sgd : OptimizerKind::Adam;
    return c;
}

json input_to_json(const InputSpec& spec, bool with_digests) {
    json fields = json::array();
    for (const auto& f : spec.fields) {
        json e{{"name", f.name}, {"path", f.path.string()}};
        if (with_digests) {
            e["sha256"] = sha256_hex(f.path);
            e["bytes"] = std::filesystem::file_size(f.path);
        }
        fields.push_back(std::move(e));
    }
    return {{"dims", spec.dims},
            {"precision", to_string(spec.precision)},
            {"order", spec.order == RawOrder::Row ? "row" : "column"},
            {"fields", fields}};
}

InputSpec input_from_json(const json& j) {
    InputSpec s;
    s.dims = j.at("dims").get<Dims>();
    s.precision = parse_precision(j.at("precision"));
    s.order = j.at("order") == "column" ? RawOrder::Column : RawOrder::Row;
    for (const auto& f : j.at("fields")) s.fields.push_back({f.at("name"), f.at("path").get<std::string>()});
    return s;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& container) {
    auto p = container;
    p.replace_extension(".manifest.json");
    return p;
}

std::string version_string() { return "nlz 0.1.0"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out << text;
}

} // namespace nlz::cli
