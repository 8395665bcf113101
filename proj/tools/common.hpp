#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlz/field.hpp"
#include "nlz/pipeline.hpp"

namespace nlz::cli {

using json = nlohmann::json;

// Usage problems detected after CLI11 parsing (exit code 2).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FieldInput {
    std::string name;
    std::filesystem::path path;
};

// "name=path" or a bare path (name = file stem).
FieldInput parse_field_arg(const std::string& arg);
Dims parse_dims(const std::string& text);
std::string dims_text(const Dims& d);

struct InputSpec {
    std::vector<FieldInput> fields;
    Dims dims{0, 0, 0};
    Precision precision = Precision::F32;
    RawOrder order = RawOrder::Row;
};

FieldSet load_fields(const InputSpec& spec);

std::string sha256_hex(const std::filesystem::path& path);
std::string sha256_hex(std::span<const std::uint8_t> bytes);

json config_to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const json& j);

json input_to_json(const InputSpec& spec, bool with_digests);
InputSpec input_from_json(const json& j);

// Sidecar path: foo.nlz -> foo.manifest.json
std::filesystem::path manifest_path_for(const std::filesystem::path& container);

std::string version_string();

void write_text(const std::filesystem::path& path, const std::string& text);

} // namespace nlz::cli
