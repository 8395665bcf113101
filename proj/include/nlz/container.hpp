#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nlz/bytes.hpp"
#include "nlz/error_control.hpp"
#include "nlz/field.hpp"

namespace nlz {

inline constexpr char kContainerMagic[5] = {'N', 'R', 'L', 'Z', '1'};
inline constexpr std::uint8_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 48;
inline constexpr std::size_t kSectionHeaderBytes = 16;

// Section tags (little-endian four-character codes).
inline constexpr std::uint32_t fourcc(const char (&s)[5]) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(s[0])) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(s[1])) << 8 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(s[2])) << 16 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(s[3])) << 24;
}
inline constexpr std::uint32_t kFieldTag = fourcc("FLD ");
inline constexpr std::uint32_t kReportTag = fourcc("RPRT");

// Header flag bits.
inline constexpr std::uint16_t kFlagFallback = 1;  // some block stored without an enhancer

// One block of a field: a slab [start, start + extent) along axis 0.
struct BlockRecord {
    std::uint64_t start = 0;
    std::uint64_t extent = 0;
    double abs = 0.0;
    bool diverged = false;            // training failed; stored decompressed-only
    bool coords_present = false;      // strict mode: outlier blob is meaningful
    Precision weight_precision = Precision::F32;
    std::vector<NormParams> input_norms;  // one per network input channel
    NormParams target_norm;               // denormalization for direct targets
    Bytes payload;                        // baseline codec payload
    Bytes weights;                        // empty when no enhancer
    Bytes outliers;                       // empty when no coordinates stored

    bool has_enhancer() const { return !weights.empty(); }
    bool operator==(const BlockRecord&) const = default;
};

struct FieldRecord {
    std::string name;
    std::vector<std::string> aux;  // names of fields feeding extra input channels
    std::vector<BlockRecord> blocks;

    bool operator==(const FieldRecord&) const = default;
};

struct ContainerHeader {
    std::uint8_t version = kContainerVersion;
    std::uint16_t flags = 0;
    Dims dims{0, 0, 0};
    Precision precision = Precision::F32;
    std::uint8_t slice_axis = 0;
    BoundMode mode = BoundMode::Strict1x;
    double rel = 0.0;

    bool operator==(const ContainerHeader&) const = default;
};

// A section with a tag this version does not interpret; kept verbatim.
struct RawSection {
    std::uint32_t tag = 0;
    Bytes body;
    bool operator==(const RawSection&) const = default;
};

struct Container {
    ContainerHeader header;
    std::vector<FieldRecord> fields;
    std::string report_json;  // optional compression-time report
    std::vector<RawSection> extra;

    const FieldRecord& field(const std::string& name) const;
    bool operator==(const Container&) const = default;
};

Bytes write_container(const Container& c);
Container read_container(std::span<const std::uint8_t> bytes);

void save_container(const std::filesystem::path& path, const Container& c);
Container load_container(const std::filesystem::path& path);

struct ContainerSizes {
    std::uint64_t payload_bits = 0;
    std::uint64_t model_bits = 0;
    std::uint64_t coords_bits = 0;
    std::uint64_t framing_bits = 0;  // headers, names, norms, report, alignment padding
    std::uint64_t total_bits = 0;    // serialized size * 8
};

ContainerSizes container_sizes(const Container& c);

} // namespace nlz
