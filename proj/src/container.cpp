#include "nlz/container.hpp"

#include <cstring>
#include <fstream>
#include <set>

#include "nlz/error.hpp"

namespace nlz {

const FieldRecord& Container::field(const std::string& name) const {
    for (const auto& f : fields)
        if (f.name == name) return f;
    throw Error(ErrorKind::ConfigError, "container has no field '" + name + "'");
}

namespace {

void write_section(ByteWriter& w, std::uint32_t tag, std::span<const std::uint8_t> body) {
    w.put<std::uint32_t>(tag);
    w.put<std::uint32_t>(0);
    w.put<std::uint64_t>(body.size());
    w.put_bytes(body);
    w.pad_to(8);
}

Bytes encode_field(const FieldRecord& f) {
    ByteWriter w;
    w.put_string(f.name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(f.aux.size()));
    for (const auto& a : f.aux) w.put_string(a);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(f.blocks.size()));
    for (const auto& b : f.blocks) {
        w.put<std::uint64_t>(b.start);
        w.put<std::uint64_t>(b.extent);
        w.put<double>(b.abs);
        std::uint8_t flags = (b.has_enhancer() ? 1 : 0) | (b.diverged ? 2 : 0) | (b.coords_present ? 4 : 0);
        w.put<std::uint8_t>(flags);
        w.put<std::uint8_t>(static_cast<std::uint8_t>(b.weight_precision));
        w.put<std::uint16_t>(0);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(b.input_norms.size()));
        for (const auto& n : b.input_norms) {
            w.put<double>(n.lo);
            w.put<double>(n.hi);
        }
        w.put<double>(b.target_norm.lo);
        w.put<double>(b.target_norm.hi);
        w.put_blob(b.payload);
        w.put_blob(b.weights);
        w.put_blob(b.outliers);
    }
    return w.take();
}

FieldRecord decode_field(std::span<const std::uint8_t> body) {
    ByteReader r(body, ErrorKind::SectionLengthMismatch);
    FieldRecord f;
    f.name = r.get_string();
    const auto naux = r.get<std::uint32_t>();
    if (naux > r.remaining() / 4) throw Error(ErrorKind::SectionLengthMismatch, "aux list exceeds section");
    for (std::uint32_t i = 0; i < naux; ++i) f.aux.push_back(r.get_string());
    const auto nblocks = r.get<std::uint32_t>();
    if (nblocks > r.remaining() / 40) throw Error(ErrorKind::SectionLengthMismatch, "block list exceeds section");
    for (std::uint32_t i = 0; i < nblocks; ++i) {
        BlockRecord b;
        b.start = r.get<std::uint64_t>();
        b.extent = r.get<std::uint64_t>();
        b.abs = r.get<double>();
        const auto flags = r.get<std::uint8_t>();
        b.diverged = flags & 2;
        b.coords_present = flags & 4;
        const auto wp = r.get<std::uint8_t>();
        if (wp > 1) throw Error(ErrorKind::SectionLengthMismatch, "unknown weight precision tag");
        b.weight_precision = static_cast<Precision>(wp);
        r.get<std::uint16_t>();
        const auto nnorm = r.get<std::uint32_t>();
        if (nnorm > r.remaining() / 16) throw Error(ErrorKind::SectionLengthMismatch, "norm list exceeds section");
        for (std::uint32_t k = 0; k < nnorm; ++k) {
            NormParams n;
            n.lo = r.get<double>();
            n.hi = r.get<double>();
            b.input_norms.push_back(n);
        }
        b.target_norm.lo = r.get<double>();
        b.target_norm.hi = r.get<double>();
        b.payload = r.get_blob();
        b.weights = r.get_blob();
        b.outliers = r.get_blob();
        if (static_cast<bool>(flags & 1) != b.has_enhancer())
            throw Error(ErrorKind::SectionLengthMismatch, "enhancer flag disagrees with weight blob");
        f.blocks.push_back(std::move(b));
    }
    if (!r.at_end()) throw Error(ErrorKind::SectionLengthMismatch, "field section has trailing bytes");
    return f;
}

void validate(const Container& c) {
    std::set<std::string> names;
    for (const auto& f : c.fields)
        if (!names.insert(f.name).second) throw Error(ErrorKind::ConfigError, "duplicate field '" + f.name + "'");
    for (const auto& f : c.fields)
        for (const auto& a : f.aux)
            if (!names.count(a))
                throw Error(ErrorKind::ConfigError, "aux field '" + a + "' of '" + f.name + "' is not in the container");
}

} // namespace

Bytes write_container(const Container& c) {
    validate(c);
    ByteWriter w;
    w.put_bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(kContainerMagic), 5));
    w.put<std::uint8_t>(c.header.version);
    w.put<std::uint16_t>(c.header.flags);
    for (auto d : c.header.dims) w.put<std::uint64_t>(d);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(c.header.precision));
    w.put<std::uint8_t>(c.header.slice_axis);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(c.header.mode));
    w.put<std::uint8_t>(0);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.fields.size()));
    w.put<double>(c.header.rel);
    for (const auto& f : c.fields) write_section(w, kFieldTag, encode_field(f));
    if (!c.report_json.empty())
        write_section(w, kReportTag,
                      std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(c.report_json.data()),
                                                    c.report_json.size()));
    for (const auto& s : c.extra) write_section(w, s.tag, s.body);
    return w.take();
}

Container read_container(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 5 || std::memcmp(bytes.data(), kContainerMagic, 5) != 0)
        throw Error(ErrorKind::BadMagic, "not an NRLZ container");
    ByteReader r(bytes, ErrorKind::SectionLengthMismatch);
    r.get_bytes(5);
    Container c;
    c.header.version = r.get<std::uint8_t>();
    if (c.header.version != kContainerVersion)
        throw Error(ErrorKind::VersionUnsupported, "container version " + std::to_string(c.header.version));
    c.header.flags = r.get<std::uint16_t>();
    for (auto& d : c.header.dims) d = r.get<std::uint64_t>();
    const auto prec = r.get<std::uint8_t>();
    if (prec > 1) throw Error(ErrorKind::SectionLengthMismatch, "unknown precision tag");
    c.header.precision = static_cast<Precision>(prec);
    c.header.slice_axis = r.get<std::uint8_t>();
    const auto mode = r.get<std::uint8_t>();
    if (mode > 1) throw Error(ErrorKind::SectionLengthMismatch, "unknown bound mode");
    c.header.mode = static_cast<BoundMode>(mode);
    r.get<std::uint8_t>();
    const auto nfields = r.get<std::uint32_t>();
    c.header.rel = r.get<double>();

    while (!r.at_end()) {
        const auto tag = r.get<std::uint32_t>();
        r.get<std::uint32_t>();
        const auto len = r.get<std::uint64_t>();
        if (len > r.remaining()) throw Error(ErrorKind::SectionLengthMismatch, "section longer than file");
        auto body = r.get_bytes(static_cast<std::size_t>(len));
        r.skip_to_alignment(8);
        if (tag == kFieldTag) c.fields.push_back(decode_field(body));
        else if (tag == kReportTag) c.report_json.assign(body.begin(), body.end());
        else c.extra.push_back({tag, Bytes(body.begin(), body.end())});
    }
    if (c.fields.size() != nfields)
        throw Error(ErrorKind::SectionLengthMismatch, "header field count does not match field sections");
    validate(c);
    return c;
}

void save_container(const std::filesystem::path& path, const Container& c) {
    auto bytes = write_container(c);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

Container load_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return read_container(bytes);
}

ContainerSizes container_sizes(const Container& c) {
    ContainerSizes s;
    for (const auto& f : c.fields)
        for (const auto& b : f.blocks) {
            s.payload_bits += b.payload.size() * 8ull;
            s.model_bits += b.weights.size() * 8ull;
            s.coords_bits += b.outliers.size() * 8ull;
        }
    s.total_bits = write_container(c).size() * 8ull;
    s.framing_bits = s.total_bits - s.payload_bits - s.model_bits - s.coords_bits;
    return s;
}

} // namespace nlz
