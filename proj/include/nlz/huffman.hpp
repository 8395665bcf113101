#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nlz/bytes.hpp"

namespace nlz {

// Canonical Huffman table: (symbol, code length) pairs sorted by
// (length, symbol). A single-symbol alphabet gets length 0 and costs no bits.
struct HuffmanTable {
    struct Entry {
        std::uint32_t symbol;
        std::uint8_t length;
        bool operator==(const Entry&) const = default;
    };
    std::vector<Entry> entries;

    bool operator==(const HuffmanTable&) const = default;

    double kraft_sum() const;
    void serialize(ByteWriter& w) const;
    static HuffmanTable deserialize(ByteReader& r);
    std::size_t serialized_size() const { return 4 + entries.size() * 5; }
};

HuffmanTable build_huffman_table(std::span<const std::uint32_t> symbols);

struct HuffmanStream {
    HuffmanTable table;
    Bytes bits;
    std::uint64_t bit_count = 0;
};

HuffmanStream huffman_encode(std::span<const std::uint32_t> symbols);

// Throws CorruptPayload when the stream runs out or contains an invalid code.
std::vector<std::uint32_t> huffman_decode(std::span<const std::uint8_t> bits, std::uint64_t bit_count,
                                          const HuffmanTable& table, std::size_t n);

} // namespace nlz
