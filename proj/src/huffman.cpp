#include "nlz/huffman.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>

#include "nlz/error.hpp"

namespace nlz {

namespace {

constexpr unsigned kMaxCodeLength = 63;

struct Node {
    std::uint64_t weight;
    std::uint32_t order;  // tie-break: creation order keeps construction deterministic
    int left = -1;
    int right = -1;
    std::uint32_t symbol = 0;
};

struct CanonicalCodes {
    std::vector<std::uint64_t> codes;  // parallel to table.entries
};

CanonicalCodes assign_codes(const HuffmanTable& table) {
    CanonicalCodes out;
    out.codes.resize(table.entries.size());
    std::uint64_t code = 0;
    unsigned prev_len = 0;
    for (std::size_t i = 0; i < table.entries.size(); ++i) {
        unsigned len = table.entries[i].length;
        if (i > 0) code = (code + 1) << (len - prev_len);
        out.codes[i] = code;
        prev_len = len;
    }
    return out;
}

} // namespace

double HuffmanTable::kraft_sum() const {
    double s = 0.0;
    for (const auto& e : entries) s += std::ldexp(1.0, -static_cast<int>(e.length));
    return s;
}

void HuffmanTable::serialize(ByteWriter& w) const {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
        w.put<std::uint32_t>(e.symbol);
        w.put<std::uint8_t>(e.length);
    }
}

HuffmanTable HuffmanTable::deserialize(ByteReader& r) {
    HuffmanTable t;
    auto n = r.get<std::uint32_t>();
    if (n > r.remaining() / 5) throw Error(ErrorKind::CorruptPayload, "huffman table larger than payload");
    t.entries.resize(n);
    for (auto& e : t.entries) {
        e.symbol = r.get<std::uint32_t>();
        e.length = r.get<std::uint8_t>();
        if (e.length > kMaxCodeLength) throw Error(ErrorKind::CorruptPayload, "huffman code length too large");
    }
    for (std::size_t i = 1; i < t.entries.size(); ++i) {
        const auto& a = t.entries[i - 1];
        const auto& b = t.entries[i];
        if (a.length > b.length || (a.length == b.length && a.symbol >= b.symbol))
            throw Error(ErrorKind::CorruptPayload, "huffman table not in canonical order");
    }
    if (t.entries.size() > 1 && t.kraft_sum() > 1.0) throw Error(ErrorKind::CorruptPayload, "huffman table violates Kraft");
    return t;
}

HuffmanTable build_huffman_table(std::span<const std::uint32_t> symbols) {
    std::map<std::uint32_t, std::uint64_t> freq;
    for (auto s : symbols) ++freq[s];

    HuffmanTable table;
    if (freq.empty()) return table;
    if (freq.size() == 1) {
        table.entries.push_back({freq.begin()->first, 0});
        return table;
    }

    std::vector<Node> nodes;
    nodes.reserve(freq.size() * 2);
    auto cmp = [&](int a, int b) {
        if (nodes[a].weight != nodes[b].weight) return nodes[a].weight > nodes[b].weight;
        return nodes[a].order > nodes[b].order;
    };
    std::priority_queue<int, std::vector<int>, decltype(cmp)> heap(cmp);
    for (auto [sym, w] : freq) {
        nodes.push_back({w, static_cast<std::uint32_t>(nodes.size()), -1, -1, sym});
        heap.push(static_cast<int>(nodes.size() - 1));
    }
    while (heap.size() > 1) {
        int a = heap.top();
        heap.pop();
        int b = heap.top();
        heap.pop();
        nodes.push_back({nodes[a].weight + nodes[b].weight, static_cast<std::uint32_t>(nodes.size()), a, b, 0});
        heap.push(static_cast<int>(nodes.size() - 1));
    }

    // Depth of each leaf, iteratively.
    std::vector<std::pair<int, unsigned>> stack{{heap.top(), 0u}};
    while (!stack.empty()) {
        auto [id, depth] = stack.back();
        stack.pop_back();
        const Node& n = nodes[static_cast<std::size_t>(id)];
        if (n.left < 0) {
            if (depth > kMaxCodeLength) throw Error(ErrorKind::CorruptPayload, "huffman code length overflow");
            table.entries.push_back({n.symbol, static_cast<std::uint8_t>(depth)});
        } else {
            stack.push_back({n.left, depth + 1});
            stack.push_back({n.right, depth + 1});
        }
    }
    std::sort(table.entries.begin(), table.entries.end(), [](const auto& a, const auto& b) {
        return a.length != b.length ? a.length < b.length : a.symbol < b.symbol;
    });
    return table;
}

HuffmanStream huffman_encode(std::span<const std::uint32_t> symbols) {
    HuffmanStream out;
    out.table = build_huffman_table(symbols);
    auto canon = assign_codes(out.table);
    std::map<std::uint32_t, std::pair<std::uint64_t, unsigned>> lookup;
    for (std::size_t i = 0; i < out.table.entries.size(); ++i)
        lookup[out.table.entries[i].symbol] = {canon.codes[i], out.table.entries[i].length};

    // Dense lookup when symbols are small (the codec's case).
    std::uint32_t max_sym = lookup.empty() ? 0 : lookup.rbegin()->first;
    std::vector<std::pair<std::uint64_t, unsigned>> dense;
    if (max_sym < (1u << 24)) {
        dense.assign(static_cast<std::size_t>(max_sym) + 1, {0, 0});
        for (auto& [s, c] : lookup) dense[s] = c;
    }

    BitWriter bw;
    for (auto s : symbols) {
        const auto& [code, len] = dense.empty() ? lookup[s] : dense[s];
        bw.put(code, len);
    }
    out.bit_count = bw.bit_count();
    out.bits = bw.take();
    return out;
}

std::vector<std::uint32_t> huffman_decode(std::span<const std::uint8_t> bits, std::uint64_t bit_count,
                                          const HuffmanTable& table, std::size_t n) {
    std::vector<std::uint32_t> out;
    if (n == 0) return out;
    if (table.entries.empty()) throw Error(ErrorKind::CorruptPayload, "empty huffman table for non-empty stream");
    out.reserve(n);
    if (table.entries.size() == 1) {
        out.assign(n, table.entries.front().symbol);
        return out;
    }

    // first code, first index and count per length
    std::vector<std::uint64_t> first_code(kMaxCodeLength + 2, 0);
    std::vector<std::size_t> first_index(kMaxCodeLength + 2, 0), count(kMaxCodeLength + 2, 0);
    auto canon = assign_codes(table);
    for (std::size_t i = 0; i < table.entries.size(); ++i) {
        unsigned len = table.entries[i].length;
        if (count[len] == 0) {
            first_code[len] = canon.codes[i];
            first_index[len] = i;
        }
        ++count[len];
    }

    BitReader br(bits, bit_count, ErrorKind::CorruptPayload);
    for (std::size_t k = 0; k < n; ++k) {
        std::uint64_t code = 0;
        unsigned len = 0;
        while (true) {
            code = (code << 1) | br.get_bit();
            ++len;
            if (len > kMaxCodeLength) throw Error(ErrorKind::CorruptPayload, "invalid huffman code");
            if (count[len] && code >= first_code[len] && code - first_code[len] < count[len]) {
                out.push_back(table.entries[first_index[len] + (code - first_code[len])].symbol);
                break;
            }
        }
    }
    return out;
}

} // namespace nlz
