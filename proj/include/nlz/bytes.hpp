#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nlz/error.hpp"

namespace nlz {

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

using Bytes = std::vector<std::uint8_t>;

// Append-only little-endian writer.
class ByteWriter {
public:
    template <typename T>
    void put(T value) {
        static_assert(std::is_trivially_copyable_v<T>);
        const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }

    void put_bytes(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

    void put_string(std::string_view s) {
        put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        buf_.insert(buf_.end(), s.begin(), s.end());
    }

    // u64 length prefix followed by the blob.
    void put_blob(std::span<const std::uint8_t> bytes) {
        put<std::uint64_t>(bytes.size());
        put_bytes(bytes);
    }

    void pad_to(std::size_t alignment) {
        while (buf_.size() % alignment != 0) buf_.push_back(0);
    }

    std::size_t size() const { return buf_.size(); }
    Bytes& bytes() { return buf_; }
    Bytes take() { return std::move(buf_); }

private:
    Bytes buf_;
};

// Bounds-checked reader; every overrun raises `overrun_kind`.
class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> data, ErrorKind overrun_kind)
        : data_(data), kind_(overrun_kind) {}

    template <typename T>
    T get() {
        static_assert(std::is_trivially_copyable_v<T>);
        require(sizeof(T));
        T value;
        std::memcpy(&value, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::span<const std::uint8_t> get_bytes(std::size_t n) {
        require(n);
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    std::string get_string() {
        auto n = get<std::uint32_t>();
        auto b = get_bytes(n);
        return std::string(b.begin(), b.end());
    }

    Bytes get_blob() {
        auto n = get<std::uint64_t>();
        auto b = get_bytes(n);
        return Bytes(b.begin(), b.end());
    }

    void skip_to_alignment(std::size_t alignment) {
        std::size_t target = (pos_ + alignment - 1) / alignment * alignment;
        require(target - pos_);
        pos_ = target;
    }

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    bool at_end() const { return pos_ == data_.size(); }

private:
    void require(std::size_t n) const {
        if (n > data_.size() - pos_) throw Error(kind_, "unexpected end of data");
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
    ErrorKind kind_;
};

// MSB-first bit packing shared by the Huffman stream and the outlier blob.
class BitWriter {
public:
    void put(std::uint64_t value, unsigned nbits) {
        for (unsigned i = nbits; i-- > 0;) put_bit((value >> i) & 1u);
    }

    void put_bit(unsigned bit) {
        if (nbits_ % 8 == 0) buf_.push_back(0);
        if (bit) buf_.back() |= static_cast<std::uint8_t>(0x80u >> (nbits_ % 8));
        ++nbits_;
    }

    std::uint64_t bit_count() const { return nbits_; }
    Bytes take() { return std::move(buf_); }

private:
    Bytes buf_;
    std::uint64_t nbits_ = 0;
};

class BitReader {
public:
    BitReader(std::span<const std::uint8_t> data, std::uint64_t nbits, ErrorKind overrun_kind)
        : data_(data), nbits_(nbits), kind_(overrun_kind) {
        if (nbits > data.size() * 8ull) throw Error(kind_, "bit count exceeds buffer");
    }

    unsigned get_bit() {
        if (pos_ >= nbits_) throw Error(kind_, "bit stream overrun");
        unsigned bit = (data_[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
        ++pos_;
        return bit;
    }

    std::uint64_t get(unsigned nbits) {
        std::uint64_t v = 0;
        for (unsigned i = 0; i < nbits; ++i) v = (v << 1) | get_bit();
        return v;
    }

    std::uint64_t position() const { return pos_; }

private:
    std::span<const std::uint8_t> data_;
    std::uint64_t nbits_;
    std::uint64_t pos_ = 0;
    ErrorKind kind_;
};

} // namespace nlz
