#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "scgan/error.hpp"

namespace scgan::io {

/// Shared container: "SCGN" magic, u16 version, block-type string, payload, CRC32 of everything before it.
/// All integers and floats are little-endian.
inline constexpr char kMagic[4] = {'S', 'C', 'G', 'N'};
inline constexpr std::uint16_t kVersion = 1;

inline std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size) {
    return static_cast<std::uint32_t>(::crc32(0L, data, static_cast<uInt>(size)));
}

class BinaryWriter {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u16(std::uint16_t v) { put_le(v); }
    void u32(std::uint32_t v) { put_le(v); }
    void u64(std::uint64_t v) { put_le(v); }
    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_le(bits);
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        put_le(bits);
    }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes_.insert(bytes_.end(), s.begin(), s.end());
    }
    void raw(const std::vector<std::uint8_t>& b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }

    /// Starts a container of the given block type.
    void header(std::string_view block_type) {
        bytes_.insert(bytes_.end(), std::begin(kMagic), std::end(kMagic));
        u16(kVersion);
        str(block_type);
    }

    /// Appends the CRC32 trailer and returns the finished byte stream.
    std::vector<std::uint8_t> finish() {
        const std::uint32_t crc = crc32_of(bytes_.data(), bytes_.size());
        u32(crc);
        return std::move(bytes_);
    }

    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

private:
    template <typename U>
    void put_le(U v) {
        for (std::size_t i = 0; i < sizeof(U); ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    std::vector<std::uint8_t> bytes_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint16_t u16() { return get_le<std::uint16_t>(); }
    std::uint32_t u32() { return get_le<std::uint32_t>(); }
    std::uint64_t u64() { return get_le<std::uint64_t>(); }
    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::vector<std::uint8_t> raw(std::size_t n) {
        need(n);
        std::vector<std::uint8_t> out(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                      bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return out;
    }

    /// Validates magic, version and CRC trailer; returns the block type and leaves the
    /// cursor at the start of the payload.
    std::string open() {
        if (bytes_.size() < sizeof(kMagic) + 2 + 4 + 4) throw FormatError("checkpoint truncated");
        if (std::memcmp(bytes_.data(), kMagic, 4) != 0) throw FormatError("bad checkpoint magic");
        pos_ = 4;
        const std::uint16_t version = u16();
        if (version != kVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
        const std::size_t body = bytes_.size() - 4;
        std::uint32_t stored = 0;
        for (std::size_t i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes_[body + i]) << (8 * i);
        if (crc32_of(bytes_.data(), body) != stored) throw FormatError("checkpoint CRC mismatch (corrupt or truncated)");
        end_ = body;
        return str();
    }

    bool at_end() const { return pos_ == end_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > end_) throw FormatError("checkpoint truncated");
    }

    template <typename U>
    U get_le() {
        need(sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
        pos_ += sizeof(U);
        return v;
    }

    std::vector<std::uint8_t> bytes_;
    std::size_t pos_ = 0;
    std::size_t end_ = static_cast<std::size_t>(-1);
};

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing " + path);
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace scgan::io
