#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bfvae/error.hpp"

namespace bfvae::io {

/// Little-endian byte sink.
class ByteWriter {
public:
    void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }

    template <class UInt>
    void uint(UInt v) {
        for (std::size_t i = 0; i < sizeof(UInt); ++i)
            bytes_.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
    }

    void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }

    void f64s(std::span<const double> v) {
        for (double x : v) f64(x);
    }

    const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

/// Little-endian byte source with bounds checks.
class ByteReader {
public:
    explicit ByteReader(std::vector<std::uint8_t> bytes, std::string origin)
        : bytes_(std::move(bytes)), origin_(std::move(origin)) {}

    void expect_magic(std::string_view m) {
        need(m.size());
        if (std::memcmp(bytes_.data() + pos_, m.data(), m.size()) != 0)
            throw IoError(origin_ + ": bad magic, expected '" + std::string(m) + "'");
        pos_ += m.size();
    }

    template <class UInt>
    UInt uint() {
        need(sizeof(UInt));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(UInt); ++i)
            v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += sizeof(UInt);
        return static_cast<UInt>(v);
    }

    double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }

    void f64s(std::span<double> out) {
        need(out.size() * 8);
        for (double& v : out) v = f64();
    }

    bool at_end() const noexcept { return pos_ == bytes_.size(); }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
    const std::string& origin() const noexcept { return origin_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw IoError(origin_ + ": truncated file");
    }

    std::vector<std::uint8_t> bytes_;
    std::size_t pos_ = 0;
    std::string origin_;
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace bfvae::io
