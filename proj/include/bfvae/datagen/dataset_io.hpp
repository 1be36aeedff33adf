#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "bfvae/datagen/dataset.hpp"
#include "bfvae/error.hpp"
#include "bfvae/io/binary.hpp"

namespace bfvae {

// BFQD layout (little-endian):
//   "BFQD" | u16 version=1 | u8 kind | u32 D | u64 rows
//   rows x row_width f64   (row_width = 2D for paired, else D)
//   rows x { u32 len | len x f64 }   input log
inline constexpr std::string_view kDatasetMagic = "BFQD";
inline constexpr std::uint16_t kDatasetVersion = 1;

inline std::vector<std::uint8_t> encode_dataset(const QoiDataset& ds) {
    ds.validate();
    io::ByteWriter w;
    w.magic(kDatasetMagic);
    w.uint<std::uint16_t>(kDatasetVersion);
    w.uint<std::uint8_t>(static_cast<std::uint8_t>(ds.kind));
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(ds.dim));
    w.uint<std::uint64_t>(ds.count());
    w.f64s(ds.rows.flat());
    for (const auto& in : ds.inputs) {
        w.uint<std::uint32_t>(static_cast<std::uint32_t>(in.size()));
        w.f64s(in);
    }
    return w.bytes();
}

inline QoiDataset decode_dataset(std::vector<std::uint8_t> bytes, const std::string& origin) {
    io::ByteReader r(std::move(bytes), origin);
    r.expect_magic(kDatasetMagic);
    const auto version = r.uint<std::uint16_t>();
    if (version != kDatasetVersion)
        throw IoError(origin + ": unsupported dataset version " + std::to_string(version));
    const auto kind = r.uint<std::uint8_t>();
    if (kind > 2) throw IoError(origin + ": invalid dataset kind " + std::to_string(kind));
    QoiDataset ds;
    ds.kind = static_cast<DatasetKind>(kind);
    ds.dim = r.uint<std::uint32_t>();
    const auto count = r.uint<std::uint64_t>();
    if (count > r.remaining() / 8 + 1) throw IoError(origin + ": implausible row count");
    ds.rows = Matrix(count, ds.row_width());
    r.f64s(ds.rows.flat());
    ds.inputs.resize(count);
    for (auto& in : ds.inputs) {
        const auto len = r.uint<std::uint32_t>();
        in.resize(len);
        r.f64s(in);
    }
    if (!r.at_end()) throw IoError(origin + ": trailing bytes after dataset");
    return ds;
}

inline void save_dataset(const std::filesystem::path& path, const QoiDataset& ds) {
    io::write_file(path, encode_dataset(ds));
}

inline QoiDataset load_dataset_bfqd(const std::filesystem::path& path) {
    return decode_dataset(io::read_file(path), path.string());
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string matrix_to_csv(const Matrix& m) {
    std::string out;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += format_double(row[c]);
        }
        out += '\n';
    }
    return out;
}

/// Headerless numeric CSV; every non-blank line must have the same width.
inline Matrix parse_csv_matrix(std::istream& in, const std::string& origin) {
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::size_t n = 0;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            std::string_view field = rest.substr(0, comma);
            while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
            while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
                throw IoError(origin + ":" + std::to_string(line_no) + ": not a number: '" +
                              std::string(field) + "'");
            values.push_back(v);
            ++n;
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (rows == 0) cols = n;
        else if (n != cols)
            throw IoError(origin + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                          " columns, found " + std::to_string(n));
        ++rows;
    }
    return Matrix(rows, cols, std::move(values));
}

inline QoiDataset load_dataset_csv(const std::filesystem::path& path, DatasetKind kind) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    QoiDataset ds;
    ds.kind = kind;
    ds.rows = parse_csv_matrix(in, path.string());
    if (kind == DatasetKind::Paired) {
        if (ds.rows.cols() % 2 != 0)
            throw UsageError(path.string() + ": paired CSV needs an even column count (2D)");
        ds.dim = ds.rows.cols() / 2;
    } else {
        ds.dim = ds.rows.cols();
    }
    ds.inputs.assign(ds.rows.rows(), Vector{});
    return ds;
}

/// BFQD by magic; anything else is read as CSV of the given kind.
inline QoiDataset load_dataset(const std::filesystem::path& path, DatasetKind csv_kind = DatasetKind::LfOnly) {
    auto bytes = io::read_file(path);
    if (bytes.size() >= 4 && std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) == kDatasetMagic)
        return decode_dataset(std::move(bytes), path.string());
    return load_dataset_csv(path, csv_kind);
}

}  // namespace bfvae
