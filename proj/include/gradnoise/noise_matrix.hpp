#pragma once

#include "error.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

namespace gradnoise {

/// Provenance carried alongside a NoiseMatrix.
struct NoiseMeta {
    std::int64_t iteration = -1;
    std::uint64_t batch_size = 0;
    std::uint64_t seed = 0;
};

inline void to_json(nlohmann::json& j, const NoiseMeta& m) {
    j = nlohmann::json{{"iteration", m.iteration}, {"batch_size", m.batch_size}, {"seed", m.seed}};
}

inline void from_json(const nlohmann::json& j, NoiseMeta& m) {
    m.iteration = j.value("iteration", std::int64_t{-1});
    m.batch_size = j.value("batch_size", std::uint64_t{0});
    m.seed = j.value("seed", std::uint64_t{0});
}

/// M noise vectors of dimension p, stored row-major.
class NoiseMatrix {
public:
    static constexpr std::size_t min_rows = 8;

    NoiseMatrix() = default;

    NoiseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data, NoiseMeta meta = {})
        : rows_(rows), cols_(cols), data_(std::move(data)), meta_(meta) {
        validate();
    }

    static NoiseMatrix zeros(std::size_t rows, std::size_t cols, NoiseMeta meta = {}) {
        return NoiseMatrix(rows, cols, std::vector<double>(rows * cols, 0.0), meta);
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    const NoiseMeta& meta() const noexcept { return meta_; }
    NoiseMeta& meta() noexcept { return meta_; }

    void validate() const {
        require(rows_ >= min_rows, ErrorKind::shape,
                "NoiseMatrix needs at least 8 rows, got " + std::to_string(rows_));
        require(cols_ >= 1, ErrorKind::shape, "NoiseMatrix needs at least one column");
        require(data_.size() == rows_ * cols_, ErrorKind::shape, "NoiseMatrix data size does not equal rows * cols");
        for (double x : data_) require(std::isfinite(x), ErrorKind::format, "NoiseMatrix contains a non-finite entry");
    }

    friend bool operator==(const NoiseMatrix& a, const NoiseMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
    NoiseMeta meta_;
};

// Binary layout: "SGNMAT01", u64 M, u64 p, M*p f64 row-major, all
// little-endian, then a UTF-8 JSON object with the meta fields up to EOF.
inline constexpr char noise_magic[8] = {'S', 'G', 'N', 'M', 'A', 'T', '0', '1'};

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

}  // namespace detail

inline std::string encode_noise_matrix(const NoiseMatrix& m) {
    std::string out;
    out.reserve(24 + 8 * m.data().size() + 64);
    out.append(noise_magic, sizeof noise_magic);
    detail::put_u64(out, m.rows());
    detail::put_u64(out, m.cols());
    for (double x : m.data()) detail::put_u64(out, std::bit_cast<std::uint64_t>(x));
    out += nlohmann::json(m.meta()).dump();
    return out;
}

inline NoiseMatrix decode_noise_matrix(std::span<const unsigned char> bytes) {
    require(bytes.size() >= 24, ErrorKind::format, "noise matrix file is truncated (header)");
    require(std::memcmp(bytes.data(), noise_magic, 8) == 0, ErrorKind::format, "noise matrix file has bad magic");
    const std::uint64_t rows = detail::get_u64(bytes.data() + 8);
    const std::uint64_t cols = detail::get_u64(bytes.data() + 16);
    require(cols == 0 || rows <= (bytes.size() - 24) / 8 / cols, ErrorKind::format,
            "noise matrix file is truncated (payload)");
    const std::size_t count = rows * cols;
    std::vector<double> data(count);
    const unsigned char* p = bytes.data() + 24;
    for (std::size_t i = 0; i < count; ++i, p += 8) data[i] = std::bit_cast<double>(detail::get_u64(p));

    NoiseMeta meta;
    const std::string trailer(reinterpret_cast<const char*>(p), bytes.data() + bytes.size() - p);
    if (!trailer.empty()) {
        try {
            meta = nlohmann::json::parse(trailer).get<NoiseMeta>();
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::format, std::string("noise matrix JSON trailer is invalid: ") + e.what());
        }
    }
    return NoiseMatrix(rows, cols, std::move(data), meta);
}

inline void write_noise_matrix(const std::filesystem::path& path, const NoiseMatrix& m) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::io, "cannot open " + path.string() + " for writing");
    const std::string bytes = encode_noise_matrix(m);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorKind::io, "failed writing " + path.string());
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline NoiseMatrix read_noise_matrix(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return decode_noise_matrix(bytes);
}

inline bool has_noise_magic(std::span<const unsigned char> bytes) {
    return bytes.size() >= 8 && std::memcmp(bytes.data(), noise_magic, 8) == 0;
}

}  // namespace gradnoise
