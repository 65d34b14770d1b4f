#pragma once

#include "error.hpp"
#include "noise_matrix.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gradnoise {

/// n labelled examples with d real features and labels in [0, classes).
struct Dataset {
    std::size_t n = 0;
    std::size_t d = 0;
    std::size_t classes = 0;
    std::vector<double> inputs;  // n x d, row-major
    std::vector<std::uint32_t> labels;

    std::span<const double> input(std::size_t i) const noexcept { return {inputs.data() + i * d, d}; }

    void validate() const {
        require(n >= 1, ErrorKind::format, "dataset is empty");
        require(d >= 1 && classes >= 1, ErrorKind::format, "dataset needs d >= 1 and at least one class");
        require(inputs.size() == n * d && labels.size() == n, ErrorKind::format, "dataset arrays have wrong sizes");
        for (double x : inputs) require(std::isfinite(x), ErrorKind::format, "dataset contains a non-finite input");
        for (auto y : labels) require(y < classes, ErrorKind::format, "dataset label out of range");
    }
};

/// Gaussian blobs: class c is centred at a seeded N(0, I_d) point, examples
/// scatter around it with standard deviation `spread`. Labels cycle 0..C-1.
inline Dataset synth_blobs(std::size_t n, std::size_t d, std::size_t classes, double spread, std::uint64_t seed) {
    require(n >= 1 && d >= 1, ErrorKind::parameter, "synth_blobs needs n >= 1 and d >= 1");
    require(classes >= 2, ErrorKind::parameter, "synth_blobs needs at least two classes");
    require(spread >= 0.0 && std::isfinite(spread), ErrorKind::parameter, "synth_blobs spread must be >= 0");
    std::vector<double> centers(classes * d);
    for (std::size_t c = 0; c < classes; ++c) {
        Rng rng(derive_seed(seed, streams::blobs, c));
        for (std::size_t k = 0; k < d; ++k) centers[c * d + k] = rng.normal();
    }
    Dataset data;
    data.n = n;
    data.d = d;
    data.classes = classes;
    data.inputs.resize(n * d);
    data.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto label = static_cast<std::uint32_t>(i % classes);
        data.labels[i] = label;
        Rng rng(derive_seed(seed, streams::blobs + 1, i));
        for (std::size_t k = 0; k < d; ++k) data.inputs[i * d + k] = centers[label * d + k] + spread * rng.normal();
    }
    return data;
}

/// The first `count` examples.
inline Dataset head(const Dataset& data, std::size_t count) {
    require(count >= 1 && count <= data.n, ErrorKind::parameter, "subset size out of range");
    Dataset out = data;
    out.n = count;
    out.inputs.resize(count * data.d);
    out.labels.resize(count);
    return out;
}

// IDX: big-endian u32 magic (0x00000803 images / 0x00000801 labels), u32
// dimension sizes, then unsigned bytes.
namespace idx {

inline constexpr std::uint32_t images_magic = 0x00000803;
inline constexpr std::uint32_t labels_magic = 0x00000801;

inline std::uint32_t read_be32(std::span<const unsigned char> bytes, std::size_t offset) {
    require(bytes.size() >= offset + 4, ErrorKind::format, "IDX file is truncated (header)");
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

struct Images {
    std::size_t count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> pixels;  // scaled to [0, 1]
};

inline Images parse_images(std::span<const unsigned char> bytes) {
    require(read_be32(bytes, 0) == images_magic, ErrorKind::format, "IDX images file has bad magic");
    Images img;
    img.count = read_be32(bytes, 4);
    img.rows = read_be32(bytes, 8);
    img.cols = read_be32(bytes, 12);
    const std::size_t total = img.count * img.rows * img.cols;
    require(bytes.size() - 16 >= total, ErrorKind::format, "IDX images file is truncated");
    img.pixels.resize(total);
    for (std::size_t i = 0; i < total; ++i) img.pixels[i] = static_cast<double>(bytes[16 + i]) / 255.0;
    return img;
}

inline std::vector<std::uint32_t> parse_labels(std::span<const unsigned char> bytes) {
    require(read_be32(bytes, 0) == labels_magic, ErrorKind::format, "IDX labels file has bad magic");
    const std::size_t count = read_be32(bytes, 4);
    require(bytes.size() - 8 >= count, ErrorKind::format, "IDX labels file is truncated");
    return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

inline Dataset combine(Images images, std::vector<std::uint32_t> labels) {
    require(images.count == labels.size(), ErrorKind::format,
            "IDX count mismatch: " + std::to_string(images.count) + " images but " + std::to_string(labels.size()) +
                " labels");
    Dataset data;
    data.n = images.count;
    data.d = images.rows * images.cols;
    data.classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    data.inputs = std::move(images.pixels);
    data.labels = std::move(labels);
    data.validate();
    return data;
}

}  // namespace idx

inline Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    const auto image_bytes = read_file_bytes(images_path);
    const auto label_bytes = read_file_bytes(labels_path);
    return idx::combine(idx::parse_images(image_bytes), idx::parse_labels(label_bytes));
}

}  // namespace gradnoise
