#pragma once

// Synthetic one-class anomaly benchmark.
//
// Normal images are smooth textures: 2-4 low-frequency sinusoidal gratings
// plus one roughly centered Gaussian blob, min-max normalized to [0, 1] and
// quantized to multiples of 1/255 so they survive 8-bit storage unchanged.
// Anomalies alter one k x k square, k in [min(h,w)/8, min(h,w)/4].

#include "d2ue/image.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace d2ue {

enum class AnomalyKind { bright_patch, frequency_shift, deletion };

std::string_view to_string(AnomalyKind kind);

/// Grating frequency range for normal textures, in cycles per image.
inline constexpr double kMinNormalFrequency = 0.25;
inline constexpr double kMaxNormalFrequency = 0.5;

std::vector<Image> generate_normal(std::uint64_t seed, std::size_t count, std::size_t height,
                                   std::size_t width);

struct InjectedAnomaly {
    Image image;
    std::vector<std::uint8_t> mask;  // 1 inside the altered square
    std::size_t patch_size = 0;
    std::size_t row = 0;
    std::size_t col = 0;
};

InjectedAnomaly inject_anomaly(const Image& image, std::uint64_t seed, AnomalyKind kind);

struct BenchmarkParams {
    std::uint64_t seed = 0;
    std::size_t n_train = 200;
    std::size_t n_test_normal = 50;
    std::size_t n_test_anom = 50;
    std::size_t height = 16;
    std::size_t width = 16;

    void validate() const;
};

struct Split {
    std::vector<Image> images;
    std::vector<int> labels;  // 0 normal, 1 anomalous
};

/// Train split holds normal images only. Test split lists the normal images
/// first, then the anomalous ones with kinds cycling bright_patch,
/// frequency_shift, deletion.
struct Dataset {
    BenchmarkParams params;
    Split train;
    Split test;
    std::vector<std::vector<std::uint8_t>> test_masks;  // empty for normal images
};

Dataset make_benchmark(const BenchmarkParams& params);

}  // namespace d2ue
