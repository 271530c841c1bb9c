#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace d2ue {

/// Row-major grayscale image with real intensities (nominally in [0, 1]).
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), pixels(h * w, fill) {}
    Image(std::size_t h, std::size_t w, std::vector<double> values)
        : height(h), width(w), pixels(std::move(values)) {}

    std::size_t size() const { return pixels.size(); }
    double& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
    double at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }

    bool operator==(const Image&) const = default;
};

/// 8-bit grayscale raster as stored in PGM / IDX files.
struct Gray8 {
    std::size_t height = 0;
    std::size_t width = 0;
    std::uint8_t maxval = 255;
    std::vector<std::uint8_t> pixels;

    bool operator==(const Gray8&) const = default;
};

}  // namespace d2ue
