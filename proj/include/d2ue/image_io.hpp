#pragma once

// File formats: binary PGM (P5), IDX archives (images 0x00000803, labels
// 0x00000801, big-endian header) and `image_id,label,score` CSV files.

#include "d2ue/image.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace d2ue {

// -- PGM ---------------------------------------------------------------------

std::vector<std::uint8_t> encode_pgm(const Gray8& image);
/// Accepts comments and arbitrary whitespace in the header; maxval <= 255.
Gray8 decode_pgm(std::span<const std::uint8_t> bytes);
void write_pgm(const std::filesystem::path& path, const Gray8& image);
Gray8 read_pgm(const std::filesystem::path& path);

/// round(clamp(v, 0, 1) * 255).
Gray8 to_gray8(const Image& image);
Image from_gray8(const Gray8& image);
/// Min-max normalizes to [0, 255]; a constant image maps to all zeros.
Gray8 normalize_to_gray8(const Image& image);

/// Places images left to right with a `gap`-pixel black separator. All
/// images must share one height.
Gray8 hconcat(std::span<const Gray8> images, std::size_t gap = 1);

// -- IDX ---------------------------------------------------------------------

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

std::vector<std::uint8_t> encode_idx_images(std::span<const Image> images);
/// Pixels are scaled by 1/255.
std::vector<Image> decode_idx_images(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_idx_labels(std::span<const int> labels);
std::vector<int> decode_idx_labels(std::span<const std::uint8_t> bytes);

void write_idx_images(const std::filesystem::path& path, std::span<const Image> images);
std::vector<Image> read_idx_images(const std::filesystem::path& path);
void write_idx_labels(const std::filesystem::path& path, std::span<const int> labels);
std::vector<int> read_idx_labels(const std::filesystem::path& path);

// -- scores CSV --------------------------------------------------------------

struct ScoreRow {
    std::size_t image_id = 0;
    int label = 0;
    double score = 0.0;

    bool operator==(const ScoreRow&) const = default;
};

/// Header `image_id,label,score`, then one line per row. Scores use the
/// shortest round-trip decimal form.
std::string format_scores_csv(std::span<const ScoreRow> rows);
std::vector<ScoreRow> parse_scores_csv(const std::string& text);
void write_scores_csv(const std::filesystem::path& path, std::span<const ScoreRow> rows);
std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& path);

}  // namespace d2ue
