#include "d2ue/image_io.hpp"

#include "d2ue/error.hpp"
#include "d2ue/file_util.hpp"
#include "d2ue/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace d2ue {
namespace {

bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

// Header token reader for PNM: skips whitespace and '#' comments.
class PnmHeader {
public:
    explicit PnmHeader(std::span<const std::uint8_t> b) : b_(b) {}

    std::size_t number(const char* what) {
        skip();
        const std::size_t start = pos_;
        std::size_t v = 0;
        while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
            v = v * 10 + (b_[pos_] - '0');
            if (v > 1u << 30) throw ParseError(std::string("pgm: ") + what + " too large", start);
            ++pos_;
        }
        if (pos_ == start) throw ParseError(std::string("pgm: expected ") + what, start);
        return v;
    }

    std::size_t pos_ = 0;

private:
    void skip() {
        while (pos_ < b_.size()) {
            if (is_space(b_[pos_])) {
                ++pos_;
            } else if (b_[pos_] == '#') {
                while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> b_;
};

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t at, const char* what) {
    if (b.size() < at + 4)
        throw ParseError(std::string("idx: truncated header reading ") + what, b.size());
    return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
           (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

// -- PGM ---------------------------------------------------------------------

std::vector<std::uint8_t> encode_pgm(const Gray8& image) {
    if (image.pixels.size() != image.height * image.width)
        throw ShapeError("encode_pgm: pixel count does not match dimensions");
    const std::string header = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) +
                               "\n" + std::to_string(image.maxval) + "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), image.pixels.begin(), image.pixels.end());
    return out;
}

Gray8 decode_pgm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw ParseError("pgm: bad magic (expected P5)", 0);
    PnmHeader hdr(bytes.subspan(0));
    hdr.pos_ = 2;
    Gray8 img;
    img.width = hdr.number("width");
    img.height = hdr.number("height");
    const std::size_t maxval_at = hdr.pos_;
    const std::size_t maxval = hdr.number("maxval");
    if (maxval < 1 || maxval > 255) throw ParseError("pgm: maxval must be in [1, 255]", maxval_at);
    img.maxval = static_cast<std::uint8_t>(maxval);
    if (hdr.pos_ >= bytes.size() || !is_space(bytes[hdr.pos_]))
        throw ParseError("pgm: missing whitespace after header", hdr.pos_);
    const std::size_t data_at = hdr.pos_ + 1;
    const std::size_t n = img.width * img.height;
    if (bytes.size() - data_at < n)
        throw ParseError("pgm: truncated pixel data (need " + std::to_string(n) + " bytes)", bytes.size());
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(data_at),
                      bytes.begin() + static_cast<std::ptrdiff_t>(data_at + n));
    return img;
}

void write_pgm(const std::filesystem::path& path, const Gray8& image) {
    write_file_atomic(path, encode_pgm(image));
}

Gray8 read_pgm(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return decode_pgm(bytes);
    } catch (const ParseError& e) {
        throw e.prefixed(path.string() + ": ");
    }
}

Gray8 to_gray8(const Image& image) {
    Gray8 g{image.height, image.width, 255, {}};
    g.pixels.reserve(image.pixels.size());
    for (double v : image.pixels) g.pixels.push_back(to_byte(v));
    return g;
}

Image from_gray8(const Gray8& image) {
    Image out(image.height, image.width);
    for (std::size_t i = 0; i < image.pixels.size(); ++i)
        out.pixels[i] = static_cast<double>(image.pixels[i]) / static_cast<double>(image.maxval);
    return out;
}

Gray8 normalize_to_gray8(const Image& image) {
    Gray8 g{image.height, image.width, 255, std::vector<std::uint8_t>(image.pixels.size(), 0)};
    if (image.pixels.empty()) return g;
    const auto [lo, hi] = std::minmax_element(image.pixels.begin(), image.pixels.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) return g;
    for (std::size_t i = 0; i < image.pixels.size(); ++i)
        g.pixels[i] = to_byte((image.pixels[i] - *lo) / range);
    return g;
}

Gray8 hconcat(std::span<const Gray8> images, std::size_t gap) {
    Gray8 out;
    if (images.empty()) return out;
    out.height = images.front().height;
    for (const auto& im : images) {
        if (im.height != out.height) throw ShapeError("hconcat: images differ in height");
        out.width += im.width;
    }
    out.width += gap * (images.size() - 1);
    out.pixels.assign(out.height * out.width, 0);
    std::size_t x0 = 0;
    for (const auto& im : images) {
        for (std::size_t r = 0; r < im.height; ++r)
            for (std::size_t c = 0; c < im.width; ++c)
                out.pixels[r * out.width + x0 + c] = im.pixels[r * im.width + c];
        x0 += im.width + gap;
    }
    return out;
}

// -- IDX ---------------------------------------------------------------------

std::vector<std::uint8_t> encode_idx_images(std::span<const Image> images) {
    const std::size_t h = images.empty() ? 0 : images.front().height;
    const std::size_t w = images.empty() ? 0 : images.front().width;
    std::vector<std::uint8_t> out;
    write_be32(out, kIdxImageMagic);
    write_be32(out, static_cast<std::uint32_t>(images.size()));
    write_be32(out, static_cast<std::uint32_t>(h));
    write_be32(out, static_cast<std::uint32_t>(w));
    for (const auto& im : images) {
        if (im.height != h || im.width != w) throw ShapeError("encode_idx_images: images differ in size");
        for (double v : im.pixels) out.push_back(to_byte(v));
    }
    return out;
}

std::vector<Image> decode_idx_images(std::span<const std::uint8_t> bytes) {
    if (const auto magic = read_be32(bytes, 0, "magic"); magic != kIdxImageMagic)
        throw ParseError("idx: bad image magic", 0);
    const std::size_t n = read_be32(bytes, 4, "image count");
    const std::size_t rows = read_be32(bytes, 8, "row count");
    const std::size_t cols = read_be32(bytes, 12, "column count");
    const std::size_t px = rows * cols;
    if (px == 0 && n > 0) throw ParseError("idx: zero-sized images", 8);
    if (px != 0 && (bytes.size() - 16) / px < n)
        throw ParseError("idx: truncated pixel data (need " + std::to_string(n * px) + " bytes)", bytes.size());
    std::vector<Image> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Image im(rows, cols);
        const std::size_t base = 16 + i * px;
        for (std::size_t j = 0; j < px; ++j) im.pixels[j] = static_cast<double>(bytes[base + j]) / 255.0;
        out.push_back(std::move(im));
    }
    return out;
}

std::vector<std::uint8_t> encode_idx_labels(std::span<const int> labels) {
    std::vector<std::uint8_t> out;
    write_be32(out, kIdxLabelMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    for (int l : labels) out.push_back(static_cast<std::uint8_t>(l));
    return out;
}

std::vector<int> decode_idx_labels(std::span<const std::uint8_t> bytes) {
    if (const auto magic = read_be32(bytes, 0, "magic"); magic != kIdxLabelMagic)
        throw ParseError("idx: bad label magic", 0);
    const std::size_t n = read_be32(bytes, 4, "label count");
    if (bytes.size() - 8 < n)
        throw ParseError("idx: truncated label data (need " + std::to_string(n) + " bytes)", bytes.size());
    return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(n)};
}

namespace {

template <typename F>
auto with_path(const std::filesystem::path& path, F&& decode) {
    const auto bytes = read_file(path);
    try {
        return decode(bytes);
    } catch (const ParseError& e) {
        throw e.prefixed(path.string() + ": ");
    }
}

}  // namespace

void write_idx_images(const std::filesystem::path& path, std::span<const Image> images) {
    write_file_atomic(path, encode_idx_images(images));
}

std::vector<Image> read_idx_images(const std::filesystem::path& path) {
    return with_path(path, [](const auto& b) { return decode_idx_images(b); });
}

void write_idx_labels(const std::filesystem::path& path, std::span<const int> labels) {
    write_file_atomic(path, encode_idx_labels(labels));
}

std::vector<int> read_idx_labels(const std::filesystem::path& path) {
    return with_path(path, [](const auto& b) { return decode_idx_labels(b); });
}

// -- scores CSV --------------------------------------------------------------

std::string format_scores_csv(std::span<const ScoreRow> rows) {
    std::string out = "image_id,label,score\n";
    for (const auto& r : rows)
        out += std::to_string(r.image_id) + "," + std::to_string(r.label) + "," + text::format_double(r.score) + "\n";
    return out;
}

std::vector<ScoreRow> parse_scores_csv(const std::string& content) {
    std::vector<ScoreRow> rows;
    std::size_t line_no = 0;
    std::size_t offset = 0;
    for (const auto& raw : text::split(content, '\n')) {
        const std::size_t line_at = offset;
        offset += raw.size() + 1;
        ++line_no;
        const auto line = text::trim(raw);
        if (line.empty()) continue;
        if (line_no == 1 && line == "image_id,label,score") continue;
        const auto cells = text::split(line, ',');
        if (cells.size() != 3) throw ParseError("scores csv: line " + std::to_string(line_no) + " needs 3 fields", line_at);
        try {
            ScoreRow r;
            r.image_id = text::parse_uint(cells[0], "image_id");
            r.label = static_cast<int>(text::parse_int(cells[1], "label"));
            r.score = text::parse_double(cells[2], "score");
            rows.push_back(r);
        } catch (const ConfigError& e) {
            throw ParseError("scores csv: line " + std::to_string(line_no) + ": " + e.what(), line_at);
        }
    }
    return rows;
}

void write_scores_csv(const std::filesystem::path& path, std::span<const ScoreRow> rows) {
    write_file_atomic(path, format_scores_csv(rows));
}

std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& path) {
    const auto content = read_text_file(path);
    try {
        return parse_scores_csv(content);
    } catch (const ParseError& e) {
        throw e.prefixed(path.string() + ": ");
    }
}

}  // namespace d2ue
