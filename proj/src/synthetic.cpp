#include "d2ue/synthetic.hpp"

#include "d2ue/error.hpp"
#include "d2ue/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace d2ue {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double quantize(double v) {
    return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
}

Image render_normal(Rng& rng, std::size_t h, std::size_t w) {
    Image img(h, w);
    const auto gratings = rng.between(2, 4);
    for (std::int64_t g = 0; g < gratings; ++g) {
        const double freq = rng.uniform(kMinNormalFrequency, kMaxNormalFrequency);
        const double theta = rng.uniform(0.0, std::numbers::pi);
        const double phase = rng.uniform(0.0, kTwoPi);
        const double amp = rng.uniform(0.3, 1.0);
        const double cx = std::cos(theta), cy = std::sin(theta);
        for (std::size_t r = 0; r < h; ++r) {
            for (std::size_t c = 0; c < w; ++c) {
                const double x = static_cast<double>(c) / static_cast<double>(w);
                const double y = static_cast<double>(r) / static_cast<double>(h);
                img.at(r, c) += amp * std::sin(kTwoPi * freq * (x * cx + y * cy) + phase);
            }
        }
    }
    const double hs = static_cast<double>(h), ws = static_cast<double>(w);
    const double by = (hs - 1.0) / 2.0 + rng.uniform(-hs / 8.0, hs / 8.0);
    const double bx = (ws - 1.0) / 2.0 + rng.uniform(-ws / 8.0, ws / 8.0);
    const double sigma = rng.uniform(std::min(hs, ws) / 8.0, std::min(hs, ws) / 5.0);
    const double amp = rng.uniform(1.5, 2.5);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            const double dy = static_cast<double>(r) - by, dx = static_cast<double>(c) - bx;
            img.at(r, c) += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        }
    }
    const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
    const double min = *lo, range = *hi - *lo;
    for (double& v : img.pixels) v = quantize(range > 0.0 ? (v - min) / range : 0.0);
    return img;
}

}  // namespace

std::string_view to_string(AnomalyKind kind) {
    switch (kind) {
        case AnomalyKind::bright_patch: return "bright_patch";
        case AnomalyKind::frequency_shift: return "frequency_shift";
        case AnomalyKind::deletion: return "deletion";
    }
    return "?";
}

std::vector<Image> generate_normal(std::uint64_t seed, std::size_t count, std::size_t height,
                                   std::size_t width) {
    if (height < 8 || width < 8)
        throw ConfigError("generate_normal: images must be at least 8x8, got " + std::to_string(height) +
                          "x" + std::to_string(width));
    Rng rng(seed);
    std::vector<Image> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(render_normal(rng, height, width));
    return out;
}

InjectedAnomaly inject_anomaly(const Image& image, std::uint64_t seed, AnomalyKind kind) {
    const std::size_t h = image.height, w = image.width;
    if (h < 8 || w < 8 || image.pixels.size() != h * w)
        throw ConfigError("inject_anomaly: invalid image");
    Rng rng(seed);
    const auto side = static_cast<std::int64_t>(std::min(h, w));
    const auto k = static_cast<std::size_t>(rng.between(side / 8, side / 4));
    const auto r0 = static_cast<std::size_t>(rng.between(0, static_cast<std::int64_t>(h - k)));
    const auto c0 = static_cast<std::size_t>(rng.between(0, static_cast<std::int64_t>(w - k)));

    InjectedAnomaly out{image, std::vector<std::uint8_t>(h * w, 0), k, r0, c0};
    auto region = [&](auto&& f) {
        for (std::size_t r = r0; r < r0 + k; ++r)
            for (std::size_t c = c0; c < c0 + k; ++c) f(r, c);
    };
    region([&](std::size_t r, std::size_t c) { out.mask[r * w + c] = 1; });

    double mean = 0.0, lo = 1.0, hi = 0.0;
    region([&](std::size_t r, std::size_t c) {
        const double v = image.at(r, c);
        mean += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    });
    mean /= static_cast<double>(k * k);

    switch (kind) {
        case AnomalyKind::bright_patch: {
            const double strength = rng.uniform(0.6, 1.0);
            region([&](std::size_t r, std::size_t c) {
                double& v = out.image.at(r, c);
                v = quantize(v + strength * (1.0 - v));
            });
            break;
        }
        case AnomalyKind::frequency_shift: {
            // Grating at twice the highest normal frequency, around the local mean.
            const double theta = rng.uniform(0.0, std::numbers::pi);
            const double phase = rng.uniform(0.0, kTwoPi);
            const double amp = std::max(0.25, (hi - lo) / 2.0);
            const double cx = std::cos(theta), cy = std::sin(theta);
            region([&](std::size_t r, std::size_t c) {
                const double x = static_cast<double>(c) / static_cast<double>(w);
                const double y = static_cast<double>(r) / static_cast<double>(h);
                const double f = 2.0 * kMaxNormalFrequency;
                out.image.at(r, c) = quantize(mean + amp * std::sin(kTwoPi * f * (x * cx + y * cy) + phase));
            });
            break;
        }
        case AnomalyKind::deletion:
            region([&](std::size_t r, std::size_t c) { out.image.at(r, c) = quantize(mean); });
            break;
    }
    return out;
}

void BenchmarkParams::validate() const {
    if (n_train < 1 || n_test_normal < 1 || n_test_anom < 1)
        throw ConfigError("benchmark: all split counts must be >= 1");
    if (height < 8 || width < 8) throw ConfigError("benchmark: images must be at least 8x8");
}

Dataset make_benchmark(const BenchmarkParams& params) {
    params.validate();
    Dataset ds;
    ds.params = params;
    ds.train.images = generate_normal(derive_seed(params.seed, 1), params.n_train, params.height, params.width);
    ds.train.labels.assign(params.n_train, 0);

    auto base = generate_normal(derive_seed(params.seed, 2), params.n_test_normal + params.n_test_anom,
                                params.height, params.width);
    const std::uint64_t anomaly_stream = derive_seed(params.seed, 3);
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (i < params.n_test_normal) {
            ds.test.images.push_back(std::move(base[i]));
            ds.test.labels.push_back(0);
            ds.test_masks.emplace_back();
            continue;
        }
        const std::size_t j = i - params.n_test_normal;
        const auto kind = static_cast<AnomalyKind>(j % 3);
        auto injected = inject_anomaly(base[i], derive_seed(anomaly_stream, j), kind);
        ds.test.images.push_back(std::move(injected.image));
        ds.test.labels.push_back(1);
        ds.test_masks.push_back(std::move(injected.mask));
    }
    return ds;
}

}  // namespace d2ue
