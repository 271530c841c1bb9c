#include "d2ue/dsu.hpp"

#include "d2ue/error.hpp"

#include <algorithm>
#include <cmath>

namespace d2ue {
namespace {

Tensor as_row(const Image& x, bool requires_grad) {
    return Tensor::from({1, x.size()}, x.pixels, requires_grad);
}

Image as_image(const Image& like, std::span<const double> values) {
    return Image(like.height, like.width, std::vector<double>(values.begin(), values.end()));
}

ReconstructFn learner_fn(const Learner& learner) {
    if (!learner.trained()) throw ConfigError("inference requires a frozen learner");
    return [&learner](const Tensor& x) { return forward(learner, x).reconstruction; };
}

void check_input(const Image& x) {
    if (x.size() == 0 || x.size() != x.height * x.width) throw ShapeError("inference: malformed image");
}

}  // namespace

std::string_view to_string(ScoreMethod m) {
    switch (m) {
        case ScoreMethod::ens_recon: return "ens_recon";
        case ScoreMethod::output_unc: return "output_unc";
        case ScoreMethod::dsu: return "dsu";
    }
    return "?";
}

ScoreMethod parse_score_method(std::string_view text) {
    for (auto m : {ScoreMethod::ens_recon, ScoreMethod::output_unc, ScoreMethod::dsu})
        if (text == to_string(m)) return m;
    throw ConfigError("unknown scoring method '" + std::string(text) + "'");
}

std::string_view to_string(Reduction r) { return r == Reduction::mean ? "mean" : "max"; }

Reduction parse_reduction(std::string_view text) {
    if (text == "mean") return Reduction::mean;
    if (text == "max") return Reduction::max;
    throw ConfigError("unknown reduction '" + std::string(text) + "'");
}

Image input_gradient(const ReconstructFn& model, const Image& x) {
    check_input(x);
    const Tensor input = as_row(x, true);
    const Tensor loss = mse(model(input), input);
    loss.backward();
    return as_image(x, input.grad());
}

Image input_gradient(const Learner& learner, const Image& x) {
    return input_gradient(learner_fn(learner), x);
}

DsuFactors dsu_factors(const Learner& learner, const Image& x) {
    check_input(x);
    const auto fn = learner_fn(learner);
    const Tensor input = as_row(x, true);
    const Tensor recon = fn(input);
    mse(recon, input).backward();
    DsuFactors out{as_image(x, input.grad()), Image(x.height, x.width)};
    for (std::size_t i = 0; i < x.size(); ++i) out.abs_residual.pixels[i] = std::fabs(recon[i] - x.pixels[i]);
    return out;
}

Image dsu_component(const Learner& learner, const Image& x) {
    auto f = dsu_factors(learner, x);
    for (std::size_t i = 0; i < x.size(); ++i) f.gradient.pixels[i] *= f.abs_residual.pixels[i];
    return std::move(f.gradient);
}

Image reconstruct(const Learner& learner, const Image& x) {
    check_input(x);
    return as_image(x, learner_fn(learner)(as_row(x, false)).values());
}

Image abs_residual(const Learner& learner, const Image& x) {
    Image r = reconstruct(learner, x);
    for (std::size_t i = 0; i < x.size(); ++i) r.pixels[i] = std::fabs(r.pixels[i] - x.pixels[i]);
    return r;
}

Image deviation(std::span<const Image> maps) {
    if (maps.size() < 2) throw ConfigError("deviation: need at least 2 maps, got " + std::to_string(maps.size()));
    const auto& first = maps.front();
    for (const auto& m : maps)
        if (m.height != first.height || m.width != first.width || m.size() != first.size())
            throw ShapeError("deviation: maps differ in shape");
    const double n = static_cast<double>(maps.size());
    Image out(first.height, first.width);
    // Two passes on values shifted by the first map, so identical inputs give
    // exactly zero.
    for (std::size_t p = 0; p < first.size(); ++p) {
        const double shift = first.pixels[p];
        double mean = 0.0;
        for (const auto& m : maps) mean += m.pixels[p] - shift;
        mean /= n;
        double var = 0.0;
        for (const auto& m : maps) {
            const double d = m.pixels[p] - shift - mean;
            var += d * d;
        }
        out.pixels[p] = std::sqrt(var / n);
    }
    return out;
}

double reduce_map(const Image& map, Reduction reduction) {
    if (map.pixels.empty()) throw ShapeError("reduce_map: empty map");
    if (reduction == Reduction::max) return *std::max_element(map.pixels.begin(), map.pixels.end());
    double s = 0.0;
    for (double v : map.pixels) s += v;
    return s / static_cast<double>(map.pixels.size());
}

ScoredSample score_image(std::span<const Learner> learners, const Image& x, ScoreMethod method,
                         Reduction reduction, bool keep_map, std::size_t image_id) {
    if (learners.empty()) throw ConfigError("score_image: empty ensemble");
    if (method != ScoreMethod::ens_recon && learners.size() < 2)
        throw ConfigError("score_image: method '" + std::string(to_string(method)) + "' needs at least 2 learners");

    Image map;
    switch (method) {
        case ScoreMethod::ens_recon: {
            map = Image(x.height, x.width);
            for (const auto& l : learners) {
                const Image r = abs_residual(l, x);
                for (std::size_t i = 0; i < r.size(); ++i) map.pixels[i] += r.pixels[i];
            }
            for (double& v : map.pixels) v /= static_cast<double>(learners.size());
            break;
        }
        case ScoreMethod::output_unc: {
            std::vector<Image> outs;
            for (const auto& l : learners) outs.push_back(reconstruct(l, x));
            map = deviation(outs);
            break;
        }
        case ScoreMethod::dsu: {
            std::vector<Image> comps;
            for (const auto& l : learners) comps.push_back(dsu_component(l, x));
            map = deviation(comps);
            break;
        }
    }
    ScoredSample s{image_id, reduce_map(map, reduction), std::nullopt};
    if (keep_map) s.map = AnomalyMap{std::move(map), method};
    return s;
}

std::vector<double> score_images(std::span<const Learner> learners, std::span<const Image> images,
                                 ScoreMethod method, Reduction reduction) {
    std::vector<double> out;
    out.reserve(images.size());
    for (std::size_t i = 0; i < images.size(); ++i)
        out.push_back(score_image(learners, images[i], method, reduction, false, i).score);
    return out;
}

}  // namespace d2ue
