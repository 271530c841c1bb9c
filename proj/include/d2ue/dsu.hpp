#pragma once

// Inference-time anomaly maps from a trained ensemble.
//
//   ens_recon  : mean_i |f_i(x) - x|
//   output_unc : D({f_i(x)})
//   dsu        : D({grad_x L_i(x) * |f_i(x) - x|})
//
// with L_i(x) = mean_pixels (f_i(x) - x)^2 for the single image x and D the
// per-pixel population standard deviation across learners. The image-level
// score reduces the map by its mean (default) or maximum.

#include "d2ue/image.hpp"
#include "d2ue/model.hpp"
#include "d2ue/tensor.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace d2ue {

enum class ScoreMethod { ens_recon, output_unc, dsu };
enum class Reduction { mean, max };

std::string_view to_string(ScoreMethod m);
ScoreMethod parse_score_method(std::string_view text);
std::string_view to_string(Reduction r);
Reduction parse_reduction(std::string_view text);

/// Nonnegative per-pixel anomaly scores.
struct AnomalyMap {
    Image map;
    ScoreMethod source = ScoreMethod::ens_recon;
};

struct ScoredSample {
    std::size_t image_id = 0;
    double score = 0.0;
    std::optional<AnomalyMap> map;
};

/// Maps a [1 x d] input to a [1 x d] reconstruction using graph ops.
using ReconstructFn = std::function<Tensor(const Tensor&)>;

/// d/dx of the per-image mean squared reconstruction error, through both the
/// model and the target. One forward and one backward pass on a private graph.
Image input_gradient(const ReconstructFn& model, const Image& x);
Image input_gradient(const Learner& learner, const Image& x);

/// Both DSU factors from a single forward/backward pass.
struct DsuFactors {
    Image gradient;
    Image abs_residual;
};
DsuFactors dsu_factors(const Learner& learner, const Image& x);

/// grad_x L (elementwise) |f(x) - x|.
Image dsu_component(const Learner& learner, const Image& x);

/// |f(x) - x| per pixel.
Image abs_residual(const Learner& learner, const Image& x);
Image reconstruct(const Learner& learner, const Image& x);

/// Per-pixel population standard deviation over >= 2 same-shape maps.
Image deviation(std::span<const Image> maps);

double reduce_map(const Image& map, Reduction reduction);

ScoredSample score_image(std::span<const Learner> learners, const Image& x, ScoreMethod method,
                         Reduction reduction = Reduction::mean, bool keep_map = false,
                         std::size_t image_id = 0);

std::vector<double> score_images(std::span<const Learner> learners, std::span<const Image> images,
                                 ScoreMethod method, Reduction reduction = Reduction::mean);

}  // namespace d2ue
