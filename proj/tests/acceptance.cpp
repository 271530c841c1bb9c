// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances and sample counts are fixed below.

#include "d2ue/checkpoint.hpp"
#include "d2ue/dsu.hpp"
#include "d2ue/file_util.hpp"
#include "d2ue/metrics.hpp"
#include "d2ue/similarity.hpp"
#include "d2ue/synthetic.hpp"
#include "d2ue/training.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace d2ue;
using d2ue::testing::random_matrix;
using d2ue::testing::random_orthogonal;

namespace {

constexpr double kCkaInvarianceTol = 1e-6;
constexpr double kCkaSelfTol = 1e-9;
constexpr double kInvarianceTol = 1e-6;
constexpr double kScalingFailMargin = 1e-3;
constexpr double kParamGradTol = 1e-5;
constexpr double kInputGradTol = 1e-4;
constexpr double kMetricTol = 1e-12;
constexpr int kSeeds = 5;
constexpr int kMinWins = 4;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Timed {
    Outcome outcome;
    double seconds = 0.0;
};

Timed timed(const std::function<Outcome()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Timed t;
    t.outcome = f();
    t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return t;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

FeatureMatrix fm(const Eigen::MatrixXd& m) { return FeatureMatrix(m); }

double scale_draw(Rng& rng) {
    double v = 0.0;
    while (v <= 0.01) v = rng.uniform(0.0, 10.0);
    return v;
}

// -- 1 -----------------------------------------------------------------------

Outcome kernel_invariance() {
    Rng rng(101);
    double worst = 0.0, worst_self = 0.0;
    for (int t = 0; t < 100; ++t) {
        const Eigen::MatrixXd p = random_matrix(rng, 16, 8);
        const Eigen::MatrixXd q = random_matrix(rng, 16, 8);
        const double alpha = scale_draw(rng), beta = scale_draw(rng);
        const Eigen::MatrixXd u = random_orthogonal(rng, 8), v = random_orthogonal(rng, 8);
        worst = std::max(worst, std::abs(cka(fm(alpha * p * u), fm(beta * q * v)) - cka(fm(p), fm(q))));
        worst_self = std::max(worst_self, std::abs(cka(fm(p), fm(p)) - 1.0));
    }
    return {worst <= kCkaInvarianceTol && worst_self <= kCkaSelfTol,
            "max|dCKA|=" + fmt(worst) + " max|CKA(P,P)-1|=" + fmt(worst_self)};
}

// -- 2 -----------------------------------------------------------------------

Outcome invariance_matrix() {
    const SimilarityKind kinds[] = {SimilarityKind::euclidean, SimilarityKind::manhattan, SimilarityKind::cosine,
                                    SimilarityKind::pearson, SimilarityKind::cka};
    double scaling[5] = {}, rotation[5] = {};
    Rng rng(202);
    for (int t = 0; t < 100; ++t) {
        // Q close to P keeps exp(-distance) away from zero.
        const Eigen::MatrixXd p = random_matrix(rng, 16, 8, 0.1);
        const Eigen::MatrixXd q = p + random_matrix(rng, 16, 8, 0.01);
        const double alpha = scale_draw(rng), beta = scale_draw(rng);
        const Eigen::MatrixXd u = random_orthogonal(rng, 8), v = random_orthogonal(rng, 8);
        for (int k = 0; k < 5; ++k) {
            const double base = similarity(kinds[k], fm(p), fm(q));
            scaling[k] = std::max(scaling[k], std::abs(similarity(kinds[k], fm(alpha * p), fm(beta * q)) - base));
            rotation[k] = std::max(rotation[k], std::abs(similarity(kinds[k], fm(p * u), fm(q * v)) - base));
        }
    }
    const bool ok = scaling[0] > kScalingFailMargin && scaling[1] > kScalingFailMargin &&
                    scaling[2] <= kInvarianceTol && scaling[3] <= kInvarianceTol && scaling[4] <= kInvarianceTol &&
                    rotation[0] > kInvarianceTol && rotation[1] > kInvarianceTol && rotation[2] > kInvarianceTol &&
                    rotation[3] > kInvarianceTol && rotation[4] <= kInvarianceTol;
    std::string detail;
    for (int k = 0; k < 5; ++k) {
        detail += std::string(to_string(kinds[k])) + "(scale " + fmt(scaling[k]) + ", orth " + fmt(rotation[k]) + ")";
        if (k < 4) detail += " ";
    }
    return {ok, detail};
}

// -- 3 -----------------------------------------------------------------------

Outcome gradient_suite() {
    double op_worst = 0.0;
    std::string op_name;
    for (std::uint64_t s = 0; s < 20; ++s) {
        for (const auto& [name, err] : d2ue::testing::op_gradient_errors(3000 + s)) {
            if (err > op_worst) {
                op_worst = err;
                op_name = name;
            }
        }
    }

    AutoencoderConfig small;
    small.input_dim = 16;
    small.hidden_dims = {8};
    small.bottleneck_dim = 4;
    double cka_worst = 0.0;
    Rng rng(303);
    for (std::uint64_t s = 0; s < 20; ++s) {
        small.init_seed = s;
        Learner current(small);
        // Nonzero biases keep dead units off the exact ReLU kink.
        for (auto& p : current.parameters())
            if (p.name.ends_with("bias"))
                for (auto& v : p.tensor.mutable_values()) v = 0.1 * rng.normal();
        small.init_seed = 100 + s;
        Learner previous(small);
        previous.freeze();
        const Tensor x = d2ue::testing::random_tensor(rng, {8, 16});
        const Tensor frozen = encode(previous, x).detach();
        std::vector<Tensor> leaves;
        for (const auto& p : current.parameters()) leaves.push_back(p.tensor);
        cka_worst = std::max(cka_worst, d2ue::testing::gradient_check(
                                            leaves, [&] { return graph::cka(frozen, encode(current, x)); }));
    }

    double input_worst = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        AutoencoderConfig arch;
        arch.init_seed = s;
        Learner l(arch);
        l.freeze();
        Image x(16, 16);
        for (auto& v : x.pixels) v = rng.uniform();
        const Image g = input_gradient(l, x);
        auto loss = [&] {
            const Tensor t = Tensor::from({1, x.size()}, x.pixels);
            return reconstruction_loss(forward(l, t).reconstruction, t).item();
        };
        std::vector<double> numeric(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double saved = x.pixels[i];
            x.pixels[i] = saved + 1e-5;
            const double fp = loss();
            x.pixels[i] = saved - 1e-5;
            const double fm = loss();
            x.pixels[i] = saved;
            numeric[i] = (fp - fm) / 2e-5;
        }
        input_worst = std::max(input_worst, d2ue::testing::relative_error(g.pixels, numeric));
    }
    return {op_worst <= kParamGradTol && cka_worst <= kParamGradTol && input_worst <= kInputGradTol,
            "ops max " + fmt(op_worst) + " (" + op_name + "), cka-through-encoder max " + fmt(cka_worst) +
                ", input gradient max " + fmt(input_worst)};
}

// -- 4 -----------------------------------------------------------------------

Outcome metric_oracles() {
    const double example = auroc({{0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}});
    Rng rng(404);
    double worst_auc = 0.0, worst_ap = 0.0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + rng.below(999);
        const int distinct[] = {0, 2, 5, 50};
        const int d = distinct[t % 4];
        LabeledScores data;
        for (std::size_t i = 0; i < n; ++i) {
            data.scores.push_back(d == 0 ? rng.normal() : static_cast<double>(rng.below(static_cast<std::uint64_t>(d))));
            data.labels.push_back(rng.uniform() < 0.3 ? 1 : 0);
        }
        data.labels[0] = 1;
        data.labels[1] = 0;
        worst_auc = std::max(worst_auc, std::abs(auroc(data) - d2ue::testing::auroc_oracle(data.scores, data.labels)));
        worst_ap = std::max(worst_ap, std::abs(average_precision(data) -
                                               d2ue::testing::average_precision_oracle(data.scores, data.labels)));
    }
    return {worst_auc <= kMetricTol && worst_ap <= kMetricTol && example == 0.75,
            "worked example " + fmt(example) + ", max|dAUROC|=" + fmt(worst_auc) + " max|dAP|=" + fmt(worst_ap)};
}

// -- 5, 6 ----------------------------------------------------------------------

struct SeedRun {
    double cka_plain = 0.0, cka_rar = 0.0;
    double output_unc = 0.0, rar_output_unc = 0.0, rar_dsu = 0.0;
};

std::vector<SeedRun> run_seeds(double& seconds) {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset data = make_benchmark(BenchmarkParams{});
    const AutoencoderConfig arch;
    auto test_auroc = [&](const Ensemble& e, ScoreMethod m) {
        return auroc({score_images(e.learners, data.test.images, m), data.test.labels});
    };
    std::vector<SeedRun> runs;
    for (int s = 0; s < kSeeds; ++s) {
        TrainConfig cfg;
        cfg.master_seed = static_cast<std::uint64_t>(s);
        cfg.lambda = 0.0;
        const Ensemble plain = train_ensemble(data.train.images, arch, cfg);
        cfg.lambda = 1.0;
        cfg.similarity = SimilarityKind::cka;
        const Ensemble rar = train_ensemble(data.train.images, arch, cfg);
        SeedRun r;
        r.cka_plain = mean_pairwise_cka(plain.learners, data.train.images, cfg.batch_size);
        r.cka_rar = mean_pairwise_cka(rar.learners, data.train.images, cfg.batch_size);
        r.output_unc = test_auroc(plain, ScoreMethod::output_unc);
        r.rar_output_unc = test_auroc(rar, ScoreMethod::output_unc);
        r.rar_dsu = test_auroc(rar, ScoreMethod::dsu);
        std::printf("  seed %d: cka %.4f -> %.4f | auroc output_unc %.4f rar+output_unc %.4f rar+dsu %.4f\n", s,
                    r.cka_plain, r.cka_rar, r.output_unc, r.rar_output_unc, r.rar_dsu);
        std::fflush(stdout);
        runs.push_back(r);
    }
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return runs;
}

Outcome diversity_effect(const std::vector<SeedRun>& runs) {
    int lower = 0;
    std::string detail;
    for (const auto& r : runs) {
        lower += r.cka_rar < r.cka_plain;
        detail += fmt(r.cka_plain) + "->" + fmt(r.cka_rar) + " ";
    }
    return {lower == kSeeds, std::to_string(lower) + "/" + std::to_string(kSeeds) + " seeds lower (" + detail + ")"};
}

Outcome ablation_direction(const std::vector<SeedRun>& runs) {
    auto compare = [&](double SeedRun::*full, const char* name) {
        double margin = 0.0;
        int wins = 0;
        for (const auto& r : runs) {
            margin += r.*full - r.output_unc;
            wins += r.*full > r.output_unc;
        }
        margin /= static_cast<double>(runs.size());
        const bool ok = margin >= 0.0 && wins >= kMinWins;
        return std::pair{ok, std::string(name) + " vs output_unc: mean margin " + fmt(margin) + ", wins " +
                                 std::to_string(wins) + "/" + std::to_string(runs.size())};
    };
    const auto [a_ok, a] = compare(&SeedRun::rar_dsu, "(a) rar+dsu");
    const auto [b_ok, b] = compare(&SeedRun::rar_output_unc, "(b) rar+output_unc");
    return {a_ok && b_ok, a + "; " + b};
}

// -- 7 -----------------------------------------------------------------------

Outcome degenerate_cases() {
    const auto dir = std::filesystem::temp_directory_path() / "d2ue_acceptance_c7";
    std::filesystem::remove_all(dir);
    BenchmarkParams params;
    params.n_train = 32;
    const Dataset data = make_benchmark(params);
    TrainConfig cfg;
    cfg.n_learners = 1;
    cfg.epochs = 5;
    const Ensemble one = train_ensemble(data.train.images, AutoencoderConfig{}, cfg);
    save_learner(dir / "learner.d2ue", one.learners[0]);
    std::vector<Learner> copies;
    for (int i = 0; i < 3; ++i) copies.push_back(load_learner(dir / "learner.d2ue"));
    std::filesystem::remove_all(dir);

    double worst = 0.0;
    for (const auto& x : data.test.images) {
        worst = std::max(worst, score_image(copies, x, ScoreMethod::output_unc).score);
        worst = std::max(worst, score_image(copies, x, ScoreMethod::dsu).score);
    }

    Learner base(AutoencoderConfig{});
    std::vector<Parameter> zeros;
    for (const auto& p : base.parameters()) zeros.push_back({p.name, Tensor::zeros(p.tensor.shape())});
    const Learner half = Learner::restore(AutoencoderConfig{}, std::move(zeros), true);
    const std::vector<Learner> perfect{half, half, half};
    const double recon = score_image(perfect, Image(16, 16, 0.5), ScoreMethod::ens_recon).score;
    return {worst == 0.0 && recon == 0.0,
            "max copied-checkpoint score " + fmt(worst) + " over " + std::to_string(data.test.images.size()) +
                " images x 2 methods, perfect-reconstruction ens_recon " + fmt(recon)};
}

// -- 8 -----------------------------------------------------------------------

Outcome determinism() {
    const auto dir = std::filesystem::temp_directory_path() / "d2ue_acceptance_c8";
    std::filesystem::remove_all(dir);
    const std::string base = std::string(D2UE_CLI_PATH) + " ";
    const std::string opts = " --seed 3 --out " + dir.string() + " >/dev/null 2>&1";
    auto run = [&](const char* cmd) { return std::system((base + cmd + opts).c_str()) == 0; };
    std::string metrics[2];
    bool ok = run("synth");
    for (auto& m : metrics) {
        ok = ok && run("train") && run("eval");
        if (ok) m = read_text_file(dir / "eval" / "metrics_dsu.csv");
    }
    std::filesystem::remove_all(dir);
    if (!ok) return {false, "CLI pipeline failed"};
    return {!metrics[0].empty() && metrics[0] == metrics[1],
            metrics[0] == metrics[1] ? "metrics CSV byte-identical (" + std::to_string(metrics[0].size()) + " bytes)"
                                     : "metrics CSV differs between runs"};
}

}  // namespace

int main() {
    struct Line {
        int id;
        const char* name;
        double limit;
        Timed result;
    };
    std::vector<Line> lines;
    auto report = [&](int id, const char* name, double limit, Timed t) {
        const bool ok = t.outcome.pass && t.seconds < limit;
        std::printf("%s %d %s: %s [%.1f s, limit %.0f s]\n", ok ? "PASS" : "FAIL", id, name,
                    t.outcome.detail.c_str(), t.seconds, limit);
        std::fflush(stdout);
        lines.push_back({id, name, limit, t});
        return ok;
    };

    bool all = true;
    all &= report(1, "kernel invariance", 1, timed(kernel_invariance));
    all &= report(2, "invariance matrix", 1, timed(invariance_matrix));
    all &= report(3, "gradient suite", 30, timed(gradient_suite));
    all &= report(4, "metric oracles", 10, timed(metric_oracles));

    double train_seconds = 0.0;
    const auto runs = run_seeds(train_seconds);
    Timed c5 = timed([&] { return diversity_effect(runs); });
    c5.seconds += train_seconds;
    all &= report(5, "repulsion lowers pairwise CKA", 300, c5);
    Timed c6 = timed([&] { return ablation_direction(runs); });
    c6.seconds += train_seconds;
    all &= report(6, "ablation direction", 600, c6);

    all &= report(7, "degenerate uncertainty", 5, timed(degenerate_cases));
    all &= report(8, "determinism", 180, timed(determinism));
    return all ? 0 : 1;
}
