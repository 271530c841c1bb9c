#include "d2ue/pipeline.hpp"

#include "d2ue/dsu.hpp"
#include "d2ue/error.hpp"
#include "d2ue/file_util.hpp"
#include "d2ue/image_io.hpp"
#include "d2ue/metrics.hpp"
#include "d2ue/text.hpp"
#include "d2ue/training.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

namespace d2ue {
namespace {

void require_file(const std::filesystem::path& path, const char* what) {
    if (!std::filesystem::exists(path)) throw IoError(std::string("missing ") + what, path.string());
}

void write_manifest(const std::filesystem::path& dir, const RunConfig& config) {
    write_file_atomic(dir / "run_manifest.txt", config.to_text());
}

struct Scores {
    double auroc = 0.0;
    double ap = 0.0;
};

Scores evaluate(std::span<const Learner> learners, const Split& test, ScoreMethod method, Reduction reduction) {
    LabeledScores ls{score_images(learners, test.images, method, reduction), test.labels};
    return {auroc(ls), average_precision(ls)};
}

constexpr SimilarityKind kKernelSweep[] = {SimilarityKind::none,   SimilarityKind::euclidean,
                                           SimilarityKind::manhattan, SimilarityKind::cosine,
                                           SimilarityKind::pearson, SimilarityKind::cka};

}  // namespace

// -- dataset files -----------------------------------------------------------

void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
    std::vector<Image> masks;
    masks.reserve(ds.test.images.size());
    for (std::size_t i = 0; i < ds.test.images.size(); ++i) {
        Image m(ds.params.height, ds.params.width);
        if (i < ds.test_masks.size() && !ds.test_masks[i].empty())
            for (std::size_t p = 0; p < m.size(); ++p) m.pixels[p] = ds.test_masks[i][p] ? 1.0 : 0.0;
        masks.push_back(std::move(m));
    }
    write_idx_images(dir / "train_images.idx", ds.train.images);
    write_idx_images(dir / "test_images.idx", ds.test.images);
    write_idx_labels(dir / "test_labels.idx", ds.test.labels);
    write_idx_images(dir / "test_masks.idx", masks);

    const auto& p = ds.params;
    std::string manifest;
    manifest += "seed = " + std::to_string(p.seed) + "\n";
    manifest += "n_train = " + std::to_string(p.n_train) + "\n";
    manifest += "n_test_normal = " + std::to_string(p.n_test_normal) + "\n";
    manifest += "n_test_anom = " + std::to_string(p.n_test_anom) + "\n";
    manifest += "height = " + std::to_string(p.height) + "\n";
    manifest += "width = " + std::to_string(p.width) + "\n";
    write_file_atomic(dir / "manifest.txt", manifest);
}

Dataset load_dataset(const std::filesystem::path& dir) {
    const auto manifest = dir / "manifest.txt";
    require_file(manifest, "dataset manifest (run `synth` first)");
    Dataset ds;
    for (const auto& kv : text::parse_key_values(read_text_file(manifest), manifest.string())) {
        auto& p = ds.params;
        if (kv.key == "seed") p.seed = text::parse_uint(kv.value, kv.key);
        else if (kv.key == "n_train") p.n_train = text::parse_uint(kv.value, kv.key);
        else if (kv.key == "n_test_normal") p.n_test_normal = text::parse_uint(kv.value, kv.key);
        else if (kv.key == "n_test_anom") p.n_test_anom = text::parse_uint(kv.value, kv.key);
        else if (kv.key == "height") p.height = text::parse_uint(kv.value, kv.key);
        else if (kv.key == "width") p.width = text::parse_uint(kv.value, kv.key);
        else throw ConfigError(manifest.string() + ": unknown key '" + kv.key + "'");
    }
    for (const char* f : {"train_images.idx", "test_images.idx", "test_labels.idx"})
        require_file(dir / f, "dataset file");
    ds.train.images = read_idx_images(dir / "train_images.idx");
    ds.train.labels.assign(ds.train.images.size(), 0);
    ds.test.images = read_idx_images(dir / "test_images.idx");
    ds.test.labels = read_idx_labels(dir / "test_labels.idx");
    if (ds.test.labels.size() != ds.test.images.size())
        throw ConfigError(dir.string() + ": test image and label counts differ");
    if (std::filesystem::exists(dir / "test_masks.idx")) {
        for (const auto& m : read_idx_images(dir / "test_masks.idx")) {
            std::vector<std::uint8_t> mask(m.size());
            bool any = false;
            for (std::size_t p = 0; p < m.size(); ++p) any |= (mask[p] = m.pixels[p] > 0.5) != 0;
            ds.test_masks.push_back(any ? std::move(mask) : std::vector<std::uint8_t>{});
        }
    }
    return ds;
}

// -- commands ----------------------------------------------------------------

std::filesystem::path cmd_synth(const RunConfig& config) {
    config.validate();
    const auto dir = config.resolved_dataset_dir();
    save_dataset(dir, make_benchmark(config.data));
    write_manifest(dir, config);
    return dir;
}

std::filesystem::path cmd_train(const RunConfig& config) {
    config.validate();
    const Dataset ds = load_dataset(config.resolved_dataset_dir());
    const auto ens = train_ensemble(ds.train.images, config.architecture(), config.train);
    const auto dir = config.resolved_ensemble_dir();
    save_ensemble(dir, ens);
    write_manifest(dir, config);
    return dir;
}

EvalResult cmd_eval(const RunConfig& config) {
    config.validate();
    const Dataset ds = load_dataset(config.resolved_dataset_dir());
    const Ensemble ens = load_ensemble(config.resolved_ensemble_dir());

    std::vector<ScoreRow> rows;
    LabeledScores ls;
    const auto scores = score_images(ens.learners, ds.test.images, config.method, config.reduction);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        rows.push_back({i, ds.test.labels[i], scores[i]});
        ls.scores.push_back(scores[i]);
        ls.labels.push_back(ds.test.labels[i]);
    }
    EvalResult r;
    r.auroc = auroc(ls);
    r.average_precision = average_precision(ls);

    const auto dir = config.out / "eval";
    const std::string m(to_string(config.method));
    r.scores_csv = dir / ("scores_" + m + ".csv");
    r.metrics_csv = dir / ("metrics_" + m + ".csv");
    write_scores_csv(r.scores_csv, rows);
    write_file_atomic(r.metrics_csv, "method,auroc,ap\n" + m + "," + text::format_double(r.auroc) + "," +
                                         text::format_double(r.average_precision) + "\n");
    write_manifest(dir, config);
    return r;
}

std::vector<AblationRow> ablation_rows_for_seed(const Dataset& ds, const RunConfig& config, std::uint64_t seed) {
    const auto arch = config.architecture();
    std::map<SimilarityKind, Ensemble> trained;
    auto ensemble_for = [&](SimilarityKind kind) -> const Ensemble& {
        auto it = trained.find(kind);
        if (it != trained.end()) return it->second;
        TrainConfig t = config.train;
        t.master_seed = seed;
        t.similarity = kind;
        if (kind == SimilarityKind::none) t.lambda = 0.0;
        return trained.emplace(kind, train_ensemble(ds.train.images, arch, t)).first->second;
    };

    std::vector<AblationRow> rows;
    auto add = [&](int table, const char* variant, SimilarityKind kind, ScoreMethod method) {
        const auto s = evaluate(ensemble_for(kind).learners, ds.test, method, config.reduction);
        rows.push_back({table, variant, std::string(to_string(kind)), seed, s.auroc, s.ap});
    };
    const SimilarityKind rar = config.train.similarity;
    add(2, "ens_recon", SimilarityKind::none, ScoreMethod::ens_recon);
    add(2, "output_unc", SimilarityKind::none, ScoreMethod::output_unc);
    add(2, "rar+output_unc", rar, ScoreMethod::output_unc);
    add(2, "dsu", SimilarityKind::none, ScoreMethod::dsu);
    add(2, "rar+dsu", rar, ScoreMethod::dsu);
    for (auto kind : kKernelSweep)
        add(3, kind == SimilarityKind::none ? "output_unc" : "rar+output_unc", kind, ScoreMethod::output_unc);
    return rows;
}

std::string format_ablation_csv(const AblationResult& result) {
    std::string s = "row_type,table,variant,similarity,seed,auroc,ap,auroc_mean,auroc_std,ap_mean,ap_std\n";
    for (const auto& r : result.rows) {
        s += "run," + std::to_string(r.table) + "," + r.variant + "," + r.similarity + "," + std::to_string(r.seed) +
             "," + text::format_double(r.auroc) + "," + text::format_double(r.average_precision) + ",,,,\n";
    }
    for (const auto& m : result.summaries) {
        s += "summary," + std::to_string(m.table) + "," + m.variant + "," + m.similarity + ",,,," +
             text::format_double(m.auroc_mean) + "," + text::format_double(m.auroc_std) + "," +
             text::format_double(m.ap_mean) + "," + text::format_double(m.ap_std) + "\n";
    }
    return s;
}

AblationResult cmd_ablate(const RunConfig& config) {
    config.validate();
    const Dataset ds = load_dataset(config.resolved_dataset_dir());
    const std::size_t n_seeds = config.seeds.size();

    std::vector<std::vector<AblationRow>> per_seed(n_seeds);
    std::vector<std::exception_ptr> errors(n_seeds);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n_seeds; i = next++) {
            try {
                per_seed[i] = ablation_rows_for_seed(ds, config, config.seeds[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t n_threads = std::min(config.threads, n_seeds);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    AblationResult result;
    for (auto& rows : per_seed) result.rows.insert(result.rows.end(), rows.begin(), rows.end());

    // Summaries follow the row order of a single seed.
    for (const auto& proto : per_seed.front()) {
        std::vector<const AblationRow*> group;
        for (const auto& r : result.rows)
            if (r.table == proto.table && r.variant == proto.variant && r.similarity == proto.similarity)
                group.push_back(&r);
        auto stats = [&](auto field) {
            double mean = 0.0;
            for (auto* r : group) mean += field(*r);
            mean /= static_cast<double>(group.size());
            double ss = 0.0;
            for (auto* r : group) ss += (field(*r) - mean) * (field(*r) - mean);
            const double sd = group.size() > 1 ? std::sqrt(ss / static_cast<double>(group.size() - 1)) : 0.0;
            return std::pair{mean, sd};
        };
        const auto [am, as] = stats([](const AblationRow& r) { return r.auroc; });
        const auto [pm, ps] = stats([](const AblationRow& r) { return r.average_precision; });
        result.summaries.push_back({proto.table, proto.variant, proto.similarity, am, as, pm, ps});
    }

    const auto dir = config.out / "ablate";
    result.csv = dir / "ablation.csv";
    write_file_atomic(result.csv, format_ablation_csv(result));
    write_manifest(dir, config);
    return result;
}

std::vector<std::filesystem::path> cmd_heatmap(const RunConfig& config) {
    config.validate();
    const Dataset ds = load_dataset(config.resolved_dataset_dir());
    const Ensemble ens = load_ensemble(config.resolved_ensemble_dir());
    const auto dir = config.out / "heatmap";

    std::vector<ScoreMethod> methods{ScoreMethod::ens_recon};
    if (ens.size() >= 2) {
        methods.push_back(ScoreMethod::output_unc);
        methods.push_back(ScoreMethod::dsu);
    }

    std::vector<std::filesystem::path> written;
    for (auto id : config.ids) {
        if (id >= ds.test.images.size())
            throw ConfigError("heatmap: image id " + std::to_string(id) + " out of range (test split has " +
                              std::to_string(ds.test.images.size()) + " images)");
        const Image& x = ds.test.images[id];
        std::vector<Gray8> panels{to_gray8(x)};
        for (auto m : methods) {
            const auto scored = score_image(ens.learners, x, m, config.reduction, true, id);
            Gray8 g = normalize_to_gray8(scored.map->map);
            const auto path = dir / (std::to_string(id) + "_" + std::string(to_string(m)) + ".pgm");
            write_pgm(path, g);
            written.push_back(path);
            panels.push_back(std::move(g));
        }
        const auto montage = dir / (std::to_string(id) + "_montage.pgm");
        write_pgm(montage, hconcat(panels));
        written.push_back(montage);
    }
    write_manifest(dir, config);
    return written;
}

}  // namespace d2ue
