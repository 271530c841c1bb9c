#include "d2ue/training.hpp"

#include "d2ue/checkpoint.hpp"
#include "d2ue/error.hpp"
#include "d2ue/file_util.hpp"
#include "d2ue/rng.hpp"
#include "d2ue/text.hpp"

#include <cmath>
#include <map>
#include <numeric>

namespace d2ue {
namespace {

constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;

std::string learner_file(std::size_t i) { return "learner_" + std::to_string(i) + ".d2ue"; }

}  // namespace

void TrainConfig::validate() const {
    if (n_learners < 1) throw ConfigError("train: n_learners must be >= 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("train: lambda must be finite and >= 0");
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (similarity != SimilarityKind::none && batch_size < 2)
        throw ConfigError("train: batch_size must be >= 2 when a similarity kernel is used");
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
}

Tensor images_to_batch(std::span<const Image> images) {
    std::vector<std::size_t> idx(images.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return images_to_batch(images, idx);
}

Tensor images_to_batch(std::span<const Image> images, std::span<const std::size_t> indices) {
    if (indices.empty()) throw ConfigError("images_to_batch: empty batch");
    const std::size_t d = images[indices.front()].size();
    std::vector<double> values;
    values.reserve(indices.size() * d);
    for (auto i : indices) {
        if (images[i].size() != d) throw ShapeError("images_to_batch: images differ in size");
        values.insert(values.end(), images[i].pixels.begin(), images[i].pixels.end());
    }
    return Tensor::from({indices.size(), d}, std::move(values));
}

Tensor sim_loss(SimilarityKind kind, const Tensor& current, std::span<const Tensor> frozen) {
    if (frozen.empty() || kind == SimilarityKind::none) return Tensor::scalar(0.0);
    Tensor total;
    for (std::size_t j = 0; j < frozen.size(); ++j) {
        if (frozen[j].rank() != 2 || current.rank() != 2 || frozen[j].rows() != current.rows())
            throw ShapeError("sim_loss: frozen features " + shape_string(frozen[j].shape()) +
                             " and current features " + shape_string(current.shape()) +
                             " have different row counts");
        Tensor s = graph::similarity(kind, frozen[j].detach(), current);
        total = j == 0 ? s : add(total, s);
    }
    return mul_scalar(total, 1.0 / static_cast<double>(frozen.size()));
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size,
                                                    std::uint64_t seed, std::size_t epoch) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(derive_seed(seed, epoch));
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        if (end - start == 1 && n > 1) break;
        batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                             perm.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

Learner train_learner(std::size_t index, std::span<const Image> data, std::span<const Learner> frozen,
                      const TrainConfig& config, const AutoencoderConfig& architecture,
                      std::vector<EpochLoss>* history) {
    config.validate();
    if (data.empty()) throw ConfigError("train_learner: empty dataset");
    if (frozen.size() != index)
        throw ConfigError("train_learner: learner " + std::to_string(index) + " needs " + std::to_string(index) +
                          " frozen predecessors, got " + std::to_string(frozen.size()));
    for (const auto& f : frozen) {
        if (!f.trained()) throw ConfigError("train_learner: predecessor learner is not frozen");
        if (f.config().input_dim != architecture.input_dim ||
            f.config().feature_dim() != architecture.feature_dim())
            throw ConfigError("train_learner: predecessor architecture differs");
    }

    AutoencoderConfig arch = architecture;
    arch.init_seed = config.learner_seed(index);
    Learner learner(arch);
    AdamState adam(AdamOptions{.learning_rate = config.learning_rate});
    const bool repel = config.lambda > 0.0 && config.similarity != SimilarityKind::none && !frozen.empty();
    const std::uint64_t shuffle_seed = derive_seed(config.learner_seed(index), kShuffleStream);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        EpochLoss sums;
        std::size_t seen = 0;
        const auto batches = epoch_batches(data.size(), config.batch_size, shuffle_seed, epoch);
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const Tensor x = images_to_batch(data, batches[b]);
            const auto out = forward(learner, x);
            const Tensor rec = reconstruction_loss(out.reconstruction, x);
            Tensor total = rec;
            double sim_value = 0.0;
            if (repel) {
                std::vector<Tensor> frozen_features;
                frozen_features.reserve(frozen.size());
                for (const auto& f : frozen) frozen_features.push_back(encode(f, x));
                const Tensor sim = sim_loss(config.similarity, out.features, frozen_features);
                sim_value = sim.item();
                total = add(rec, mul_scalar(sim, config.lambda));
            }
            const double total_value = total.item();
            if (!std::isfinite(total_value))
                throw TrainingError("non-finite loss for learner " + std::to_string(index) + " at epoch " +
                                    std::to_string(epoch) + ", batch " + std::to_string(b));
            learner.zero_grad();
            total.backward();
            adam_step(learner.parameters(), adam);

            const double w = static_cast<double>(batches[b].size());
            sums.total += w * total_value;
            sums.reconstruction += w * rec.item();
            sums.similarity += w * sim_value;
            seen += batches[b].size();
        }
        if (history) {
            const double n = static_cast<double>(seen);
            history->push_back({sums.total / n, sums.reconstruction / n, sums.similarity / n});
        }
    }
    learner.freeze();
    return learner;
}

Ensemble train_ensemble(std::span<const Image> data, const AutoencoderConfig& architecture,
                        const TrainConfig& config) {
    config.validate();
    architecture.validate();
    if (data.empty()) throw ConfigError("train_ensemble: empty dataset");
    Ensemble ens;
    ens.config = config;
    for (std::size_t i = 0; i < config.n_learners; ++i) {
        std::vector<EpochLoss> hist;
        ens.learners.push_back(train_learner(i, data, ens.learners, config, architecture, &hist));
        ens.history.push_back(std::move(hist));
    }
    return ens;
}

double mean_pairwise_cka(std::span<const Learner> learners, std::span<const Image> data,
                         std::size_t batch_size) {
    if (learners.size() < 2) throw ConfigError("mean_pairwise_cka: need at least 2 learners");
    if (batch_size < 2) throw ConfigError("mean_pairwise_cka: batch_size must be >= 2");
    double total = 0.0;
    std::size_t pairs = 0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start + 2 <= data.size(); start += batch_size) {
        idx.clear();
        for (std::size_t i = start; i < std::min(data.size(), start + batch_size); ++i) idx.push_back(i);
        if (idx.size() < 2) break;
        const Tensor x = images_to_batch(data, idx);
        std::vector<FeatureMatrix> feats;
        for (const auto& l : learners) feats.push_back(FeatureMatrix::from_tensor(encode(l, x).detach()));
        for (std::size_t i = 0; i < feats.size(); ++i) {
            for (std::size_t j = i + 1; j < feats.size(); ++j) {
                total += cka(feats[i], feats[j]);
                ++pairs;
            }
        }
    }
    if (pairs == 0) throw ConfigError("mean_pairwise_cka: need at least 2 images");
    return total / static_cast<double>(pairs);
}

void save_ensemble(const std::filesystem::path& dir, const Ensemble& ensemble) {
    const auto& c = ensemble.config;
    std::string seeds;
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        if (i) seeds += ",";
        seeds += std::to_string(ensemble.learners[i].config().init_seed);
    }
    std::string manifest;
    manifest += "n_learners = " + std::to_string(ensemble.size()) + "\n";
    manifest += "lambda = " + text::format_double(c.lambda) + "\n";
    manifest += "similarity_kind = " + std::string(to_string(c.similarity)) + "\n";
    manifest += "seeds = " + seeds + "\n";
    manifest += "epochs = " + std::to_string(c.epochs) + "\n";
    manifest += "batch_size = " + std::to_string(c.batch_size) + "\n";
    manifest += "learning_rate = " + text::format_double(c.learning_rate) + "\n";
    manifest += "master_seed = " + std::to_string(c.master_seed) + "\n";

    std::string history = "learner,epoch,total,reconstruction,similarity\n";
    for (std::size_t i = 0; i < ensemble.history.size(); ++i) {
        for (std::size_t e = 0; e < ensemble.history[i].size(); ++e) {
            const auto& h = ensemble.history[i][e];
            history += std::to_string(i) + "," + std::to_string(e) + "," + text::format_double(h.total) + "," +
                       text::format_double(h.reconstruction) + "," + text::format_double(h.similarity) + "\n";
        }
    }
    for (std::size_t i = 0; i < ensemble.size(); ++i) save_learner(dir / learner_file(i), ensemble.learners[i]);
    write_file_atomic(dir / "history.csv", history);
    write_file_atomic(dir / "manifest.txt", manifest);
}

Ensemble load_ensemble(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.txt";
    if (!std::filesystem::exists(manifest_path)) throw IoError("missing ensemble manifest", manifest_path.string());
    std::map<std::string, std::string> kv;
    for (auto& e : text::parse_key_values(read_text_file(manifest_path), manifest_path.string()))
        kv[e.key] = e.value;
    auto get = [&](const char* key) -> const std::string& {
        const auto it = kv.find(key);
        if (it == kv.end()) throw ConfigError(manifest_path.string() + ": missing key '" + key + "'");
        return it->second;
    };

    Ensemble ens;
    auto& c = ens.config;
    c.n_learners = text::parse_uint(get("n_learners"), "n_learners");
    c.lambda = text::parse_double(get("lambda"), "lambda");
    c.similarity = parse_similarity_kind(get("similarity_kind"));
    c.epochs = text::parse_uint(get("epochs"), "epochs");
    c.batch_size = text::parse_uint(get("batch_size"), "batch_size");
    c.learning_rate = text::parse_double(get("learning_rate"), "learning_rate");
    c.master_seed = text::parse_uint(get("master_seed"), "master_seed");

    for (std::size_t i = 0; i < c.n_learners; ++i) {
        const auto path = dir / learner_file(i);
        if (!std::filesystem::exists(path)) throw IoError("missing learner checkpoint", path.string());
        ens.learners.push_back(load_learner(path));
        if (ens.learners.back().config().input_dim != ens.learners.front().config().input_dim)
            throw ConfigError(path.string() + ": learner architecture differs from learner 0");
    }
    ens.history.resize(c.n_learners);
    const auto hist_path = dir / "history.csv";
    if (std::filesystem::exists(hist_path)) {
        const auto lines = text::split(read_text_file(hist_path), '\n');
        for (std::size_t k = 1; k < lines.size(); ++k) {
            const auto line = text::trim(lines[k]);
            if (line.empty()) continue;
            const auto cells = text::split(line, ',');
            if (cells.size() != 5) throw ConfigError(hist_path.string() + ": malformed line " + std::to_string(k + 1));
            const auto i = text::parse_uint(cells[0], "learner");
            if (i >= c.n_learners) throw ConfigError(hist_path.string() + ": learner index out of range");
            ens.history[i].push_back({text::parse_double(cells[2], "total"),
                                      text::parse_double(cells[3], "reconstruction"),
                                      text::parse_double(cells[4], "similarity")});
        }
    }
    return ens;
}

}  // namespace d2ue
