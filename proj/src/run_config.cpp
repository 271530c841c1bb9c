#include "d2ue/run_config.hpp"

#include "d2ue/error.hpp"
#include "d2ue/file_util.hpp"
#include "d2ue/text.hpp"

#include <algorithm>

namespace d2ue {
namespace {

template <typename T, typename F>
std::vector<T> parse_list(std::string_view value, std::string_view key, F parse_one) {
    std::vector<T> out;
    if (text::trim(value).empty()) return out;
    for (const auto& cell : text::split(value, ',')) out.push_back(static_cast<T>(parse_one(cell, key)));
    return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

std::size_t parse_size(std::string_view v, std::string_view key) {
    return static_cast<std::size_t>(text::parse_uint(v, key));
}

}  // namespace

const std::vector<std::string>& RunConfig::known_keys() {
    static const std::vector<std::string> keys{
        "data_seed", "n_train", "n_test_normal", "n_test_anom", "height", "width",
        "hidden_dims", "bottleneck_dim", "activation", "feature_layer",
        "n_learners", "lambda", "similarity", "epochs", "batch_size", "learning_rate", "seed",
        "method", "reduction", "seeds", "ids", "threads",
        "out", "dataset_dir", "ensemble_dir"};
    return keys;
}

void RunConfig::set(std::string_view key, std::string_view raw) {
    const auto value = text::trim(raw);
    if (key == "data_seed") data.seed = text::parse_uint(value, key);
    else if (key == "n_train") data.n_train = parse_size(value, key);
    else if (key == "n_test_normal") data.n_test_normal = parse_size(value, key);
    else if (key == "n_test_anom") data.n_test_anom = parse_size(value, key);
    else if (key == "height") data.height = parse_size(value, key);
    else if (key == "width") data.width = parse_size(value, key);
    else if (key == "hidden_dims") model.hidden_dims = parse_list<std::size_t>(value, key, parse_size);
    else if (key == "bottleneck_dim") model.bottleneck_dim = parse_size(value, key);
    else if (key == "activation") model.activation = parse_activation(value);
    else if (key == "feature_layer") model.feature_layer = static_cast<int>(text::parse_int(value, key));
    else if (key == "n_learners") train.n_learners = parse_size(value, key);
    else if (key == "lambda") train.lambda = text::parse_double(value, key);
    else if (key == "similarity") train.similarity = parse_similarity_kind(value);
    else if (key == "epochs") train.epochs = parse_size(value, key);
    else if (key == "batch_size") train.batch_size = parse_size(value, key);
    else if (key == "learning_rate") train.learning_rate = text::parse_double(value, key);
    else if (key == "seed") train.master_seed = text::parse_uint(value, key);
    else if (key == "method") method = parse_score_method(value);
    else if (key == "reduction") reduction = parse_reduction(value);
    else if (key == "seeds") seeds = parse_list<std::uint64_t>(value, key, text::parse_uint);
    else if (key == "ids") ids = parse_list<std::size_t>(value, key, parse_size);
    else if (key == "threads") threads = parse_size(value, key);
    else if (key == "out") out = std::string(value);
    else if (key == "dataset_dir") dataset_dir = std::string(value);
    else if (key == "ensemble_dir") ensemble_dir = std::string(value);
    else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void RunConfig::apply_text(std::string_view content, std::string_view source) {
    for (const auto& kv : text::parse_key_values(content, source)) {
        try {
            set(kv.key, kv.value);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(source) + ":" + std::to_string(kv.line) + ": " + e.what());
        }
    }
}

void RunConfig::apply_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("config file not found", path.string());
    apply_text(read_text_file(path), path.string());
}

std::string RunConfig::to_text() const {
    std::string s;
    auto line = [&](const char* k, const std::string& v) { s += std::string(k) + " = " + v + "\n"; };
    line("data_seed", std::to_string(data.seed));
    line("n_train", std::to_string(data.n_train));
    line("n_test_normal", std::to_string(data.n_test_normal));
    line("n_test_anom", std::to_string(data.n_test_anom));
    line("height", std::to_string(data.height));
    line("width", std::to_string(data.width));
    line("hidden_dims", join(model.hidden_dims));
    line("bottleneck_dim", std::to_string(model.bottleneck_dim));
    line("activation", std::string(to_string(model.activation)));
    line("feature_layer", std::to_string(model.feature_layer));
    line("n_learners", std::to_string(train.n_learners));
    line("lambda", text::format_double(train.lambda));
    line("similarity", std::string(to_string(train.similarity)));
    line("epochs", std::to_string(train.epochs));
    line("batch_size", std::to_string(train.batch_size));
    line("learning_rate", text::format_double(train.learning_rate));
    line("seed", std::to_string(train.master_seed));
    line("method", std::string(to_string(method)));
    line("reduction", std::string(to_string(reduction)));
    line("seeds", join(seeds));
    line("ids", join(ids));
    line("threads", std::to_string(threads));
    line("out", out.string());
    line("dataset_dir", dataset_dir.string());
    line("ensemble_dir", ensemble_dir.string());
    return s;
}

void RunConfig::validate() const {
    data.validate();
    architecture().validate();
    train.validate();
    if (seeds.empty()) throw ConfigError("seeds: need at least one seed");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (out.empty()) throw ConfigError("out must not be empty");
}

AutoencoderConfig RunConfig::architecture() const {
    AutoencoderConfig a = model;
    a.input_dim = data.height * data.width;
    return a;
}

std::filesystem::path RunConfig::resolved_dataset_dir() const {
    return dataset_dir.empty() ? out / "dataset" : dataset_dir;
}

std::filesystem::path RunConfig::resolved_ensemble_dir() const {
    return ensemble_dir.empty() ? out / "ensemble" : ensemble_dir;
}

}  // namespace d2ue
