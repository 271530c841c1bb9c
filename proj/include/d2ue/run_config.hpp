#pragma once

// Flat `key = value` run configuration shared by every CLI subcommand.
// Unknown keys are rejected. `to_text()` emits every key in a fixed order
// and is itself a valid config file, so a written run manifest can be fed
// back through --config to reproduce a run.

#include "d2ue/dsu.hpp"
#include "d2ue/model.hpp"
#include "d2ue/synthetic.hpp"
#include "d2ue/training.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace d2ue {

struct RunConfig {
    BenchmarkParams data;
    AutoencoderConfig model;
    TrainConfig train;
    ScoreMethod method = ScoreMethod::dsu;
    Reduction reduction = Reduction::mean;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::vector<std::size_t> ids{0};
    std::size_t threads = 1;
    std::filesystem::path out = "runs/default";
    std::filesystem::path dataset_dir;   // empty -> out/dataset
    std::filesystem::path ensemble_dir;  // empty -> out/ensemble

    /// Sets one key from its textual value. Throws ConfigError on unknown
    /// keys or invalid values.
    void set(std::string_view key, std::string_view value);
    /// Applies every line of a config file; `source` names it in errors.
    void apply_text(std::string_view content, std::string_view source);
    void apply_file(const std::filesystem::path& path);

    std::string to_text() const;
    void validate() const;

    /// Input dimension follows the image size.
    AutoencoderConfig architecture() const;
    std::filesystem::path resolved_dataset_dir() const;
    std::filesystem::path resolved_ensemble_dir() const;

    static const std::vector<std::string>& known_keys();
};

}  // namespace d2ue
