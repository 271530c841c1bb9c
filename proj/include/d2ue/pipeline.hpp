#pragma once

// Subcommand implementations behind the `d2ue` CLI. Every command writes its
// outputs atomically and drops a `run_manifest.txt` (the fully resolved
// RunConfig) next to them.
//
// Layout under RunConfig::out:
//   dataset/   train_images.idx, test_images.idx, test_labels.idx,
//              test_masks.idx, manifest.txt
//   ensemble/  learner_<i>.d2ue, manifest.txt, history.csv
//   eval/      metrics_<method>.csv, scores_<method>.csv
//   ablate/    ablation.csv
//   heatmap/   <id>_<method>.pgm, <id>_montage.pgm

#include "d2ue/run_config.hpp"
#include "d2ue/synthetic.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace d2ue {

void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);
/// Throws IoError naming the first missing file.
Dataset load_dataset(const std::filesystem::path& dir);

struct EvalResult {
    double auroc = 0.0;
    double average_precision = 0.0;
    std::filesystem::path metrics_csv;
    std::filesystem::path scores_csv;
};

/// One row of the ablation table.
struct AblationRow {
    int table = 2;            // 2: component ablation, 3: similarity kernels
    std::string variant;      // ens_recon, output_unc, rar+output_unc, dsu, rar+dsu
    std::string similarity;   // kernel used during training
    std::uint64_t seed = 0;
    double auroc = 0.0;
    double average_precision = 0.0;
};

struct AblationSummary {
    int table = 2;
    std::string variant;
    std::string similarity;
    double auroc_mean = 0.0, auroc_std = 0.0;
    double ap_mean = 0.0, ap_std = 0.0;
};

struct AblationResult {
    std::vector<AblationRow> rows;
    std::vector<AblationSummary> summaries;
    std::filesystem::path csv;
};

std::filesystem::path cmd_synth(const RunConfig& config);
std::filesystem::path cmd_train(const RunConfig& config);
EvalResult cmd_eval(const RunConfig& config);
AblationResult cmd_ablate(const RunConfig& config);
std::vector<std::filesystem::path> cmd_heatmap(const RunConfig& config);

/// Rows for one seed of the ablation, computed in memory (no files).
std::vector<AblationRow> ablation_rows_for_seed(const Dataset& dataset, const RunConfig& config,
                                                std::uint64_t seed);

std::string format_ablation_csv(const AblationResult& result);

}  // namespace d2ue
