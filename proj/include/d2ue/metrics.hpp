#pragma once

#include <span>
#include <vector>

namespace d2ue {

/// Parallel score/label lists; labels are 0 (normal) or 1 (anomalous).
struct LabeledScores {
    std::vector<double> scores;
    std::vector<int> labels;

    void validate() const;
};

/// Probability that a random positive outscores a random negative, ties
/// counting one half. O(n log n). Throws ConfigError unless both classes
/// are present.
double auroc(const LabeledScores& data);

/// Step-integrated average precision over the descending-score sweep, with
/// equal scores processed as one group. Throws ConfigError without positives.
double average_precision(const LabeledScores& data);

}  // namespace d2ue
