#include "d2ue/metrics.hpp"

#include "d2ue/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace d2ue {
namespace {

struct ClassCounts {
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

ClassCounts count_classes(const LabeledScores& d) {
    d.validate();
    ClassCounts c;
    for (int l : d.labels) (l == 1 ? c.positives : c.negatives)++;
    return c;
}

// Indices sorted by descending score; ties keep input order.
std::vector<std::size_t> descending_order(const std::vector<double>& scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return idx;
}

}  // namespace

void LabeledScores::validate() const {
    if (scores.size() != labels.size())
        throw ConfigError("labeled scores: " + std::to_string(scores.size()) + " scores but " +
                          std::to_string(labels.size()) + " labels");
    for (int l : labels)
        if (l != 0 && l != 1) throw ConfigError("labeled scores: label " + std::to_string(l) + " is not 0 or 1");
    for (double s : scores)
        if (std::isnan(s)) throw ConfigError("labeled scores: NaN score");
}

double auroc(const LabeledScores& data) {
    const auto counts = count_classes(data);
    if (counts.positives == 0 || counts.negatives == 0)
        throw ConfigError("AUROC undefined: need both positive and negative samples");

    // Sweep tie groups in descending order; each positive in a group beats
    // every negative seen below it and ties half of the group's negatives.
    const auto order = descending_order(data.scores);
    double wins = 0.0;
    std::size_t neg_remaining = counts.negatives;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i, pos = 0, neg = 0;
        while (j < order.size() && data.scores[order[j]] == data.scores[order[i]]) {
            (data.labels[order[j]] == 1 ? pos : neg)++;
            ++j;
        }
        neg_remaining -= neg;
        wins += static_cast<double>(pos) * (static_cast<double>(neg_remaining) + 0.5 * static_cast<double>(neg));
        i = j;
    }
    return wins / (static_cast<double>(counts.positives) * static_cast<double>(counts.negatives));
}

double average_precision(const LabeledScores& data) {
    const auto counts = count_classes(data);
    if (counts.positives == 0) throw ConfigError("average precision undefined: no positive samples");

    const auto order = descending_order(data.scores);
    double ap = 0.0;
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i, pos = 0;
        while (j < order.size() && data.scores[order[j]] == data.scores[order[i]]) {
            if (data.labels[order[j]] == 1) ++pos;
            ++j;
        }
        tp += pos;
        fp += (j - i) - pos;
        if (pos > 0) {
            const double recall_step = static_cast<double>(pos) / static_cast<double>(counts.positives);
            const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
            ap += recall_step * precision;
        }
        i = j;
    }
    return ap;
}

}  // namespace d2ue
