#pragma once

// Post-hoc analysis: sentence-level validation metrics against externally
// supplied quality labels, entropy-trajectory statistics, and paired run
// comparison.

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <string>
#include <vector>

#include "tcer/reward.hpp"
#include "tcer/runlog.hpp"

namespace tcer::diag {

// One scored text: per-sentence mean rewards plus the sentence token ranges
// the labels are matched against.
struct ScoredText {
    std::string id;  // empty -> matched by position
    std::vector<reward::SentenceSpan> sentences;
    std::vector<double> sentence_endor;
    std::vector<double> sentence_tcer;
};

struct QualityLabels {
    struct TextLabels {
        std::string id;
        std::vector<reward::SentenceSpan> high_quality;  // token ranges
    };
    std::vector<TextLabels> texts;

    // {"texts": [{"id": ..., "high_quality": [[start,end], ...]}, ...]}
    static QualityLabels from_json(const nlohmann::json& j);
};

struct VariantMetrics {
    double high_quality_avg = 0.0;  // pooled over labeled sentences
    double regular_avg = 0.0;       // pooled over the rest
    double recall_at_k = 0.0;       // per-text recall, averaged across texts
};

struct ValidationReport {
    VariantMetrics endor;
    VariantMetrics tcer;
    std::size_t texts = 0;
    std::size_t high_quality_sentences = 0;
    std::size_t regular_sentences = 0;
    std::size_t min_labels_per_text = 0;

    std::string to_json_string() const;
};

// Labels must match scored texts (by id when present, else by position) and
// every labeled range must equal one of the text's sentence ranges. k for
// the recall metric is each text's number of labeled sentences; ties in
// sentence reward break toward the earlier sentence.
ValidationReport sentence_metrics(const std::vector<ScoredText>& scored,
                                  const QualityLabels& labels);

struct EntropyTrajectory {
    std::vector<std::pair<int, double>> series;  // (step, mean_entropy)
    double initial = 0.0;
    double final = 0.0;
    std::optional<int> half_decay_step;  // first step below 50% of initial
};

EntropyTrajectory entropy_trajectory(const RunLog& log);

struct RunComparison {
    std::vector<double> entropy_delta;  // b - a, per step
    std::vector<double> reward_delta;
    bool b_final_entropy_greater = false;
    bool b_final_reward_greater = false;
};

// Logs must have equal step counts.
RunComparison compare_runs(const RunLog& a, const RunLog& b);

// CSV with header step,entropy_a,entropy_b,reward_a,reward_b
std::string comparison_csv(const RunLog& a, const RunLog& b);

}  // namespace tcer::diag
