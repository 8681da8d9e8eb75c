#include "tcer/diagnostics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <numeric>

#include "tcer/common.hpp"
#include "tcer/serde.hpp"

namespace tcer::diag {

QualityLabels QualityLabels::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("texts") || !j.at("texts").is_array())
        throw DataError("labels JSON must be {\"texts\": [...]}");
    QualityLabels labels;
    for (const auto& t : j.at("texts")) {
        TextLabels tl;
        if (t.contains("id")) {
            if (t.at("id").is_string())
                tl.id = t.at("id").get<std::string>();
            else
                tl.id = t.at("id").dump();
        }
        if (!t.contains("high_quality") || !t.at("high_quality").is_array())
            throw DataError("each labeled text needs a high_quality range list");
        for (const auto& r : t.at("high_quality")) {
            if (!r.is_array() || r.size() != 2)
                throw DataError("high_quality ranges must be [start, end] pairs");
            reward::SentenceSpan span;
            span.begin = r.at(0).get<std::size_t>();
            span.end = r.at(1).get<std::size_t>();
            tl.high_quality.push_back(span);
        }
        labels.texts.push_back(std::move(tl));
    }
    return labels;
}

namespace {

// Per-text recall@k for one reward column; k = number of labeled sentences.
double recall_at_k(const std::vector<double>& rewards, const std::vector<bool>& is_hq,
                   std::size_t k) {
    std::vector<std::size_t> idx(rewards.size());
    std::iota(idx.begin(), idx.end(), 0);
    // ties break toward the earlier sentence: stable sort on reward only
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return rewards[a] > rewards[b]; });
    std::size_t hit = 0;
    for (std::size_t r = 0; r < k && r < idx.size(); ++r)
        if (is_hq[idx[r]]) ++hit;
    return static_cast<double>(hit) / static_cast<double>(k);
}

struct Accumulator {
    double hq_sum = 0.0, reg_sum = 0.0, recall_sum = 0.0;
};

}  // namespace

ValidationReport sentence_metrics(const std::vector<ScoredText>& scored,
                                  const QualityLabels& labels) {
    if (scored.size() != labels.texts.size())
        throw DataError("labels cover " + std::to_string(labels.texts.size()) + " texts but " +
                        std::to_string(scored.size()) + " were scored");

    ValidationReport report;
    report.texts = scored.size();
    report.min_labels_per_text = scored.empty() ? 0 : SIZE_MAX;
    Accumulator acc_endor, acc_tcer;

    for (std::size_t ti = 0; ti < scored.size(); ++ti) {
        const ScoredText& text = scored[ti];
        const QualityLabels::TextLabels& tl = labels.texts[ti];
        if (!tl.id.empty() && !text.id.empty() && tl.id != text.id)
            throw DataError("label id '" + tl.id + "' does not match scored text '" + text.id +
                            "' at position " + std::to_string(ti));
        if (tl.high_quality.empty())
            throw DataError("text " + std::to_string(ti) + " has no high-quality sentences");

        std::vector<bool> is_hq(text.sentences.size(), false);
        for (const reward::SentenceSpan& span : tl.high_quality) {
            bool found = false;
            for (std::size_t si = 0; si < text.sentences.size(); ++si) {
                if (text.sentences[si].begin == span.begin && text.sentences[si].end == span.end) {
                    if (is_hq[si]) throw DataError("duplicate high-quality label");
                    is_hq[si] = true;
                    found = true;
                    break;
                }
            }
            if (!found)
                throw DataError("label range [" + std::to_string(span.begin) + ", " +
                                std::to_string(span.end) + ") matches no sentence of text " +
                                std::to_string(ti));
        }

        std::size_t k = tl.high_quality.size();
        report.min_labels_per_text = std::min(report.min_labels_per_text, k);
        for (std::size_t si = 0; si < text.sentences.size(); ++si) {
            if (is_hq[si]) {
                acc_endor.hq_sum += text.sentence_endor[si];
                acc_tcer.hq_sum += text.sentence_tcer[si];
                ++report.high_quality_sentences;
            } else {
                acc_endor.reg_sum += text.sentence_endor[si];
                acc_tcer.reg_sum += text.sentence_tcer[si];
                ++report.regular_sentences;
            }
        }
        acc_endor.recall_sum += recall_at_k(text.sentence_endor, is_hq, k);
        acc_tcer.recall_sum += recall_at_k(text.sentence_tcer, is_hq, k);
    }

    auto finish = [&](const Accumulator& a) {
        VariantMetrics m;
        m.high_quality_avg =
            report.high_quality_sentences
                ? a.hq_sum / static_cast<double>(report.high_quality_sentences)
                : 0.0;
        m.regular_avg = report.regular_sentences
                            ? a.reg_sum / static_cast<double>(report.regular_sentences)
                            : 0.0;
        m.recall_at_k = report.texts ? a.recall_sum / static_cast<double>(report.texts) : 0.0;
        return m;
    };
    report.endor = finish(acc_endor);
    report.tcer = finish(acc_tcer);
    return report;
}

std::string ValidationReport::to_json_string() const {
    auto variant = [](const VariantMetrics& m) {
        return std::string("{\"high_quality_avg\":") + serde::g17(m.high_quality_avg) +
               ",\"regular_avg\":" + serde::g17(m.regular_avg) +
               ",\"recall_at_k\":" + serde::g17(m.recall_at_k) + "}";
    };
    std::string out = "{\"endor\":" + variant(endor) + ",\"tcer\":" + variant(tcer);
    out += ",\"texts\":" + std::to_string(texts);
    out += ",\"high_quality_sentences\":" + std::to_string(high_quality_sentences);
    out += ",\"regular_sentences\":" + std::to_string(regular_sentences);
    out += ",\"min_labels_per_text\":" + std::to_string(min_labels_per_text);
    out += "}\n";
    return out;
}

EntropyTrajectory entropy_trajectory(const RunLog& log) {
    if (log.empty()) throw DataError("entropy_trajectory: empty run log");
    EntropyTrajectory t;
    for (const RunLogRecord& r : log.records) t.series.emplace_back(r.step, r.mean_entropy);
    t.initial = log.records.front().mean_entropy;
    t.final = log.records.back().mean_entropy;
    for (const RunLogRecord& r : log.records) {
        if (r.mean_entropy < 0.5 * t.initial) {
            t.half_decay_step = r.step;
            break;
        }
    }
    return t;
}

RunComparison compare_runs(const RunLog& a, const RunLog& b) {
    if (a.size() != b.size())
        throw DataError("compare_runs: step counts differ (" + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + ")");
    if (a.empty()) throw DataError("compare_runs: empty logs");
    RunComparison c;
    for (std::size_t i = 0; i < a.size(); ++i) {
        c.entropy_delta.push_back(b.records[i].mean_entropy - a.records[i].mean_entropy);
        c.reward_delta.push_back(b.records[i].mean_reward - a.records[i].mean_reward);
    }
    c.b_final_entropy_greater = b.records.back().mean_entropy > a.records.back().mean_entropy;
    c.b_final_reward_greater = b.records.back().mean_reward > a.records.back().mean_reward;
    return c;
}

std::string comparison_csv(const RunLog& a, const RunLog& b) {
    if (a.size() != b.size()) throw DataError("comparison_csv: step counts differ");
    std::string out = "step,entropy_a,entropy_b,reward_a,reward_b\n";
    for (std::size_t i = 0; i < a.size(); ++i) {
        out += std::to_string(a.records[i].step);
        out += ',' + serde::g17(a.records[i].mean_entropy);
        out += ',' + serde::g17(b.records[i].mean_entropy);
        out += ',' + serde::g17(a.records[i].mean_reward);
        out += ',' + serde::g17(b.records[i].mean_reward);
        out += '\n';
    }
    return out;
}

}  // namespace tcer::diag
