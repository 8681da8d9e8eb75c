#pragma once

// Per-step training diagnostics, one JSONL record per step:
// {"step": n, "mean_reward": f, "mean_entropy": f, "kl": f,
//  "coverage": f, "clip_frac": f}

#include <string>
#include <vector>

namespace tcer {

struct RunLogRecord {
    int step = 0;
    double mean_reward = 0.0;
    double mean_entropy = 0.0;
    double kl = 0.0;
    double coverage = 0.0;
    double clip_frac = 0.0;
};

struct RunLog {
    std::vector<RunLogRecord> records;

    bool empty() const { return records.empty(); }
    std::size_t size() const { return records.size(); }
};

std::string runlog_to_jsonl(const RunLog& log);
void save_runlog(const RunLog& log, const std::string& path);

// Malformed records report their line number.
RunLog load_runlog(const std::string& path);
RunLog parse_runlog(const std::vector<std::string>& lines, const std::string& source);

}  // namespace tcer
