#include "tcer/runlog.hpp"

#include <nlohmann/json.hpp>

#include "tcer/common.hpp"
#include "tcer/serde.hpp"

namespace tcer {

std::string runlog_to_jsonl(const RunLog& log) {
    std::string out;
    for (const RunLogRecord& r : log.records) {
        out += "{\"step\":" + std::to_string(r.step);
        out += ",\"mean_reward\":" + serde::g17(r.mean_reward);
        out += ",\"mean_entropy\":" + serde::g17(r.mean_entropy);
        out += ",\"kl\":" + serde::g17(r.kl);
        out += ",\"coverage\":" + serde::g17(r.coverage);
        out += ",\"clip_frac\":" + serde::g17(r.clip_frac);
        out += "}\n";
    }
    return out;
}

void save_runlog(const RunLog& log, const std::string& path) {
    serde::write_file(path, runlog_to_jsonl(log));
}

RunLog parse_runlog(const std::vector<std::string>& lines, const std::string& source) {
    RunLog log;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string where = source + ": line " + std::to_string(i + 1);
        nlohmann::json j = serde::parse_json(lines[i], where);
        if (!j.is_object() || !j.contains("step") || !j.contains("mean_reward") ||
            !j.contains("mean_entropy") || !j.contains("kl") || !j.contains("coverage") ||
            !j.contains("clip_frac"))
            throw DataError("missing run-log field in " + where);
        RunLogRecord r;
        r.step = j.at("step").get<int>();
        r.mean_reward = j.at("mean_reward").get<double>();
        r.mean_entropy = j.at("mean_entropy").get<double>();
        r.kl = j.at("kl").get<double>();
        r.coverage = j.at("coverage").get<double>();
        r.clip_frac = j.at("clip_frac").get<double>();
        log.records.push_back(r);
    }
    return log;
}

RunLog load_runlog(const std::string& path) {
    return parse_runlog(serde::read_lines(path), path);
}

}  // namespace tcer
