#pragma once

// Serialization helpers shared by checkpoints, run logs, and the CLI.
// All numeric output goes through g17(): 17 significant digits, enough to
// round-trip any double exactly, so reruns can be compared byte-for-byte.

#include <nlohmann/json_fwd.hpp>

#include <span>
#include <string>
#include <vector>

namespace tcer::serde {

std::string g17(double v);

// JSON array "[a,b,...]" with g17 elements.
std::string g17_array(std::span<const double> values);

// Parses one JSON document; wraps parse failures in DataError mentioning
// `what` (a file name or "line N").
nlohmann::json parse_json(const std::string& text, const std::string& what);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// JSONL: one JSON document per LF-terminated line. Skips blank lines.
std::vector<std::string> read_lines(const std::string& path);

}  // namespace tcer::serde
