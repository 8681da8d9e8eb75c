#include "tcer/vocab.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

#include "tcer/common.hpp"
#include "tcer/serde.hpp"

namespace tcer {

namespace {

// Length of the UTF-8 sequence starting at byte b, or 0 if b cannot start one.
int utf8_seq_len(unsigned char b) {
    if (b < 0x80) return 1;
    if ((b & 0xE0) == 0xC0) return 2;
    if ((b & 0xF0) == 0xE0) return 3;
    if ((b & 0xF8) == 0xF0) return 4;
    return 0;
}

bool is_continuation(unsigned char b) { return (b & 0xC0) == 0x80; }

std::vector<std::string> split_chars(const std::string& text, const std::string& where) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        unsigned char b = static_cast<unsigned char>(text[i]);
        int len = utf8_seq_len(b);
        if (len == 0 || i + len > text.size()) {
            throw DataError("undecodable byte 0x" + [&] {
                char hex[8];
                std::snprintf(hex, sizeof(hex), "%02x", b);
                return std::string(hex);
            }() + " in " + where + " at byte offset " + std::to_string(i));
        }
        for (int k = 1; k < len; ++k) {
            if (!is_continuation(static_cast<unsigned char>(text[i + k]))) {
                throw DataError("undecodable byte in " + where + " at byte offset " +
                                std::to_string(i + k));
            }
        }
        out.push_back(text.substr(i, len));
        i += len;
    }
    return out;
}

std::vector<std::string> split_ws(const std::string& text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) out.push_back(text.substr(start, i - start));
    }
    return out;
}

std::vector<std::string> read_corpus_lines(const std::string& path) {
    return serde::read_lines(path);
}

}  // namespace

const char* tokenizer_mode_name(TokenizerMode m) {
    return m == TokenizerMode::chars ? "char" : "whitespace";
}

TokenizerMode tokenizer_mode_from_name(const std::string& name) {
    if (name == "char") return TokenizerMode::chars;
    if (name == "whitespace" || name == "ws") return TokenizerMode::whitespace;
    throw UsageError("unknown tokenizer mode: " + name);
}

std::vector<std::string> split_tokens(const std::string& text, TokenizerMode mode,
                                      const std::string& where) {
    return mode == TokenizerMode::chars ? split_chars(text, where) : split_ws(text);
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, int eos_id)
    : tokens_(std::move(tokens)), eos_id_(eos_id) {
    if (size() < 2) throw DataError("vocabulary needs at least one content token plus EOS");
    for (int i = 0; i < size(); ++i) {
        auto [it, inserted] = index_.emplace(tokens_[i], i);
        if (!inserted) throw DataError("duplicate token in vocabulary: " + tokens_[i]);
    }
    if (eos_id_ < 0 || eos_id_ >= size()) throw DataError("eos_id out of range");
}

Vocabulary Vocabulary::build_from_lines(const std::vector<std::string>& lines,
                                        TokenizerMode mode) {
    std::set<std::string> seen;
    for (std::size_t li = 0; li < lines.size(); ++li) {
        for (auto& tok : split_tokens(lines[li], mode, "line " + std::to_string(li + 1))) {
            if (tok == kEosToken)
                throw DataError(std::string("corpus contains the reserved token ") + kEosToken);
            seen.insert(std::move(tok));
        }
    }
    if (seen.empty()) throw DataError("empty corpus: no tokens found");
    std::vector<std::string> tokens(seen.begin(), seen.end());  // set is already sorted
    tokens.push_back(kEosToken);
    return Vocabulary(std::move(tokens), static_cast<int>(tokens.size()) - 1);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus_paths, TokenizerMode mode) {
    std::vector<std::string> all_lines;
    for (const auto& path : corpus_paths) {
        auto lines = read_corpus_lines(path);
        all_lines.insert(all_lines.end(), lines.begin(), lines.end());
    }
    try {
        return build_from_lines(all_lines, mode);
    } catch (const DataError& e) {
        throw DataError(std::string(e.what()) + " (corpus files: " +
                        (corpus_paths.empty() ? std::string("<none>") : corpus_paths.front()) +
                        (corpus_paths.size() > 1 ? ", ..." : "") + ")");
    }
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("tokens") || !j.contains("eos_id"))
        throw DataError("vocabulary JSON must be {\"tokens\": [...], \"eos_id\": n}");
    std::vector<std::string> tokens = j.at("tokens").get<std::vector<std::string>>();
    int eos = j.at("eos_id").get<int>();
    return Vocabulary(std::move(tokens), eos);
}

nlohmann::json Vocabulary::to_json() const {
    return nlohmann::json{{"tokens", tokens_}, {"eos_id", eos_id_}};
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || id >= size()) throw DataError("token id out of range: " + std::to_string(id));
    return tokens_[static_cast<std::size_t>(id)];
}

int Vocabulary::lookup(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : it->second;
}

std::size_t Corpus::total_tokens() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.size();
    return n;
}

TokenSeq tokenize(const std::string& text, const Vocabulary& vocab, TokenizerMode mode) {
    auto parts = split_tokens(text, mode);
    if (parts.empty()) throw DataError("cannot tokenize empty input");
    TokenSeq seq;
    seq.ids.reserve(parts.size() + 1);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        int id = vocab.lookup(parts[i]);
        if (id < 0 || id == vocab.eos_id())
            throw DataError("unknown token '" + parts[i] + "' at position " + std::to_string(i));
        seq.ids.push_back(id);
    }
    seq.ids.push_back(vocab.eos_id());
    return seq;
}

std::string detokenize(const TokenSeq& seq, const Vocabulary& vocab, TokenizerMode mode) {
    std::string out;
    for (std::size_t i = 0; i < seq.ids.size(); ++i) {
        int id = seq.ids[i];
        if (id == vocab.eos_id()) {
            if (i + 1 != seq.ids.size()) throw DataError("EOS not in final position");
            break;
        }
        if (mode == TokenizerMode::whitespace && !out.empty()) out += ' ';
        out += vocab.token(id);
    }
    return out;
}

Corpus corpus_from_lines(const std::vector<std::string>& lines, const Vocabulary& vocab,
                         TokenizerMode mode, const std::string& source_name) {
    Corpus corpus;
    corpus.source_path = source_name;
    corpus.tokenizer_mode = mode;
    for (std::size_t li = 0; li < lines.size(); ++li) {
        try {
            corpus.sequences.push_back(tokenize(lines[li], vocab, mode));
        } catch (const DataError& e) {
            throw DataError(std::string(e.what()) + " (" + source_name + ": line " +
                            std::to_string(li + 1) + ")");
        }
    }
    if (corpus.sequences.empty()) throw DataError("empty corpus: " + source_name);
    return corpus;
}

Corpus load_corpus(const std::string& path, const Vocabulary& vocab, TokenizerMode mode) {
    return corpus_from_lines(read_corpus_lines(path), vocab, mode, path);
}

}  // namespace tcer
