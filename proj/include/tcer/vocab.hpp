#pragma once

// Vocabulary construction, tokenization, and corpus ingestion.
//
// Tokens are either single code points (char mode) or whitespace-separated
// words. The EOS token is always synthesized, never read from text, and
// always sits at the last index; content tokens are sorted lexicographically
// so construction is deterministic and order-independent.

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace tcer {

enum class TokenizerMode { chars, whitespace };

const char* tokenizer_mode_name(TokenizerMode m);
TokenizerMode tokenizer_mode_from_name(const std::string& name);

struct TokenSeq {
    std::vector<int> ids;

    bool empty() const { return ids.empty(); }
    std::size_t size() const { return ids.size(); }
};

class Vocabulary {
public:
    static constexpr const char* kEosToken = "<eos>";

    // Union of tokens over all files plus EOS; lexicographic order, EOS last.
    static Vocabulary build(const std::vector<std::string>& corpus_paths, TokenizerMode mode);

    // Same, from in-memory lines (one sequence per line).
    static Vocabulary build_from_lines(const std::vector<std::string>& lines, TokenizerMode mode);

    static Vocabulary from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    int size() const { return static_cast<int>(tokens_.size()); }
    int eos_id() const { return eos_id_; }
    const std::vector<std::string>& tokens() const { return tokens_; }
    const std::string& token(int id) const;

    // -1 when unknown.
    int lookup(const std::string& token) const;

    bool operator==(const Vocabulary& other) const {
        return tokens_ == other.tokens_ && eos_id_ == other.eos_id_;
    }

private:
    Vocabulary(std::vector<std::string> tokens, int eos_id);

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
    int eos_id_ = 0;
};

struct Corpus {
    std::vector<TokenSeq> sequences;
    std::string source_path;
    TokenizerMode tokenizer_mode = TokenizerMode::chars;

    // Token count including the EOS terminators.
    std::size_t total_tokens() const;
};

// Splits text into token strings. Char mode yields UTF-8 code points and
// reports undecodable bytes with their offset; whitespace mode splits on
// ASCII whitespace runs.
std::vector<std::string> split_tokens(const std::string& text, TokenizerMode mode,
                                      const std::string& where = "input");

// ids in text order with EOS appended. Empty or unknown-token input throws.
TokenSeq tokenize(const std::string& text, const Vocabulary& vocab, TokenizerMode mode);

// Inverse of tokenize: drops the trailing EOS, joins whitespace tokens with
// single spaces.
std::string detokenize(const TokenSeq& seq, const Vocabulary& vocab, TokenizerMode mode);

// One sequence per line; blank lines skipped; every sequence EOS-terminated.
Corpus load_corpus(const std::string& path, const Vocabulary& vocab, TokenizerMode mode);
Corpus corpus_from_lines(const std::vector<std::string>& lines, const Vocabulary& vocab,
                         TokenizerMode mode, const std::string& source_name = "<memory>");

}  // namespace tcer
