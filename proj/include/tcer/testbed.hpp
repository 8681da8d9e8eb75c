#pragma once

// Canned desk-scale experiments. A testbed is two seeded synthetic bigram
// grammars over a shared alphabet — the "general" one broad, the "domain"
// one remixing part of each row onto tokens the general grammar rarely
// emits — plus the fit/RL configuration and an expected phenomenon to check.

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tcer/grpo.hpp"
#include "tcer/policy.hpp"
#include "tcer/sft.hpp"
#include "tcer/vocab.hpp"

namespace tcer::testbed {

enum class Phenomenon { entropy_collapse, entropy_preserved, positive_phi_on_domain };

const char* phenomenon_name(Phenomenon p);
Phenomenon phenomenon_from_name(const std::string& name);

struct GrammarSpec {
    int alphabet = 12;           // content letters; vocabulary is alphabet + EOS
    int branching = 5;           // successors with mass per row
    std::uint64_t grammar_seed = 7;  // structural seed, fixed per testbed
    double stop_prob = 0.12;     // per-step stop chance past min_len
    int min_len = 6;
    int max_len = 24;
};

struct DomainSpec {
    double mix = 0.5;            // row mass moved onto domain successors
    int successors = 2;          // domain successors per treated row
    double row_fraction = 0.75;  // fraction of rows treated
};

struct TestbedSpec {
    std::string name = "default";
    GrammarSpec grammar;
    DomainSpec domain;
    int general_sequences = 400;
    int domain_sequences = 200;  // SFT half; an equal held-out half feeds RL
    int prompt_len = 2;
    Phenomenon expected = Phenomenon::entropy_preserved;
    double collapse_ratio = 0.25;  // endor verdict: final entropy < ratio * initial
    sft::FitConfig fit;
    grpo::GrpoConfig rl;

    void validate() const;
    static TestbedSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    static TestbedSpec load(const std::string& path);
};

struct TestbedData {
    Vocabulary vocab;
    Corpus general;                          // pi_b training text
    Corpus domain;                           // pi_s training text (SFT half)
    grpo::PromptSet rl_data;                 // prompts/references from the held-out half
    std::vector<TokenSeq> heldout_domain;    // full held-out domain sequences
    std::vector<TokenSeq> heldout_general;   // held-out general sequences
    std::vector<std::string> general_lines;  // raw text, for corpus files
    std::vector<std::string> domain_lines;
    std::vector<std::string> heldout_lines;
};

// Bit-exact in (spec, seed).
TestbedData generate_testbed(const TestbedSpec& spec, std::uint64_t seed);

struct FittedPolicies {
    Policy pi_b;
    Policy pi_s;  // initialized from the fitted pi_b
};

FittedPolicies fit_testbed_policies(const TestbedSpec& spec, const TestbedData& data,
                                    int threads = 1);

// Mean smoothed log-ratio ln((p+eps)/(q+eps)) over all tokens of the texts.
double mean_info_gain(const Policy& pi_s, const Policy& pi_b,
                      const std::vector<TokenSeq>& texts, double epsilon);

struct PhenomenonVerdict {
    bool pass = false;
    Phenomenon expected = Phenomenon::entropy_preserved;
    double initial_entropy = 0.0;
    double final_entropy = 0.0;
    double endor_final_entropy = 0.0;  // paired runs only
    double tcer_final_entropy = 0.0;
    double mean_phi_domain = 0.0;
    double mean_phi_general = 0.0;
    std::string detail;

    std::string to_json_string() const;
};

struct PhenomenonRun {
    FittedPolicies fitted;
    std::optional<grpo::TrainResult> endor_run;
    std::optional<grpo::TrainResult> tcer_run;
    PhenomenonVerdict verdict;
};

// Generates the testbed, fits pi_b/pi_s, and runs whatever the expected
// phenomenon needs: entropy_collapse trains the requested variant,
// entropy_preserved trains the endor/tcer pair under the same seed, and
// positive_phi_on_domain stops after fitting.
PhenomenonRun run_phenomenon(const TestbedSpec& spec, reward::Variant variant,
                             std::uint64_t seed, int threads = 1);

}  // namespace tcer::testbed
