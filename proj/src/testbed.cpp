#include "tcer/testbed.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

#include "tcer/common.hpp"
#include "tcer/reward.hpp"
#include "tcer/serde.hpp"

namespace tcer::testbed {

namespace {

struct Grammar {
    std::vector<double> start;               // over letters
    std::vector<std::vector<double>> rows;   // rows[s][t] over letters, each sums to 1
};

std::vector<double> normalized_weights(rng::Stream& s, std::size_t n) {
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& v : w) {
        v = 0.5 + s.uniform();
        total += v;
    }
    for (auto& v : w) v /= total;
    return w;
}

Grammar build_general(const GrammarSpec& g) {
    rng::Stream root = rng::Stream::root(g.grammar_seed).child(0x6e6e);
    std::size_t a = static_cast<std::size_t>(g.alphabet);
    Grammar gram;
    rng::Stream ss = root.child(0);
    gram.start = normalized_weights(ss, a);
    gram.rows.resize(a);
    for (std::size_t s = 0; s < a; ++s) {
        rng::Stream rs = root.child(1 + s);
        // successor set: seeded partial shuffle of the alphabet
        std::vector<std::size_t> ids(a);
        for (std::size_t i = 0; i < a; ++i) ids[i] = i;
        std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(g.branching), a);
        for (std::size_t j = 0; j < b; ++j) {
            std::size_t r = j + static_cast<std::size_t>(rs.next_u64() % (a - j));
            std::swap(ids[j], ids[r]);
        }
        std::vector<double> w = normalized_weights(rs, b);
        gram.rows[s].assign(a, 0.0);
        for (std::size_t j = 0; j < b; ++j) gram.rows[s][ids[j]] = w[j];
    }
    return gram;
}

// Domain rows move `mix` of the mass onto successors the general grammar
// gives the least weight, spread uniformly; the rest of the row keeps the
// general proportions.
Grammar build_domain(const Grammar& general, const GrammarSpec& g, const DomainSpec& d) {
    Grammar dom = general;
    std::size_t a = general.rows.size();
    std::size_t treated = static_cast<std::size_t>(std::ceil(d.row_fraction * static_cast<double>(a)));
    rng::Stream pick = rng::Stream::root(g.grammar_seed).child(0xd031);
    for (std::size_t s = 0; s < treated && s < a; ++s) {
        const std::vector<double>& base = general.rows[s];
        // take the lowest-probability tokens; seeded shuffle breaks ties
        std::vector<std::size_t> ids(a);
        for (std::size_t i = 0; i < a; ++i) ids[i] = i;
        rng::Stream ts = pick.child(s);
        for (std::size_t i = a - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(ts.next_u64() % (i + 1));
            std::swap(ids[i], ids[j]);
        }
        std::stable_sort(ids.begin(), ids.end(),
                         [&](std::size_t x, std::size_t y) { return base[x] < base[y]; });
        std::size_t ns = std::min<std::size_t>(static_cast<std::size_t>(d.successors), a);
        std::vector<double>& row = dom.rows[s];
        double share = d.mix / static_cast<double>(ns);
        for (std::size_t i = 0; i < a; ++i) row[i] = (1.0 - d.mix) * base[i];
        for (std::size_t j = 0; j < ns; ++j) row[ids[j]] += share;
    }
    return dom;
}

std::string sample_line(const Grammar& gram, const GrammarSpec& g, rng::Stream stream) {
    std::string line;
    int letter = stream.categorical(gram.start);
    for (int len = 1;; ++len) {
        line += static_cast<char>('a' + letter);
        if (len >= g.max_len) break;
        if (len >= g.min_len && stream.uniform() < g.stop_prob) break;
        letter = stream.categorical(gram.rows[static_cast<std::size_t>(letter)]);
    }
    return line;
}

std::vector<std::string> sample_lines(const Grammar& gram, const GrammarSpec& g, int count,
                                      rng::Stream stream) {
    std::vector<std::string> lines;
    lines.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        lines.push_back(sample_line(gram, g, stream.child(static_cast<std::uint64_t>(i))));
    return lines;
}

Vocabulary alphabet_vocab(int alphabet) {
    std::string all;
    for (int i = 0; i < alphabet; ++i) all += static_cast<char>('a' + i);
    return Vocabulary::build_from_lines({all}, TokenizerMode::chars);
}

}  // namespace

const char* phenomenon_name(Phenomenon p) {
    switch (p) {
        case Phenomenon::entropy_collapse: return "entropy_collapse";
        case Phenomenon::entropy_preserved: return "entropy_preserved";
        default: return "positive_phi_on_domain";
    }
}

Phenomenon phenomenon_from_name(const std::string& name) {
    if (name == "entropy_collapse") return Phenomenon::entropy_collapse;
    if (name == "entropy_preserved") return Phenomenon::entropy_preserved;
    if (name == "positive_phi_on_domain") return Phenomenon::positive_phi_on_domain;
    throw UsageError("unknown phenomenon: " + name);
}

void TestbedSpec::validate() const {
    if (grammar.alphabet < 2 || grammar.alphabet > 26)
        throw UsageError("testbed alphabet must be in [2, 26]");
    if (grammar.branching < 1 || grammar.branching > grammar.alphabet)
        throw UsageError("branching must be in [1, alphabet]");
    if (!(grammar.stop_prob > 0.0 && grammar.stop_prob < 1.0))
        throw UsageError("stop_prob must be in (0, 1)");
    if (grammar.min_len < prompt_len + 1) throw UsageError("min_len must exceed prompt_len");
    if (grammar.max_len < grammar.min_len) throw UsageError("max_len must be >= min_len");
    if (!(domain.mix > 0.0 && domain.mix < 1.0)) throw UsageError("domain mix must be in (0, 1)");
    if (domain.successors < 1) throw UsageError("domain successors must be >= 1");
    if (!(domain.row_fraction >= 0.0 && domain.row_fraction <= 1.0))
        throw UsageError("row_fraction must be in [0, 1]");
    if (general_sequences < 1 || domain_sequences < 1)
        throw UsageError("sequence counts must be positive");
    if (prompt_len < 1) throw UsageError("prompt_len must be >= 1");
    if (!(collapse_ratio > 0.0 && collapse_ratio < 1.0))
        throw UsageError("collapse_ratio must be in (0, 1)");
    fit.validate();
    rl.validate();
}

TestbedData generate_testbed(const TestbedSpec& spec, std::uint64_t seed) {
    spec.validate();
    Grammar general = build_general(spec.grammar);
    Grammar domain = build_domain(general, spec.grammar, spec.domain);

    rng::Stream root = rng::Stream::root(seed).child(0xbed);
    TestbedData data;
    data.general_lines = sample_lines(general, spec.grammar, spec.general_sequences, root.child(1));
    std::vector<std::string> domain_all =
        sample_lines(domain, spec.grammar, 2 * spec.domain_sequences, root.child(2));
    data.heldout_lines = sample_lines(general, spec.grammar, spec.domain_sequences, root.child(3));

    // 50/50 split of the domain text: first half fits the specialist, the
    // disjoint second half supplies the RL prompts and references.
    data.domain_lines.assign(domain_all.begin(),
                             domain_all.begin() + spec.domain_sequences);
    std::vector<std::string> rl_lines(domain_all.begin() + spec.domain_sequences,
                                      domain_all.end());

    data.vocab = alphabet_vocab(spec.grammar.alphabet);
    data.general = corpus_from_lines(data.general_lines, data.vocab, TokenizerMode::chars,
                                     "<general>");
    data.domain = corpus_from_lines(data.domain_lines, data.vocab, TokenizerMode::chars,
                                    "<domain>");

    for (const std::string& line : rl_lines) {
        TokenSeq full = tokenize(line, data.vocab, TokenizerMode::chars);
        data.heldout_domain.push_back(full);
        TokenSeq prompt, reference;
        prompt.ids.assign(full.ids.begin(), full.ids.begin() + spec.prompt_len);
        reference.ids.assign(full.ids.begin() + spec.prompt_len, full.ids.end());
        data.rl_data.prompts.push_back(std::move(prompt));
        data.rl_data.references.push_back(std::move(reference));
    }
    for (const std::string& line : data.heldout_lines)
        data.heldout_general.push_back(tokenize(line, data.vocab, TokenizerMode::chars));
    return data;
}

FittedPolicies fit_testbed_policies(const TestbedSpec& spec, const TestbedData& data,
                                    int threads) {
    PolicyShape shape;
    shape.kind = PolicyKind::tabular_ngram;
    shape.order = 2;
    Policy init(shape, data.vocab);
    sft::FitResult base = sft::fit_mle(init, data.general, spec.fit, threads);
    sft::FitResult specialist = sft::fit_mle(base.params, data.domain, spec.fit, threads);
    return FittedPolicies{std::move(base.params), std::move(specialist.params)};
}

double mean_info_gain(const Policy& pi_s, const Policy& pi_b,
                      const std::vector<TokenSeq>& texts, double epsilon) {
    double total = 0.0;
    std::size_t count = 0;
    std::size_t v = static_cast<std::size_t>(pi_s.vocab().size());
    std::vector<double> lp(v);
    for (const TokenSeq& seq : texts) {
        for (std::size_t t = 0; t < seq.ids.size(); ++t) {
            Context ctx{{}, std::span<const int>(seq.ids.data(), t)};
            pi_s.log_probs_all(ctx, lp);
            double p = std::exp(lp[static_cast<std::size_t>(seq.ids[t])]);
            pi_b.log_probs_all(ctx, lp);
            double q = std::exp(lp[static_cast<std::size_t>(seq.ids[t])]);
            total += reward::info_gain(p, q, epsilon);
            ++count;
        }
    }
    if (count == 0) throw DataError("mean_info_gain: no tokens");
    return total / static_cast<double>(count);
}

std::string PhenomenonVerdict::to_json_string() const {
    std::string out = "{\"pass\":";
    out += pass ? "true" : "false";
    out += ",\"expected\":\"";
    out += phenomenon_name(expected);
    out += "\",\"initial_entropy\":" + serde::g17(initial_entropy);
    out += ",\"final_entropy\":" + serde::g17(final_entropy);
    out += ",\"endor_final_entropy\":" + serde::g17(endor_final_entropy);
    out += ",\"tcer_final_entropy\":" + serde::g17(tcer_final_entropy);
    out += ",\"mean_phi_domain\":" + serde::g17(mean_phi_domain);
    out += ",\"mean_phi_general\":" + serde::g17(mean_phi_general);
    out += ",\"detail\":" + nlohmann::json(detail).dump();
    out += "}\n";
    return out;
}

PhenomenonRun run_phenomenon(const TestbedSpec& spec_in, reward::Variant variant,
                             std::uint64_t seed, int threads) {
    TestbedSpec spec = spec_in;
    spec.fit.seed = seed;
    spec.rl.seed = seed;
    spec.validate();

    TestbedData data = generate_testbed(spec, seed);
    PhenomenonRun run;
    run.fitted = fit_testbed_policies(spec, data, threads);
    run.verdict.expected = spec.expected;
    run.verdict.mean_phi_domain = mean_info_gain(run.fitted.pi_s, run.fitted.pi_b,
                                                 data.heldout_domain, spec.rl.reward.epsilon);
    run.verdict.mean_phi_general = mean_info_gain(run.fitted.pi_s, run.fitted.pi_b,
                                                  data.heldout_general, spec.rl.reward.epsilon);

    auto train_variant = [&](reward::Variant v) {
        grpo::GrpoConfig cfg = spec.rl;
        cfg.reward.variant = v;
        return grpo::train(run.fitted.pi_s, run.fitted.pi_s, run.fitted.pi_b, data.rl_data, cfg,
                           threads);
    };

    if (spec.expected == Phenomenon::positive_phi_on_domain) {
        run.verdict.pass = run.verdict.mean_phi_domain > 0.0;
        run.verdict.detail = "mean phi on held-out domain text = " +
                             serde::g17(run.verdict.mean_phi_domain);
        return run;
    }

    if (spec.expected == Phenomenon::entropy_collapse) {
        grpo::TrainResult r = train_variant(variant);
        run.verdict.initial_entropy = r.log.records.front().mean_entropy;
        run.verdict.final_entropy = r.log.records.back().mean_entropy;
        run.verdict.pass =
            run.verdict.final_entropy < spec.collapse_ratio * run.verdict.initial_entropy;
        run.verdict.detail = "final/initial entropy = " + serde::g17(run.verdict.final_entropy) +
                             " / " + serde::g17(run.verdict.initial_entropy);
        if (variant == reward::Variant::endor)
            run.endor_run = std::move(r);
        else
            run.tcer_run = std::move(r);
        return run;
    }

    // entropy_preserved: paired same-seed runs
    run.endor_run = train_variant(reward::Variant::endor);
    run.tcer_run = train_variant(reward::Variant::tcer);
    const RunLog& le = run.endor_run->log;
    const RunLog& lt = run.tcer_run->log;
    run.verdict.initial_entropy = le.records.front().mean_entropy;
    run.verdict.endor_final_entropy = le.records.back().mean_entropy;
    run.verdict.tcer_final_entropy = lt.records.back().mean_entropy;
    run.verdict.final_entropy = run.verdict.tcer_final_entropy;
    bool collapsed =
        run.verdict.endor_final_entropy < spec.collapse_ratio * run.verdict.initial_entropy;
    bool preserved = run.verdict.tcer_final_entropy > run.verdict.endor_final_entropy;
    run.verdict.pass = collapsed && preserved;
    run.verdict.detail = std::string("endor collapsed: ") + (collapsed ? "yes" : "no") +
                         ", tcer final > endor final: " + (preserved ? "yes" : "no");
    return run;
}

TestbedSpec TestbedSpec::from_json(const nlohmann::json& j) {
    TestbedSpec s;
    if (!j.is_object()) throw DataError("testbed spec must be a JSON object");
    if (j.contains("name")) s.name = j.at("name").get<std::string>();
    if (j.contains("grammar")) {
        const auto& g = j.at("grammar");
        if (g.contains("alphabet")) s.grammar.alphabet = g.at("alphabet").get<int>();
        if (g.contains("branching")) s.grammar.branching = g.at("branching").get<int>();
        if (g.contains("grammar_seed"))
            s.grammar.grammar_seed = g.at("grammar_seed").get<std::uint64_t>();
        if (g.contains("stop_prob")) s.grammar.stop_prob = g.at("stop_prob").get<double>();
        if (g.contains("min_len")) s.grammar.min_len = g.at("min_len").get<int>();
        if (g.contains("max_len")) s.grammar.max_len = g.at("max_len").get<int>();
    }
    if (j.contains("domain")) {
        const auto& d = j.at("domain");
        if (d.contains("mix")) s.domain.mix = d.at("mix").get<double>();
        if (d.contains("successors")) s.domain.successors = d.at("successors").get<int>();
        if (d.contains("row_fraction")) s.domain.row_fraction = d.at("row_fraction").get<double>();
    }
    if (j.contains("general_sequences")) s.general_sequences = j.at("general_sequences").get<int>();
    if (j.contains("domain_sequences")) s.domain_sequences = j.at("domain_sequences").get<int>();
    if (j.contains("prompt_len")) s.prompt_len = j.at("prompt_len").get<int>();
    if (j.contains("expected"))
        s.expected = phenomenon_from_name(j.at("expected").get<std::string>());
    if (j.contains("collapse_ratio")) s.collapse_ratio = j.at("collapse_ratio").get<double>();
    if (j.contains("fit")) {
        const auto& f = j.at("fit");
        if (f.contains("epochs")) s.fit.epochs = f.at("epochs").get<int>();
        if (f.contains("learning_rate")) s.fit.learning_rate = f.at("learning_rate").get<double>();
        if (f.contains("batch_size")) s.fit.batch_size = f.at("batch_size").get<int>();
        if (f.contains("seed")) s.fit.seed = f.at("seed").get<std::uint64_t>();
    }
    if (j.contains("rl")) s.rl = grpo::GrpoConfig::from_json(j.at("rl"));
    return s;
}

nlohmann::json TestbedSpec::to_json() const {
    return nlohmann::json{
        {"name", name},
        {"grammar",
         {{"alphabet", grammar.alphabet},
          {"branching", grammar.branching},
          {"grammar_seed", grammar.grammar_seed},
          {"stop_prob", grammar.stop_prob},
          {"min_len", grammar.min_len},
          {"max_len", grammar.max_len}}},
        {"domain",
         {{"mix", domain.mix},
          {"successors", domain.successors},
          {"row_fraction", domain.row_fraction}}},
        {"general_sequences", general_sequences},
        {"domain_sequences", domain_sequences},
        {"prompt_len", prompt_len},
        {"expected", phenomenon_name(expected)},
        {"collapse_ratio", collapse_ratio},
        {"fit",
         {{"epochs", fit.epochs},
          {"learning_rate", fit.learning_rate},
          {"batch_size", fit.batch_size},
          {"seed", fit.seed}}},
        {"rl", rl.to_json()},
    };
}

TestbedSpec TestbedSpec::load(const std::string& path) {
    return from_json(serde::parse_json(serde::read_file(path), path));
}

}  // namespace tcer::testbed
