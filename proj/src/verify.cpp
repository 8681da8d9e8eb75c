#include "tcer/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tcer/common.hpp"
#include "tcer/grpo.hpp"
#include "tcer/kernels.hpp"
#include "tcer/policy.hpp"
#include "tcer/reward.hpp"
#include "tcer/rng.hpp"
#include "tcer/serde.hpp"
#include "tcer/vmath.hpp"

namespace tcer::verify {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Checker {
    PropertyResult result;

    explicit Checker(std::string name) {
        result.name = std::move(name);
        result.worst_slack = kInf;
    }

    // Passes iff slack >= 0; NaN counts as a violation.
    void check(double slack, const char* note_on_fail = nullptr) {
        ++result.checked;
        if (slack < result.worst_slack) result.worst_slack = slack;
        if (!(slack >= 0.0)) {
            ++result.violations;
            if (result.note.empty() && note_on_fail) result.note = note_on_fail;
            if (std::isnan(slack)) result.worst_slack = -kInf;
        }
    }

    void finish(std::vector<PropertyResult>& out) {
        if (result.checked == 0) result.worst_slack = 0.0;
        out.push_back(std::move(result));
    }
};

// Edge pairs every (p, q) sweep starts with.
const std::vector<std::pair<double, double>>& edge_pairs() {
    static const std::vector<std::pair<double, double>> edges = {
        {1.0, 0.0}, {0.0, 1.0}, {0.0, 0.0}, {1.0, 1.0},
        {0.5, 0.5}, {1.0, 0.37}, {0.37, 0.0}, {1e-12, 1.0},
    };
    return edges;
}

void fill_pairs(rng::Stream& s, std::vector<double>& p, std::vector<double>& q,
                std::size_t offset) {
    const auto& edges = edge_pairs();
    for (std::size_t i = 0; i < p.size(); ++i) {
        std::size_t global = offset + i;
        if (global < edges.size()) {
            p[i] = edges[global].first;
            q[i] = edges[global].second;
        } else {
            p[i] = s.uniform();
            q[i] = s.uniform();
        }
    }
}

TokenDist random_dist(rng::Stream& s, std::size_t n) {
    TokenDist d;
    d.probs.resize(n);
    double total = 0.0;
    for (auto& v : d.probs) {
        v = 1e-9 + s.uniform();
        total += v;
    }
    for (auto& v : d.probs) v /= total;
    return d;
}

// All compositions of `steps` grid units over `n` bins: the simplex grid
// with resolution 1/steps. Calls fn(weights).
template <typename Fn>
void for_each_grid_point(std::size_t n, int steps, std::vector<int>& counts, std::size_t bin,
                         int remaining, Fn&& fn) {
    if (bin + 1 == n) {
        counts[bin] = remaining;
        fn(counts);
        return;
    }
    for (int c = 0; c <= remaining; ++c) {
        counts[bin] = c;
        for_each_grid_point(n, steps, counts, bin + 1, remaining - c, fn);
    }
}

Vocabulary tiny_vocab(int letters) {
    std::string all;
    for (int i = 0; i < letters; ++i) all += static_cast<char>('a' + i);
    return Vocabulary::build_from_lines({all}, TokenizerMode::chars);
}

}  // namespace

bool SuiteReport::pass() const {
    for (const PropertyResult& p : properties)
        if (!p.pass()) return false;
    return true;
}

SuiteReport run_bounds_suite(const VerifyOptions& opt) {
    SuiteReport report;
    report.suite = "bounds";
    report.samples = opt.samples;
    report.seed = opt.seed;

    std::vector<double> eps_list = {1e-3, 1e-5};
    if (opt.epsilon_override) eps_list = {*opt.epsilon_override};
    const std::vector<double> lambdas = {1.0, 2.0, 3.0};
    const std::vector<double> deltas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

    Checker eq12("eq12_log_ratio_bound");
    Checker eq13("eq13_correction_bound");
    Checker eq15("eq15_correction_lower_bound");

    const std::size_t block = 8192;
    std::vector<double> p(block), q(block), phi(block), gate(block);
    rng::Stream stream = rng::Stream::root(opt.seed).child(1);

    for (double eps : eps_list) {
        double bound = vmath::log((1.0 + eps) / eps);
        for (double lambda : lambdas) {
            std::vector<double> delta_pow(deltas.size());
            for (std::size_t d = 0; d < deltas.size(); ++d)
                delta_pow[d] = vmath::pow01(deltas[d], lambda);
            std::size_t done = 0;
            while (done < opt.samples) {
                std::size_t n = std::min(block, opt.samples - done);
                p.resize(n);
                q.resize(n);
                phi.resize(n);
                gate.resize(n);
                fill_pairs(stream, p, q, done);
                kernels::log_ratio_smoothed(p, q, eps, phi);
                kernels::gate_array(p, lambda, gate);
                for (std::size_t i = 0; i < n; ++i) {
                    double aphi = std::fabs(phi[i]);
                    eq12.check(bound - aphi, "eq12 exceeded");
                    double corr = gate[i] * phi[i];
                    eq13.check(gate[i] * bound - std::fabs(corr), "eq13 exceeded");
                    if (aphi >= 1e-12) {
                        double base = 1.0 - p[i];
                        for (std::size_t d = 0; d < deltas.size(); ++d) {
                            if (base >= deltas[d])
                                eq15.check(std::fabs(corr) - delta_pow[d] * aphi,
                                           "eq15 fell short");
                        }
                    }
                }
                done += n;
            }
        }
    }
    eq12.finish(report.properties);
    eq13.finish(report.properties);
    eq15.finish(report.properties);

    // Eq. 14 limit: the gate shuts the correction off exactly at p = 1.
    Checker eq14("eq14_zero_correction_at_saturation");
    for (double eps : eps_list) {
        for (double lambda : {1.0, 1.5, 2.0, 3.0}) {
            for (int qi = 0; qi <= 100; ++qi) {
                double qv = static_cast<double>(qi) / 100.0;
                double c = reward::correction_term(1.0, qv, lambda, eps);
                eq14.check(c == 0.0 ? 0.0 : -std::fabs(c), "correction nonzero at p=1");
            }
        }
    }
    eq14.finish(report.properties);

    // Decomposition identity, raw ratio: ln p = ln q + ln(p/q) exactly-ish.
    Checker dec_raw("decomposition_identity_raw");
    Checker dec_smooth("decomposition_identity_smoothed");
    rng::Stream dstream = rng::Stream::root(opt.seed).child(2);
    std::size_t dec_n = std::max<std::size_t>(opt.samples / 10, 100);
    for (std::size_t i = 0; i < dec_n; ++i) {
        double pp = 1e-9 + dstream.uniform();
        double qq = 1e-9 + dstream.uniform();
        pp = std::min(pp, 1.0);
        qq = std::min(qq, 1.0);
        double resid = vmath::log(pp) - (vmath::log(qq) + vmath::log(pp / qq));
        dec_raw.check(1e-12 - std::fabs(resid), "raw decomposition drift");
        for (double eps : eps_list) {
            if (!(eps > 0.0)) {
                dec_smooth.check(-kInf, "invalid epsilon");
                continue;
            }
            if (pp >= 10.0 * eps && qq >= 10.0 * eps) {
                double resid_s =
                    vmath::log(pp) - (vmath::log(qq) + reward::info_gain(pp, qq, eps));
                double tol = 2.0 * eps / std::min(pp, qq);
                dec_smooth.check(tol - std::fabs(resid_s), "smoothed decomposition drift");
            }
        }
    }
    dec_raw.finish(report.properties);
    dec_smooth.finish(report.properties);

    // Gate monotonicity in p and in lambda.
    Checker mono("gate_monotonicity");
    rng::Stream mstream = rng::Stream::root(opt.seed).child(3);
    std::size_t mono_n = std::max<std::size_t>(opt.samples / 10, 100);
    for (std::size_t i = 0; i < mono_n; ++i) {
        double p1 = 0.999998 * mstream.uniform() + 1e-6;
        double p2 = 0.999998 * mstream.uniform() + 1e-6;
        if (p1 == p2) continue;
        if (p1 > p2) std::swap(p1, p2);
        double lambda = 0.5 + 3.0 * mstream.uniform();
        mono.check(reward::gate_weight(p1, lambda) - reward::gate_weight(p2, lambda) > 0.0
                       ? reward::gate_weight(p1, lambda) - reward::gate_weight(p2, lambda)
                       : -1.0,
                   "gate not decreasing in p");
        double l1 = 0.5 + 2.0 * mstream.uniform();
        double l2 = l1 + 0.25 + mstream.uniform();
        double g1 = reward::gate_weight(p1, l1);
        double g2 = reward::gate_weight(p1, l2);
        mono.check(g1 - g2 > 0.0 ? g1 - g2 : -1.0, "gate not decreasing in lambda");
    }
    mono.finish(report.properties);
    return report;
}

SuiteReport run_lemmas_suite(const VerifyOptions& opt) {
    SuiteReport report;
    report.suite = "lemmas";
    report.samples = opt.samples;
    report.seed = opt.seed;
    rng::Stream root = rng::Stream::root(opt.seed).child(4);

    // Linearity of the one-step objective in the policy.
    Checker lin("lemma1_linearity");
    std::size_t lin_n = std::max<std::size_t>(opt.samples / 10, 100);
    rng::Stream ls = root.child(0);
    for (std::size_t i = 0; i < lin_n; ++i) {
        std::size_t n = 2 + static_cast<std::size_t>(ls.next_u64() % 5);
        TokenDist target = random_dist(ls, n);
        std::vector<double> f(n);
        kernels::log_array(target.probs, f);
        TokenDist pi1 = random_dist(ls, n);
        TokenDist pi2 = random_dist(ls, n);
        double j1 = kernels::dot(pi1.probs, f);
        double j2 = kernels::dot(pi2.probs, f);
        for (int wi = 0; wi <= 10; ++wi) {
            double w = static_cast<double>(wi) / 10.0;
            std::vector<double> mix(n);
            for (std::size_t v = 0; v < n; ++v)
                mix[v] = w * pi1.probs[v] + (1.0 - w) * pi2.probs[v];
            double jm = kernels::dot(mix, f);
            double resid = std::fabs(jm - (w * j1 + (1.0 - w) * j2));
            lin.check(1e-12 - resid, "linearity drift");
        }
    }
    lin.finish(report.properties);

    // Deterministic optimizer vs the brute-force simplex grid (step 0.05).
    Checker opt2("lemma2_grid_never_beats_delta");
    std::size_t grid_dists = std::clamp<std::size_t>(opt.samples / 100, 10, 5000);
    rng::Stream gs = root.child(1);
    const int grid_steps = 20;
    for (std::size_t i = 0; i < grid_dists; ++i) {
        std::size_t n = 2 + static_cast<std::size_t>(gs.next_u64() % 5);
        TokenDist target = random_dist(gs, n);
        std::vector<double> f(n);
        kernels::log_array(target.probs, f);
        TokenDist delta = reward::one_step_optimal_policy(target);
        double best = kernels::dot(delta.probs, f);
        // the delta's objective equals max_v f(v)
        double fmax = *std::max_element(f.begin(), f.end());
        opt2.check(1e-12 - std::fabs(best - fmax), "delta objective != max f");
        std::vector<int> counts(n, 0);
        double worst = -kInf;
        for_each_grid_point(n, grid_steps, counts, 0, grid_steps, [&](const std::vector<int>& c) {
            double j = 0.0;
            for (std::size_t v = 0; v < n; ++v)
                j += (static_cast<double>(c[v]) / grid_steps) * f[v];
            worst = std::max(worst, j);
        });
        opt2.check(best + 1e-12 - worst, "grid point beats the delta");
    }
    opt2.finish(report.properties);

    // Coverage range, deterministic case, and the non-saturated-mass bound.
    Checker range("lemma3_coverage_range");
    Checker lower("lemma4_coverage_lower_bound");
    const std::vector<double> deltas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    const std::vector<double> lambdas = {1.0, 2.0, 3.0};
    std::size_t cov_n = std::max<std::size_t>(opt.samples / 10, 100);
    rng::Stream cs = root.child(2);
    for (std::size_t i = 0; i < cov_n; ++i) {
        std::size_t n = 2 + static_cast<std::size_t>(cs.next_u64() % 15);
        TokenDist d = random_dist(cs, n);
        for (double lambda : lambdas) {
            double s = reward::coverage(d, lambda);
            range.check(s, "coverage negative");
            range.check(1.0 - s, "coverage above 1");
            range.check(s > 0.0 ? s : -1.0, "coverage zero on non-deterministic dist");
            for (double delta : deltas) {
                double mass = 0.0;
                for (double pv : d.probs)
                    if (1.0 - pv >= delta) mass += pv;
                lower.check(s - vmath::pow01(delta, lambda) * mass, "lemma4 bound broken");
            }
        }
    }
    // deterministic distributions: coverage exactly zero
    for (std::size_t n = 2; n <= 8; ++n) {
        TokenDist det;
        det.probs.assign(n, 0.0);
        det.probs[n / 2] = 1.0;
        for (double lambda : lambdas) {
            double s = reward::coverage(det, lambda);
            range.check(s == 0.0 ? 0.0 : -std::fabs(s), "deterministic coverage nonzero");
        }
    }
    range.finish(report.properties);
    lower.finish(report.properties);
    return report;
}

SuiteReport run_gradients_suite(const VerifyOptions& opt) {
    SuiteReport report;
    report.suite = "gradients";
    report.samples = opt.samples;
    report.seed = opt.seed;
    rng::Stream root = rng::Stream::root(opt.seed).child(5);

    // Closed-form correction derivative vs central differences.
    Checker deriv("correction_derivative_fd");
    rng::Stream ds = root.child(0);
    std::size_t deriv_n = std::max<std::size_t>(opt.samples / 10, 100);
    const double step = 1e-6;
    for (std::size_t i = 0; i < deriv_n; ++i) {
        double p = 0.01 + 0.98 * ds.uniform();
        double q = ds.uniform();
        double lambda = (i % 3 == 0) ? 1.0 : ((i % 3 == 1) ? 2.0 : 3.0);
        double eps = (i % 2 == 0) ? 1e-3 : 1e-5;
        double analytic = reward::correction_derivative(p, q, lambda, eps);
        double fd = (reward::correction_term(p + step, q, lambda, eps) -
                     reward::correction_term(p - step, q, lambda, eps)) /
                    (2.0 * step);
        double denom = std::max(std::fabs(fd), 1e-4);
        deriv.check(1e-6 - std::fabs(analytic - fd) / denom, "derivative mismatch");
    }
    deriv.finish(report.properties);

    // Policy log-prob gradients, both kinds, every coordinate.
    Checker pol("policy_log_prob_grad_fd");
    rng::Stream ps = root.child(1);
    std::size_t triples = std::clamp<std::size_t>(opt.samples / 1000, 10, 100);
    Vocabulary vocab = tiny_vocab(4);
    for (std::size_t i = 0; i < triples; ++i) {
        PolicyShape shape;
        if (i % 2 == 0) {
            shape.kind = PolicyKind::tabular_ngram;
            shape.order = 2;
        } else {
            shape.kind = PolicyKind::linear_neural;
            shape.window = 3;
            shape.hidden = 4;
        }
        Policy p = Policy::init_random(shape, vocab, 2.0, ps.child(i));
        rng::Stream cs = ps.child(1000 + i);
        std::vector<int> ctx_ids;
        std::size_t ctx_len = cs.next_u64() % 4;
        for (std::size_t t = 0; t < ctx_len; ++t)
            ctx_ids.push_back(static_cast<int>(cs.next_u64() % vocab.size()));
        int y = static_cast<int>(cs.next_u64() % vocab.size());
        Context ctx{{}, ctx_ids};
        std::vector<double> analytic = p.log_prob_grad(ctx, y);
        Policy probe = p;
        const double h = 1e-5;
        for (std::size_t c = 0; c < analytic.size(); ++c) {
            double saved = probe.values()[c];
            probe.values()[c] = saved + h;
            double up = probe.log_prob(ctx, y);
            probe.values()[c] = saved - h;
            double dn = probe.log_prob(ctx, y);
            probe.values()[c] = saved;
            double fd = (up - dn) / (2.0 * h);
            double denom = std::max(std::fabs(fd), 1e-4);
            pol.check(1e-5 - std::fabs(analytic[c] - fd) / denom, "policy grad mismatch");
        }
    }
    pol.finish(report.properties);

    // GRPO loss gradient on random tabular instances.
    Checker gl("grpo_loss_grad_fd");
    rng::Stream gs = root.child(2);
    std::size_t instances = std::clamp<std::size_t>(opt.samples / 5000, 3, 20);
    for (std::size_t i = 0; i < instances; ++i) {
        Vocabulary v = tiny_vocab(3 + static_cast<int>(i % 3));
        PolicyShape shape;
        shape.kind = PolicyKind::tabular_ngram;
        shape.order = 2;
        Policy actor = Policy::init_random(shape, v, 1.0, gs.child(10 * i));
        Policy pi_s = Policy::init_random(shape, v, 1.0, gs.child(10 * i + 1));
        Policy pi_b = Policy::init_random(shape, v, 1.0, gs.child(10 * i + 2));
        Policy ref = Policy::init_random(shape, v, 1.0, gs.child(10 * i + 3));

        grpo::GrpoConfig cfg;
        cfg.group_size = 2 + static_cast<int>(i % 2);
        cfg.kl_beta = (i % 3 == 0) ? 0.0 : 0.05 * static_cast<double>(i % 3);
        cfg.train_on_reference = (i % 2 == 1);
        cfg.temperature = 0.9;
        cfg.max_len = 5;

        rng::Stream collect = gs.child(10 * i + 4);
        TokenSeq prompt;
        prompt.ids = {static_cast<int>(collect.next_u64() % (v.size() - 1))};
        TokenSeq reference;
        std::size_t rlen = 2 + collect.next_u64() % 3;
        for (std::size_t t = 0; t < rlen; ++t)
            reference.ids.push_back(static_cast<int>(collect.next_u64() % (v.size() - 1)));
        reference.ids.push_back(v.eos_id());

        grpo::RolloutGroup group =
            grpo::collect_group(actor, pi_s, pi_b, prompt, reference, cfg, collect.child(99));
        // push ratios off 1 so the clip branches get exercised, keeping a
        // safe distance from the clip boundary so FD stays smooth
        rng::Stream shift = gs.child(10 * i + 5);
        for (auto& sample : group.rollouts) {
            for (auto& lp : sample.old_log_probs) {
                double dlt = shift.symmetric(0.4);
                double rho = std::exp(-dlt);
                while (std::fabs(rho - (1.0 - cfg.clip_eps)) < 5e-3 ||
                       std::fabs(rho - (1.0 + cfg.clip_eps)) < 5e-3) {
                    dlt += 0.01;
                    rho = std::exp(-dlt);
                }
                lp += dlt;
            }
        }

        grpo::LossResult lr = grpo::grpo_loss(actor, ref, group, cfg);
        Policy probe = actor;
        const double h = 1e-6;
        for (std::size_t c = 0; c < lr.grad.size(); ++c) {
            double saved = probe.values()[c];
            probe.values()[c] = saved + h;
            double up = grpo::grpo_loss(probe, ref, group, cfg).loss;
            probe.values()[c] = saved - h;
            double dn = grpo::grpo_loss(probe, ref, group, cfg).loss;
            probe.values()[c] = saved;
            double fd = (up - dn) / (2.0 * h);
            double denom = std::max(std::fabs(fd), 1e-4);
            gl.check(1e-5 - std::fabs(lr.grad[c] - fd) / denom, "grpo grad mismatch");
        }
    }
    gl.finish(report.properties);
    return report;
}

std::vector<SuiteReport> run_suites(const std::string& which, const VerifyOptions& opt) {
    std::vector<SuiteReport> reports;
    if (which == "bounds" || which == "all") reports.push_back(run_bounds_suite(opt));
    if (which == "lemmas" || which == "all") reports.push_back(run_lemmas_suite(opt));
    if (which == "gradients" || which == "all") reports.push_back(run_gradients_suite(opt));
    if (reports.empty()) throw UsageError("unknown suite: " + which);
    return reports;
}

std::string SuiteReport::to_json_string() const {
    std::string out = "{\"suite\":\"" + suite + "\"";
    out += ",\"samples\":" + std::to_string(samples);
    out += ",\"seed\":" + std::to_string(seed);
    out += ",\"pass\":";
    out += pass() ? "true" : "false";
    out += ",\"properties\":[";
    for (std::size_t i = 0; i < properties.size(); ++i) {
        const PropertyResult& p = properties[i];
        if (i) out += ',';
        out += "{\"name\":\"" + p.name + "\"";
        out += ",\"checked\":" + std::to_string(p.checked);
        out += ",\"violations\":" + std::to_string(p.violations);
        out += ",\"worst_slack\":" + serde::g17(p.worst_slack);
        out += ",\"note\":\"" + p.note + "\"}";
    }
    out += "]}";
    return out;
}

std::string reports_to_json(const std::vector<SuiteReport>& reports) {
    std::string out = "{\"pass\":";
    out += all_pass(reports) ? "true" : "false";
    out += ",\"suites\":[";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (i) out += ',';
        out += reports[i].to_json_string();
    }
    out += "]}\n";
    return out;
}

bool all_pass(const std::vector<SuiteReport>& reports) {
    for (const SuiteReport& r : reports)
        if (!r.pass()) return false;
    return true;
}

}  // namespace tcer::verify
