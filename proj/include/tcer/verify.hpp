#pragma once

// Randomized property suites over the reward kernel and the training
// gradients: the smoothed log-ratio bounds, the gate/correction bounds and
// limits, the decomposition identity, the one-step-optimality and coverage
// lemmas (against brute-force oracles), and finite-difference gradient
// checks. The verify CLI command and the acceptance suite both run these.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tcer::verify {

struct PropertyResult {
    std::string name;
    std::size_t checked = 0;
    std::size_t violations = 0;
    // Smallest observed margin to the bound; negative means a violation.
    double worst_slack = 0.0;
    std::string note;

    bool pass() const { return violations == 0; }
};

struct SuiteReport {
    std::string suite;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    std::vector<PropertyResult> properties;

    bool pass() const;
    std::string to_json_string() const;
};

struct VerifyOptions {
    std::size_t samples = 100000;
    std::uint64_t seed = 1;
    // Debug hook: forces the bounds suite to run on this epsilon alone.
    // An invalid value (<= 0) shows up as reported violations, not a crash.
    std::optional<double> epsilon_override;
};

// samples scales every sweep: with samples = S the bounds sweep draws S
// (p, q) pairs, the linearity and coverage sweeps S/10, the simplex-grid
// oracle S/100 distributions, the derivative check S/10 points.
SuiteReport run_bounds_suite(const VerifyOptions& opt);
SuiteReport run_lemmas_suite(const VerifyOptions& opt);
SuiteReport run_gradients_suite(const VerifyOptions& opt);

// which: "bounds", "lemmas", "gradients", or "all".
std::vector<SuiteReport> run_suites(const std::string& which, const VerifyOptions& opt);

std::string reports_to_json(const std::vector<SuiteReport>& reports);
bool all_pass(const std::vector<SuiteReport>& reports);

}  // namespace tcer::verify
