#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "causalkit/discovery.hpp"
#include "causalkit/eval.hpp"

namespace causalkit {

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct IntRange {
    int lo = 0;
    int hi = 0;
};

// Box the surrogate model searches over. Weights are handled implicitly:
// two hypercube coordinates map onto the weight simplex by stick-breaking,
// so every decoded triple sums to 1.
struct SearchSpace {
    Range score_threshold{0.01, 0.2};
    Range temperature{0.05, 0.7};
    IntRange max_iterations{10, 50};

    static SearchSpace child_preset();
    static SearchSpace neuropathic_preset();
    static constexpr int kDims = 5;  // (a, b, threshold, temperature, iterations)

    void validate() const;
};

struct TrialRecord {
    int id = 0;
    int chunk = 0;
    std::vector<double> point;  // encoded location, kept exact for resume
    DiscoveryConfig config;
    double objective = 0.0;  // graph F1
    EvalReport eval_report;
    std::string error;  // non-empty when the objective failed (objective forced to 0)
    double wall_time = 0.0;  // seconds; persisted separately, not part of the canonical log
};

std::vector<double> encode_config(const DiscoveryConfig& config, const SearchSpace& space);
DiscoveryConfig decode_point(const std::vector<double>& point, const SearchSpace& space);

// Radical-inverse Halton sequence; dimension d uses the d-th prime base.
double halton(std::uint64_t index, std::uint64_t base);
std::vector<double> halton_point(std::uint64_t index, int dims);

// Next location to try: quasi-random for the first n_init trials (or when
// every observed objective is identical), otherwise the expected-improvement
// argmax over a quasi-random candidate pool under a GP surrogate
// (squared-exponential kernel, hyperparameters by marginal likelihood).
// Deterministic given (history, space, seed).
std::vector<double> suggest_next(const std::vector<TrialRecord>& history, const SearchSpace& space,
                                 std::uint64_t seed, int n_init = 10, int candidate_pool = 1024);

struct ObjectiveOutcome {
    double objective = 0.0;
    EvalReport report;
    std::string error;
};
using ObjectiveRunner = std::function<ObjectiveOutcome(const DiscoveryConfig&)>;

struct OptimizerOptions {
    int trials_total = 100;
    int chunk_size = 25;
    std::uint64_t seed = 0;
    int n_init = 10;
    int candidate_pool = 1024;
    std::string resume_dir;        // holds meta.json, trials.jsonl, timings.jsonl, top.json, trials.csv
    DiscoveryConfig base_config;   // fields outside the search space are taken from here
};

// Chunked optimization loop. Suggestions for a chunk are generated up front
// (constant-liar batching), evaluated, then persisted together; a fresh
// invocation with the same resume_dir continues after the last completed
// chunk and reproduces the identical trial log. trials.jsonl is canonical
// and timing-free; wall times go to timings.jsonl.
std::vector<TrialRecord> run_optimization(const SearchSpace& space, const OptimizerOptions& options,
                                          const ObjectiveRunner& objective);

// Top trials by objective (ties broken by lower id).
std::vector<TrialRecord> top_trials(const std::vector<TrialRecord>& records, std::size_t count);

}  // namespace causalkit
