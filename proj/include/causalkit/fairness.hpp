#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "causalkit/dataset.hpp"
#include "causalkit/graph.hpp"

namespace causalkit {

struct FairnessSpec {
    std::vector<std::string> sensitive;
    std::string outcome;
    int max_path_len = -1;  // cap for path enumeration; < 0 means unbounded
    bool one_hot = false;   // per-level effects for categorical sensitive attributes

    // Outcome must not be sensitive; every name must exist in the graph.
    void validate(const CausalGraph& graph) const;
};

struct PathCensus {
    long long direct = 0;    // sensitive attributes with an edge straight to the outcome
    long long indirect = 0;  // simple paths of length >= 2 into the outcome
    long long spurious = 0;  // maximal simple paths terminating away from the outcome
};

struct SemFit {
    std::map<std::pair<std::string, std::string>, double> edge_coefficients;
    std::map<std::string, double> node_r2;  // nodes with parents only
    std::set<std::string> ridged;           // nodes where the ridge fallback was needed
};

struct EffectDecomposition {
    std::string attribute;
    long long direct_paths = 0;
    long long indirect_paths = 0;
    double de = 0.0;
    double ie = 0.0;      // sum of edge-coefficient products over length >= 2 paths
    double te = 0.0;      // de + ie, by construction
    double c_bias = 0.0;  // |te| / Var(outcome)
};

struct FairnessReport {
    PathCensus census;
    std::vector<EffectDecomposition> per_attribute;
    std::vector<EffectDecomposition> per_level;  // one-hot mode only
    double aggregate_te = 0.0;
    double aggregate_c_bias = 0.0;
    double outcome_variance = 0.0;
    SemFit fit;
    std::vector<std::string> warnings;
};

// Path taxonomy for the sensitive attributes: direct edges, multi-hop paths
// into the outcome, and maximal paths that end elsewhere.
PathCensus classify_paths(const CausalGraph& graph, const FairnessSpec& spec);

// Per-node least squares of each variable on its graph parents. Rank
// deficiency falls back to a small ridge and is flagged.
SemFit fit_linear_sem(const CausalGraph& graph, const Dataset& data);

// DE/IE/TE and normalized bias contribution per sensitive attribute.
std::vector<EffectDecomposition> decompose_effects(const CausalGraph& graph, const SemFit& fit,
                                                   const FairnessSpec& spec, const Dataset& data);

// Full audit: path census, SEM fit, per-attribute effects, signed-sum
// aggregate (cancellation is reported, not hidden).
FairnessReport analyze_fairness(const CausalGraph& graph, const Dataset& data, const FairnessSpec& spec);

nlohmann::ordered_json fairness_report_to_json(const FairnessReport& report);
std::string format_fairness_table(const FairnessReport& report);

}  // namespace causalkit
