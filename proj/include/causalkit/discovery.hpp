#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "causalkit/dataset.hpp"
#include "causalkit/errors.hpp"
#include "causalkit/graph.hpp"
#include "causalkit/oracle.hpp"
#include "causalkit/stats.hpp"

namespace causalkit {

struct DynamicScoreWeights {
    double w_stat = 0.3;
    double w_conf = 0.1;
    double w_hist = 0.6;

    // Each weight in [0,1] and the triple sums to 1 within 1e-9.
    void validate() const;
};

// Per-pair query bookkeeping. Pairs are ordered (x, y) node-index pairs.
struct QueryState {
    std::map<std::pair<int, int>, int> query_count;
    std::map<std::pair<int, int>, double> last_confidence;
    std::set<std::pair<int, int>> queried;

    int count(const std::pair<int, int>& pair) const;
    double confidence(const std::pair<int, int>& pair) const;  // 0.5 for unseen pairs
    void record(const std::pair<int, int>& pair, double conf);
};

struct DiscoveryConfig {
    DynamicScoreWeights weights;
    double score_threshold = 0.0;
    int max_iterations = 100;      // k
    double temperature = 0.2;      // forwarded to live backends; the mock ignores it
    std::uint64_t seed = 0;
    bool requery = true;           // false restores strict once-only pair selection
    int stat_bins = 8;
    int token_budget = 8000;       // chat-session replay budget

    void validate() const;
};

struct ScoreBreakdown {
    double stat = 0.0;
    double conf = 0.0;
    double hist = 0.0;
    double total = 0.0;
};

struct QueryLogEntry {
    int iteration = 0;          // 1-based ordinal of the oracle query
    std::string kind;           // "causal" | "children" | "pairwise"
    std::string x;
    std::string y;              // empty for children queries
    ScoreBreakdown score;       // all zeros for the baselines
    std::string verdict;        // "yes"/"no", "A"/"B"/"C", or the child list
    std::string outcome;        // "added", "rejected_cycle", "no_edge", or "added=i,rejected_cycle=j"
};

struct QueryLog {
    std::vector<QueryLogEntry> entries;  // one per oracle query issued
    std::vector<std::string> independent_variables;  // initialization reply
    std::vector<std::string> warnings;
    int accepted = 0;
    int rejected_cycle = 0;

    int total_queries() const { return static_cast<int>(entries.size()); }  // q'
};

// Raised when the oracle fails mid-run; carries whatever was built so far.
class DiscoveryAborted : public Error {
public:
    DiscoveryAborted(const std::string& what, CausalGraph graph, QueryLog log)
        : Error(what), partial_graph(std::move(graph)), partial_log(std::move(log)) {}

    CausalGraph partial_graph;
    QueryLog partial_log;
};

// Decaying priority for repeatedly queried pairs: 1.5 / (1 + count).
double hist_score(int count);

ScoreBreakdown dynamic_score_parts(const std::pair<int, int>& pair, const DynamicScoreWeights& weights,
                                   const StatCache& cache, const QueryState& state);
double dynamic_score(const std::pair<int, int>& pair, const DynamicScoreWeights& weights,
                     const StatCache& cache, const QueryState& state);

// Argmax of dynamic_score over candidates; ties broken by lexicographic
// (x, y). Empty when there are no candidates or the best score falls below
// the threshold.
std::optional<std::pair<int, int>> select_pair(const std::vector<std::pair<int, int>>& candidates,
                                               const DynamicScoreWeights& weights, const StatCache& cache,
                                               const QueryState& state, double score_threshold);

// Active-learning loop: score all ordered pairs, query the best, add accepted
// edges under the cycle guard, decay re-query priority. `precomputed` skips
// the stat-cache build when the caller already has one for this dataset.
std::pair<CausalGraph, QueryLog> run_active_discovery(const std::vector<VariableMeta>& metadata,
                                                      const Dataset& dataset, CausalOracle& oracle,
                                                      const DiscoveryConfig& config,
                                                      const StatCache* precomputed = nullptr);

// Frontier traversal: start from the oracle's independent variables and ask,
// node by node, which variables each one causes.
std::pair<CausalGraph, QueryLog> run_bfs_baseline(const std::vector<VariableMeta>& metadata,
                                                  CausalOracle& oracle, const DiscoveryConfig& config);

// Exhaustive three-way queries over all n(n-1)/2 unordered pairs.
std::pair<CausalGraph, QueryLog> run_pairwise_baseline(const std::vector<VariableMeta>& metadata,
                                                       CausalOracle& oracle);

// query_log.jsonl: an init line, one line per query, and a summary line.
void write_query_log(const QueryLog& log, const std::string& path);

}  // namespace causalkit
