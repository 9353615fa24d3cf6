#include "causalkit/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace causalkit {

namespace {

std::vector<std::string> node_names(const std::vector<VariableMeta>& metadata) {
    std::vector<std::string> names;
    names.reserve(metadata.size());
    for (const auto& m : metadata) names.push_back(m.name);
    return names;
}

void check_metadata(const std::vector<VariableMeta>& metadata) {
    if (metadata.size() < 2) throw ConfigError("discovery: need at least 2 variables");
    std::set<std::string> seen;
    for (const auto& m : metadata)
        if (!seen.insert(m.name).second) throw ConfigError("discovery: duplicate variable '" + m.name + "'");
}

// The stat cache is built in dataset column order; discovery indexes nodes in
// metadata order. Remap once so scoring can use node indices directly.
StatCache remap_cache(const StatCache& cache, const std::vector<int>& col_of) {
    const int n = static_cast<int>(col_of.size());
    StatCache out(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            out.set(i, j, cache.mi(col_of[static_cast<std::size_t>(i)], col_of[static_cast<std::size_t>(j)]),
                    cache.pc(col_of[static_cast<std::size_t>(i)], col_of[static_cast<std::size_t>(j)]));
    return out;
}

std::string join_names(const std::vector<std::string>& names) {
    if (names.empty()) return "none";
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) out += ", ";
        out += names[i];
    }
    return out;
}

void drain_warnings(CausalOracle& oracle, QueryLog& log) {
    for (auto& w : oracle.take_warnings()) log.warnings.push_back(std::move(w));
}

}  // namespace

void DynamicScoreWeights::validate() const {
    for (const double w : {w_stat, w_conf, w_hist})
        if (!(w >= 0.0 && w <= 1.0))
            throw ConfigError("DynamicScoreWeights: each weight must lie in [0, 1]");
    const double sum = w_stat + w_conf + w_hist;
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("DynamicScoreWeights: weights must sum to 1, got " + std::to_string(sum));
}

int QueryState::count(const std::pair<int, int>& pair) const {
    const auto it = query_count.find(pair);
    return it == query_count.end() ? 0 : it->second;
}

double QueryState::confidence(const std::pair<int, int>& pair) const {
    const auto it = last_confidence.find(pair);
    return it == last_confidence.end() ? 0.5 : it->second;
}

void QueryState::record(const std::pair<int, int>& pair, double conf) {
    ++query_count[pair];
    last_confidence[pair] = conf;
    queried.insert(pair);
}

void DiscoveryConfig::validate() const {
    weights.validate();
    if (score_threshold < 0.0) throw ConfigError("DiscoveryConfig: score_threshold must be >= 0");
    if (max_iterations < 1) throw ConfigError("DiscoveryConfig: max_iterations must be >= 1");
    if (stat_bins < 2) throw ConfigError("DiscoveryConfig: stat_bins must be >= 2");
    if (token_budget < 1) throw ConfigError("DiscoveryConfig: token_budget must be positive");
}

double hist_score(int count) {
    if (count < 0) throw ConfigError("hist_score: count must be non-negative");
    return 1.5 / (1.0 + static_cast<double>(count));
}

ScoreBreakdown dynamic_score_parts(const std::pair<int, int>& pair, const DynamicScoreWeights& weights,
                                   const StatCache& cache, const QueryState& state) {
    ScoreBreakdown parts;
    parts.stat = stat_score(cache, pair.first, pair.second);
    parts.conf = state.confidence(pair);
    parts.hist = hist_score(state.count(pair));
    parts.total = weights.w_stat * parts.stat + weights.w_conf * parts.conf + weights.w_hist * parts.hist;
    return parts;
}

double dynamic_score(const std::pair<int, int>& pair, const DynamicScoreWeights& weights,
                     const StatCache& cache, const QueryState& state) {
    return dynamic_score_parts(pair, weights, cache, state).total;
}

std::optional<std::pair<int, int>> select_pair(const std::vector<std::pair<int, int>>& candidates,
                                               const DynamicScoreWeights& weights, const StatCache& cache,
                                               const QueryState& state, double score_threshold) {
    std::optional<std::pair<int, int>> best;
    double best_score = 0.0;
    for (const auto& pair : candidates) {
        const double score = dynamic_score(pair, weights, cache, state);
        if (!best || score > best_score || (score == best_score && pair < *best)) {
            best = pair;
            best_score = score;
        }
    }
    if (!best || best_score < score_threshold) return std::nullopt;
    return best;
}

std::pair<CausalGraph, QueryLog> run_active_discovery(const std::vector<VariableMeta>& metadata,
                                                      const Dataset& dataset, CausalOracle& oracle,
                                                      const DiscoveryConfig& config,
                                                      const StatCache* precomputed) {
    config.validate();
    check_metadata(metadata);

    const std::vector<std::string> names = node_names(metadata);
    if (dataset.column_count() != static_cast<int>(names.size()))
        throw ConfigError("run_active_discovery: dataset has " + std::to_string(dataset.column_count()) +
                          " columns but metadata declares " + std::to_string(names.size()));
    std::vector<int> col_of;
    col_of.reserve(names.size());
    for (const auto& n : names) col_of.push_back(dataset.index_of(n));

    StatOptions stat_opts;
    stat_opts.bins = config.stat_bins;
    const StatCache cache =
        remap_cache(precomputed ? *precomputed : build_stat_cache(dataset, stat_opts), col_of);

    CausalGraph graph(names);
    QueryLog log;
    QueryState state;
    ChatSession session(default_system_preamble(), config.token_budget);

    const int n = graph.node_count();
    std::vector<std::pair<int, int>> candidates;
    candidates.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) candidates.emplace_back(i, j);

    auto remove_candidate = [&candidates](const std::pair<int, int>& pair) {
        const auto it = std::find(candidates.begin(), candidates.end(), pair);
        if (it != candidates.end()) candidates.erase(it);
    };

    try {
        log.independent_variables = oracle.query_independent_variables(session, metadata);
        drain_warnings(oracle, log);

        while (log.total_queries() < config.max_iterations) {
            const auto selected = select_pair(candidates, config.weights, cache, state, config.score_threshold);
            if (!selected) break;
            const auto pair = *selected;
            const ScoreBreakdown score = dynamic_score_parts(pair, config.weights, cache, state);

            const OracleAnswer answer =
                oracle.query_causal(session, names[static_cast<std::size_t>(pair.first)],
                                    names[static_cast<std::size_t>(pair.second)], metadata, graph);
            drain_warnings(oracle, log);
            state.record(pair, llm_confidence(answer.raw_confidence));

            QueryLogEntry entry;
            entry.iteration = log.total_queries() + 1;
            entry.kind = "causal";
            entry.x = names[static_cast<std::size_t>(pair.first)];
            entry.y = names[static_cast<std::size_t>(pair.second)];
            entry.score = score;
            entry.verdict = to_string(answer.verdict);

            if (answer.verdict == Verdict::Yes) {
                const AddEdgeOutcome outcome = graph.add_edge_checked(pair.first, pair.second);
                entry.outcome = to_string(outcome);
                if (outcome == AddEdgeOutcome::Added) {
                    ++log.accepted;
                    remove_candidate(pair);
                    remove_candidate({pair.second, pair.first});
                } else if (outcome == AddEdgeOutcome::RejectedCycle) {
                    ++log.rejected_cycle;
                    // The blocking path can only grow; this pair is settled.
                    remove_candidate(pair);
                } else {
                    remove_candidate(pair);
                }
            } else {
                entry.outcome = "no_edge";
                if (!config.requery) remove_candidate(pair);
            }
            log.entries.push_back(std::move(entry));
        }
    } catch (const OracleError& e) {
        drain_warnings(oracle, log);
        throw DiscoveryAborted(std::string("active discovery aborted: ") + e.what(), graph, log);
    }

    return {std::move(graph), std::move(log)};
}

std::pair<CausalGraph, QueryLog> run_bfs_baseline(const std::vector<VariableMeta>& metadata,
                                                  CausalOracle& oracle, const DiscoveryConfig& config) {
    config.validate();
    check_metadata(metadata);

    const std::vector<std::string> names = node_names(metadata);
    CausalGraph graph(names);
    QueryLog log;
    ChatSession session(default_system_preamble(), config.token_budget);

    try {
        log.independent_variables = oracle.query_independent_variables(session, metadata);
        drain_warnings(oracle, log);

        std::vector<std::string> frontier = log.independent_variables;
        std::set<std::string> enqueued(frontier.begin(), frontier.end());

        for (std::size_t head = 0; head < frontier.size(); ++head) {
            const std::string x = frontier[head];
            std::vector<std::string> candidates;
            for (const auto& n : names)
                if (n != x) candidates.push_back(n);

            const std::vector<std::string> kids =
                oracle.query_children(session, x, candidates, metadata, graph);
            drain_warnings(oracle, log);

            QueryLogEntry entry;
            entry.iteration = log.total_queries() + 1;
            entry.kind = "children";
            entry.x = x;
            entry.verdict = join_names(kids);

            int added = 0, rejected = 0;
            for (const auto& kid : kids) {
                const AddEdgeOutcome outcome = graph.add_edge_checked(x, kid);
                if (outcome == AddEdgeOutcome::Added) {
                    ++added;
                    ++log.accepted;
                    if (enqueued.insert(kid).second) frontier.push_back(kid);
                } else if (outcome == AddEdgeOutcome::RejectedCycle) {
                    ++rejected;
                    ++log.rejected_cycle;
                }
            }
            entry.outcome = "added=" + std::to_string(added) + ",rejected_cycle=" + std::to_string(rejected);
            log.entries.push_back(std::move(entry));
        }
    } catch (const OracleError& e) {
        drain_warnings(oracle, log);
        throw DiscoveryAborted(std::string("bfs baseline aborted: ") + e.what(), graph, log);
    }

    return {std::move(graph), std::move(log)};
}

std::pair<CausalGraph, QueryLog> run_pairwise_baseline(const std::vector<VariableMeta>& metadata,
                                                       CausalOracle& oracle) {
    check_metadata(metadata);

    const std::vector<std::string> names = node_names(metadata);
    CausalGraph graph(names);
    QueryLog log;
    ChatSession session(default_system_preamble());

    try {
        const int n = graph.node_count();
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const PairwiseAnswer answer =
                    oracle.query_pairwise(session, names[static_cast<std::size_t>(i)],
                                          names[static_cast<std::size_t>(j)], metadata);
                drain_warnings(oracle, log);

                QueryLogEntry entry;
                entry.iteration = log.total_queries() + 1;
                entry.kind = "pairwise";
                entry.x = names[static_cast<std::size_t>(i)];
                entry.y = names[static_cast<std::size_t>(j)];

                AddEdgeOutcome outcome = AddEdgeOutcome::RejectedDuplicate;
                switch (answer.relation) {
                    case PairwiseRelation::AtoB:
                        entry.verdict = "A";
                        outcome = graph.add_edge_checked(i, j);
                        break;
                    case PairwiseRelation::BtoA:
                        entry.verdict = "B";
                        outcome = graph.add_edge_checked(j, i);
                        break;
                    case PairwiseRelation::None:
                        entry.verdict = "C";
                        break;
                }
                if (answer.relation == PairwiseRelation::None) {
                    entry.outcome = "no_edge";
                } else {
                    entry.outcome = to_string(outcome);
                    if (outcome == AddEdgeOutcome::Added) ++log.accepted;
                    if (outcome == AddEdgeOutcome::RejectedCycle) ++log.rejected_cycle;
                }
                log.entries.push_back(std::move(entry));
            }
        }
    } catch (const OracleError& e) {
        drain_warnings(oracle, log);
        throw DiscoveryAborted(std::string("pairwise baseline aborted: ") + e.what(), graph, log);
    }

    return {std::move(graph), std::move(log)};
}

void write_query_log(const QueryLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open query log for writing: " + path);

    nlohmann::ordered_json init;
    init["type"] = "init";
    init["independent_variables"] = log.independent_variables;
    out << init.dump() << "\n";

    for (const auto& e : log.entries) {
        nlohmann::ordered_json line;
        line["type"] = "query";
        line["iteration"] = e.iteration;
        line["kind"] = e.kind;
        line["x"] = e.x;
        if (!e.y.empty()) line["y"] = e.y;
        if (e.kind == "causal") {
            line["score"] = {{"stat", e.score.stat},
                             {"conf", e.score.conf},
                             {"hist", e.score.hist},
                             {"total", e.score.total}};
        }
        line["verdict"] = e.verdict;
        line["outcome"] = e.outcome;
        out << line.dump() << "\n";
    }

    nlohmann::ordered_json summary;
    summary["type"] = "summary";
    summary["queries"] = log.total_queries();
    summary["accepted"] = log.accepted;
    summary["rejected_cycle"] = log.rejected_cycle;
    summary["warnings"] = log.warnings;
    out << summary.dump() << "\n";
    if (!out) throw IoError("failed writing query log: " + path);
}

}  // namespace causalkit
