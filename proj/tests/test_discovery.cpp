#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "causalkit/discovery.hpp"
#include "causalkit/errors.hpp"
#include "causalkit/eval.hpp"
#include "causalkit/fixtures.hpp"
#include "causalkit/seeds.hpp"

using namespace causalkit;

namespace {

Dataset data_for(const CausalGraph& g, std::size_t rows, std::uint64_t seed) {
    return generate_linear_gaussian(g, random_coefficients(g, derive_seed(seed, "coef")), rows,
                                    derive_seed(seed, "data"));
}

MockOracle perfect_oracle(const CausalGraph& truth) {
    MockOracleOptions opts;
    opts.confidence = MockConfidenceModel::fixed(1.0);
    return MockOracle(truth, opts);
}

// Claims a causal link for every pair it is asked about.
class AlwaysYesOracle : public CausalOracle {
public:
    OracleBackend backend() const override { return OracleBackend::Mock; }

protected:
    RawReply complete(const std::vector<ChatTurn>&, const QueryContext& ctx) override {
        if (ctx.kind == QueryContext::Kind::IndependentVariables) return {"<Answer>None</Answer>", {}};
        return {"<Answer>Yes</Answer>", {}};
    }
};

// Answers yes exactly for a fixed set of ordered name pairs.
class ScriptedVerdictOracle : public CausalOracle {
public:
    explicit ScriptedVerdictOracle(std::set<std::pair<std::string, std::string>> yes)
        : yes_(std::move(yes)) {}
    OracleBackend backend() const override { return OracleBackend::Mock; }

protected:
    RawReply complete(const std::vector<ChatTurn>&, const QueryContext& ctx) override {
        if (ctx.kind == QueryContext::Kind::IndependentVariables) return {"<Answer>None</Answer>", {}};
        return {yes_.count({ctx.x, ctx.y}) ? "<Answer>Yes</Answer>" : "<Answer>No</Answer>", {}};
    }

private:
    std::set<std::pair<std::string, std::string>> yes_;
};

// Accepts a few queries, then loses its connection for good.
class DyingOracle : public CausalOracle {
public:
    explicit DyingOracle(CausalGraph truth, int budget) : inner_(std::move(truth), {}), budget_(budget) {}
    OracleBackend backend() const override { return OracleBackend::Mock; }

protected:
    RawReply complete(const std::vector<ChatTurn>& request, const QueryContext& ctx) override {
        if (budget_-- <= 0) throw OracleError("socket closed");
        return forward(request, ctx);
    }

private:
    // MockOracle::complete is protected; route through a tiny adapter.
    struct Adapter : MockOracle {
        using MockOracle::MockOracle;
        RawReply call(const std::vector<ChatTurn>& request, const QueryContext& ctx) {
            return complete(request, ctx);
        }
    };
    RawReply forward(const std::vector<ChatTurn>& request, const QueryContext& ctx) {
        return inner_.call(request, ctx);
    }

    Adapter inner_;
    int budget_;
};

std::string log_to_text(const QueryLog& log) {
    const auto path = std::filesystem::temp_directory_path() / "causalkit-qlog.jsonl";
    write_query_log(log, path.string());
    std::ifstream in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

TEST_CASE("history decay follows 1.5 over 1 plus count") {
    CHECK(hist_score(0) == 1.5);
    CHECK(hist_score(1) == 0.75);
    CHECK(hist_score(2) == 0.5);
    CHECK(hist_score(5) == 0.25);
    CHECK_THROWS_AS(hist_score(-1), ConfigError);
}

TEST_CASE("weight validation") {
    DynamicScoreWeights w;  // defaults 0.3 / 0.1 / 0.6
    w.validate();
    CHECK_THROWS_AS((DynamicScoreWeights{0.5, 0.5, 0.5}.validate()), ConfigError);
    CHECK_THROWS_AS((DynamicScoreWeights{-0.1, 0.5, 0.6}.validate()), ConfigError);
    DynamicScoreWeights exact{1.0, 0.0, 0.0};
    exact.validate();
}

TEST_CASE("config validation") {
    DiscoveryConfig c;
    c.validate();
    c.score_threshold = -0.01;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.max_iterations = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.stat_bins = 1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("query state defaults and recording") {
    QueryState state;
    CHECK(state.count({0, 1}) == 0);
    CHECK(state.confidence({0, 1}) == 0.5);
    state.record({0, 1}, 0.9);
    state.record({0, 1}, 0.2);
    CHECK(state.count({0, 1}) == 2);
    CHECK(state.confidence({0, 1}) == 0.2);
    CHECK(state.count({1, 0}) == 0);  // directions are independent
}

TEST_CASE("dynamic score composes its three parts") {
    const CausalGraph g = sem6_graph();
    const Dataset d = data_for(g, 200, 21);
    const StatCache cache = build_stat_cache(d);

    QueryState state;
    state.record({0, 1}, 0.8);
    state.record({0, 1}, 0.8);

    const DynamicScoreWeights w{0.3, 0.1, 0.6};
    const ScoreBreakdown parts = dynamic_score_parts({0, 1}, w, cache, state);
    CHECK(parts.stat == stat_score(cache, 0, 1));
    CHECK(parts.conf == 0.8);
    CHECK(parts.hist == hist_score(2));
    CHECK(parts.total == doctest::Approx(0.3 * parts.stat + 0.1 * 0.8 + 0.6 * 0.5).epsilon(1e-15));
    CHECK(dynamic_score({0, 1}, w, cache, state) == parts.total);

    // pure-stat weights reduce the score to the statistical term
    const DynamicScoreWeights stat_only{1.0, 0.0, 0.0};
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            if (i == j) continue;
            CHECK(dynamic_score({i, j}, stat_only, cache, state) ==
                  doctest::Approx(stat_score(cache, i, j)).epsilon(1e-12));
        }
}

TEST_CASE("select_pair agrees with an exhaustive scan") {
    const CausalGraph g = child_graph();
    const Dataset d = data_for(g, 150, 22);
    const StatCache cache = build_stat_cache(d);
    std::mt19937_64 rng(23);

    for (int trial = 0; trial < 100; ++trial) {
        // random candidate subset and a random query history
        std::vector<std::pair<int, int>> candidates;
        for (int i = 0; i < 20; ++i)
            for (int j = 0; j < 20; ++j)
                if (i != j && rng() % 3 == 0) candidates.emplace_back(i, j);
        QueryState state;
        for (int k = 0; k < 40; ++k) {
            const int i = static_cast<int>(rng() % 20);
            const int j = static_cast<int>(rng() % 20);
            if (i != j) state.record({i, j}, static_cast<double>(rng() % 100) / 100.0);
        }
        DynamicScoreWeights w{0.3, 0.1, 0.6};
        if (trial % 2) w = {1.0, 0.0, 0.0};

        // independent argmax with explicit lexicographic tie handling
        std::optional<std::pair<int, int>> want;
        double want_score = -1.0;
        for (const auto& pair : candidates) {
            const double s = dynamic_score(pair, w, cache, state);
            if (s > want_score || (s == want_score && want && pair < *want)) {
                want = pair;
                want_score = s;
            }
        }

        const auto got = select_pair(candidates, w, cache, state, 0.0);
        if (candidates.empty()) {
            REQUIRE_FALSE(got.has_value());
        } else {
            REQUIRE(got.has_value());
            REQUIRE(*got == *want);
        }
    }
}

TEST_CASE("select_pair enforces the threshold and breaks ties lexicographically") {
    StatCache cache(3);  // all zeros
    QueryState state;
    const DynamicScoreWeights w{1.0, 0.0, 0.0};
    const std::vector<std::pair<int, int>> candidates = {{2, 1}, {1, 2}, {0, 2}, {2, 0}};
    // all stat scores are 0, so everything ties; smallest ordered pair wins
    CHECK(*select_pair(candidates, w, cache, state, 0.0) == std::pair<int, int>{0, 2});
    // nothing reaches a positive threshold
    CHECK_FALSE(select_pair(candidates, w, cache, state, 0.05).has_value());
    CHECK_FALSE(select_pair({}, w, cache, state, 0.0).has_value());
}

TEST_CASE("perfect oracle recovers small graphs exactly") {
    const std::vector<CausalGraph> catalog = {
        CausalGraph::from_edges({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}}),            // chain
        CausalGraph::from_edges({"A", "B", "C"}, {{"A", "B"}, {"A", "C"}}),            // fork
        CausalGraph::from_edges({"A", "B", "C"}, {{"A", "C"}, {"B", "C"}}),            // collider
        CausalGraph::from_edges({"A", "B", "C", "D"},
                                {{"A", "B"}, {"A", "C"}, {"B", "D"}, {"C", "D"}}),     // diamond
        sem6_graph(),
    };
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        const CausalGraph& truth = catalog[i];
        const Dataset d = data_for(truth, 300, 100 + i);
        const std::vector<VariableMeta> metadata = generic_metadata(truth);
        MockOracle oracle = perfect_oracle(truth);

        DiscoveryConfig config;
        config.max_iterations = 200;
        const auto [graph, log] = run_active_discovery(metadata, d, oracle, config);

        REQUIRE(evaluate(graph, truth).f1 == 1.0);
        CHECK(log.accepted == truth.edge_count());
        CHECK(log.rejected_cycle == 0);
        CHECK(log.independent_variables.size() == truth.roots().size());
        for (int k = 0; k < log.total_queries(); ++k) {
            CHECK(log.entries[static_cast<std::size_t>(k)].iteration == k + 1);
            CHECK(log.entries[static_cast<std::size_t>(k)].kind == "causal");
        }
    }
}

TEST_CASE("query budget is a hard cap") {
    const CausalGraph truth = sem6_graph();
    const Dataset d = data_for(truth, 200, 31);
    MockOracle oracle = perfect_oracle(truth);
    DiscoveryConfig config;
    config.max_iterations = 7;
    const auto [graph, log] = run_active_discovery(generic_metadata(truth), d, oracle, config);
    CHECK(log.total_queries() == 7);
}

TEST_CASE("without requery each ordered pair is asked at most once") {
    const CausalGraph truth = sem6_graph();
    const Dataset d = data_for(truth, 200, 32);
    MockOracle oracle = perfect_oracle(truth);
    DiscoveryConfig config;
    config.requery = false;
    config.max_iterations = 500;
    const auto [graph, log] = run_active_discovery(generic_metadata(truth), d, oracle, config);

    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& e : log.entries) REQUIRE(seen.insert({e.x, e.y}).second);
    CHECK(log.total_queries() <= 30);  // n(n-1) for 6 nodes
    CHECK(evaluate(graph, truth).f1 == 1.0);
}

TEST_CASE("an always-yes oracle builds a full acyclic tournament") {
    AlwaysYesOracle oracle;
    const CausalGraph shape = random_dag(5, 6, 33);
    const Dataset d = data_for(shape, 150, 33);
    DiscoveryConfig config;
    config.max_iterations = 100;
    const auto [graph, log] = run_active_discovery(generic_metadata(shape), d, oracle, config);

    CHECK(is_acyclic(graph));
    CHECK(log.accepted == graph.edge_count());
    // one accept per unordered pair orients all C(5,2) of them
    CHECK(graph.edge_count() == 10);
    CHECK(log.total_queries() == 10);
}

TEST_CASE("cycle guard rejects the edge that would close a loop") {
    // the oracle asserts a directed 3-cycle; whichever two edges land first,
    // the third must be rejected
    ScriptedVerdictOracle oracle({{"V0", "V1"}, {"V1", "V2"}, {"V2", "V0"}});
    const CausalGraph shape = random_dag(3, 2, 36);
    const Dataset d = data_for(shape, 150, 36);
    DiscoveryConfig config;
    config.max_iterations = 30;
    const auto [graph, log] = run_active_discovery(generic_metadata(shape), d, oracle, config);

    CHECK(is_acyclic(graph));
    CHECK(log.accepted == 2);
    CHECK(log.rejected_cycle == 1);
    CHECK(graph.edge_count() == 2);
    int rejected_seen = 0;
    for (const auto& e : log.entries)
        if (e.outcome == "rejected-cycle") ++rejected_seen;
    CHECK(rejected_seen == 1);
}

TEST_CASE("oracle death mid-run surfaces the partial result") {
    const CausalGraph truth = child_graph();
    const Dataset d = data_for(truth, 150, 34);
    DyingOracle oracle(truth, 12);
    DiscoveryConfig config;
    config.max_iterations = 400;
    try {
        run_active_discovery(child_metadata(), d, oracle, config);
        FAIL("expected DiscoveryAborted");
    } catch (const DiscoveryAborted& e) {
        CHECK(e.partial_log.total_queries() > 0);
        CHECK(e.partial_log.total_queries() < 400);
        CHECK(is_acyclic(e.partial_graph));
        CHECK(std::string(e.what()).find("aborted") != std::string::npos);
    }
}

TEST_CASE("metadata validation for discovery") {
    const CausalGraph truth = sem6_graph();
    const Dataset d = data_for(truth, 100, 35);
    MockOracle oracle = perfect_oracle(truth);
    DiscoveryConfig config;
    CHECK_THROWS_AS(run_active_discovery({{"only", "", DeclaredKind::Auto}}, d, oracle, config),
                    ConfigError);
    CHECK_THROWS_AS(run_active_discovery(generic_metadata(random_dag(4, 3, 1)), d, oracle, config),
                    ConfigError);  //4 metadata entries vs 6 columns
}

TEST_CASE("BFS baseline expands the frontier from the roots") {
    const CausalGraph truth = child_graph();
    MockOracle oracle = perfect_oracle(truth);
    DiscoveryConfig config;
    const auto [graph, log] = run_bfs_baseline(child_metadata(), oracle, config);

    // every node is reachable from the single root, so recovery is exact
    CHECK(evaluate(graph, truth).f1 == 1.0);
    CHECK(log.independent_variables == std::vector<std::string>{"BirthAsphyxia"});
    CHECK(log.total_queries() == 20);  // one children query per reached node
    for (const auto& e : log.entries) {
        CHECK(e.kind == "children");
        CHECK(e.y.empty());
        CHECK(e.outcome.find("added=") == 0);
    }
}

TEST_CASE("pairwise baseline asks every unordered pair exactly once") {
    for (const int n : {4, 7}) {
        const CausalGraph truth = random_dag(n, n, 40 + n);
        MockOracle oracle = perfect_oracle(truth);
        const auto [graph, log] = run_pairwise_baseline(generic_metadata(truth), oracle);
        CHECK(log.total_queries() == n * (n - 1) / 2);
        CHECK(evaluate(graph, truth).f1 == 1.0);
        for (const auto& e : log.entries) CHECK(e.kind == "pairwise");
    }
}

TEST_CASE("query log serialization round trips through JSONL") {
    const CausalGraph truth = sem6_graph();
    const Dataset d = data_for(truth, 200, 41);
    MockOracle oracle = perfect_oracle(truth);
    DiscoveryConfig config;
    config.max_iterations = 50;
    const auto [graph, log] = run_active_discovery(generic_metadata(truth), d, oracle, config);

    std::istringstream lines(log_to_text(log));
    std::string line;
    std::vector<nlohmann::json> docs;
    while (std::getline(lines, line)) docs.push_back(nlohmann::json::parse(line));

    REQUIRE(docs.size() == static_cast<std::size_t>(log.total_queries()) + 2);
    CHECK(docs.front()["type"] == "init");
    CHECK(docs.front()["independent_variables"].size() == log.independent_variables.size());
    for (std::size_t i = 1; i + 1 < docs.size(); ++i) {
        CHECK(docs[i]["type"] == "query");
        CHECK(docs[i]["kind"] == "causal");
        CHECK(docs[i]["iteration"] == static_cast<int>(i));
        REQUIRE(docs[i].contains("score"));
        const auto& s = docs[i]["score"];
        CHECK(s["total"].get<double>() ==
              doctest::Approx(0.3 * s["stat"].get<double>() + 0.1 * s["conf"].get<double>() +
                              0.6 * s["hist"].get<double>())
                  .epsilon(1e-12));
    }
    CHECK(docs.back()["type"] == "summary");
    CHECK(docs.back()["queries"] == log.total_queries());
    CHECK(docs.back()["accepted"] == log.accepted);
}

TEST_CASE("discovery runs are deterministic for a fixed seed") {
    const CausalGraph truth = child_graph();
    const Dataset d = data_for(truth, 200, 42);
    const auto run = [&](std::uint64_t seed) {
        MockOracleOptions opts;
        opts.noise_rate = 0.25;
        opts.confidence = MockConfidenceModel::noisy(0.5, 1.0);
        opts.seed = seed;
        MockOracle oracle(truth, opts);
        DiscoveryConfig config;
        config.seed = seed;
        config.max_iterations = 150;
        const auto [graph, log] = run_active_discovery(child_metadata(), d, oracle, config);
        return log_to_text(log);
    };
    CHECK(run(7) == run(7));
    CHECK(run(7) != run(8));
}
