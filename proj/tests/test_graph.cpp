#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "causalkit/errors.hpp"
#include "causalkit/graph.hpp"

using namespace causalkit;

namespace {

// Independent cycle check: recursive three-color DFS over an adjacency
// matrix, sharing no code with CausalGraph.
bool brute_has_cycle(const AdjacencyMatrix& a) {
    const int n = static_cast<int>(a.size());
    std::vector<int> color(n, 0);  // 0 unseen, 1 on stack, 2 done
    std::vector<int> stack;
    std::vector<int> next(n, 0);
    for (int start = 0; start < n; ++start) {
        if (color[start] != 0) continue;
        stack = {start};
        color[start] = 1;
        next[start] = 0;
        while (!stack.empty()) {
            const int u = stack.back();
            bool advanced = false;
            for (int& v = next[u]; v < n; ++v) {
                if (!a[u][v]) continue;
                if (color[v] == 1) return true;
                if (color[v] == 0) {
                    color[v] = 1;
                    next[v] = 0;
                    stack.push_back(v);
                    ++v;
                    advanced = true;
                    break;
                }
            }
            if (!advanced) {
                color[u] = 2;
                stack.pop_back();
            }
        }
    }
    return false;
}

// Independent simple-path enumeration by plain recursion.
void brute_paths_rec(const AdjacencyMatrix& a, int u, int dst, int max_len, std::vector<int>& cur,
                     std::vector<char>& used, std::vector<std::vector<int>>& out) {
    if (u == dst && cur.size() > 1) {
        out.push_back(cur);
        return;
    }
    if (max_len >= 0 && static_cast<int>(cur.size()) - 1 >= max_len) return;
    for (int v = 0; v < static_cast<int>(a.size()); ++v) {
        if (!a[u][v] || used[v]) continue;
        used[v] = 1;
        cur.push_back(v);
        brute_paths_rec(a, v, dst, max_len, cur, used, out);
        cur.pop_back();
        used[v] = 0;
    }
}

std::vector<std::vector<int>> brute_paths(const AdjacencyMatrix& a, int src, int dst, int max_len) {
    std::vector<std::vector<int>> out;
    if (src == dst) return out;
    std::vector<int> cur = {src};
    std::vector<char> used(a.size(), 0);
    used[static_cast<std::size_t>(src)] = 1;
    brute_paths_rec(a, src, dst, max_len, cur, used, out);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> names(int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back("N" + std::to_string(i));
    return out;
}

}  // namespace

TEST_CASE("node indexing follows construction order") {
    const CausalGraph g({"b", "a", "c"});
    CHECK(g.node_count() == 3);
    CHECK(g.index_of("b") == 0);
    CHECK(g.index_of("c") == 2);
    CHECK(g.name_of(1) == "a");
    CHECK(g.has_node("a"));
    CHECK_FALSE(g.has_node("d"));
    CHECK_THROWS_AS(g.index_of("d"), GraphError);
    CHECK_THROWS_AS((void)g.name_of(3), GraphError);
}

TEST_CASE("duplicate node names are rejected") {
    CHECK_THROWS_AS(CausalGraph({"a", "b", "a"}), GraphError);
}

TEST_CASE("guarded insert: added, duplicate, cycle, self-edge") {
    CausalGraph g(names(3));
    CHECK(g.add_edge_checked(0, 1) == AddEdgeOutcome::Added);
    CHECK(g.add_edge_checked(1, 2) == AddEdgeOutcome::Added);
    CHECK(g.add_edge_checked(0, 1) == AddEdgeOutcome::RejectedDuplicate);
    CHECK(g.add_edge_checked(2, 0) == AddEdgeOutcome::RejectedCycle);
    CHECK(g.add_edge_checked(1, 0) == AddEdgeOutcome::RejectedCycle);
    CHECK_THROWS_AS(g.add_edge_checked(1, 1), GraphError);
    CHECK_THROWS_AS(g.add_edge_checked(0, 7), GraphError);
    // rejections left the graph untouched
    CHECK(g.edge_count() == 2);
    CHECK(g.has_edge(0, 1));
    CHECK_FALSE(g.has_edge(2, 0));
    CHECK(is_acyclic(g));
}

TEST_CASE("string overloads resolve through the index") {
    CausalGraph g({"x", "y"});
    CHECK(g.add_edge_checked("x", "y") == AddEdgeOutcome::Added);
    CHECK(g.has_edge("x", "y"));
    CHECK_FALSE(g.has_edge("y", "x"));
    CHECK_THROWS_AS(g.add_edge_checked("x", "zz"), GraphError);
}

TEST_CASE("children and parents are sorted ascending") {
    CausalGraph g(names(5));
    for (int v : {4, 1, 3, 2}) g.add_edge_checked(0, v);
    g.add_edge_checked(4, 2);
    CHECK(g.children(0) == std::vector<int>{1, 2, 3, 4});
    CHECK(g.parents(2) == std::vector<int>{0, 4});
    CHECK(g.edges() == std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {0, 3}, {0, 4}, {4, 2}});
}

TEST_CASE("roots are the in-degree-zero nodes") {
    CausalGraph g(names(4));
    g.add_edge_checked(1, 2);
    g.add_edge_checked(3, 2);
    CHECK(g.roots() == std::vector<int>{0, 1, 3});
}

TEST_CASE("property: random guarded insertions never create a cycle") {
    std::mt19937_64 rng(91);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 9);
        CausalGraph g(names(n));
        std::uniform_int_distribution<int> node(0, n - 1);
        for (int step = 0; step < 3 * n; ++step) {
            const int u = node(rng);
            const int v = node(rng);
            if (u == v) continue;
            g.add_edge_checked(u, v);
            const AdjacencyMatrix a = to_adjacency(g);
            REQUIRE_FALSE(brute_has_cycle(a));
            REQUIRE(is_acyclic(g));
        }
    }
}

TEST_CASE("guarded insert rejects exactly the cycle-closing edges") {
    std::mt19937_64 rng(92);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 6);
        CausalGraph g(names(n));
        std::uniform_int_distribution<int> node(0, n - 1);
        for (int step = 0; step < 4 * n; ++step) {
            const int u = node(rng);
            const int v = node(rng);
            if (u == v) continue;
            AdjacencyMatrix a = to_adjacency(g);
            const bool dup = a[u][v] != 0;
            a[u][v] = 1;
            const bool closes = brute_has_cycle(a);
            const AddEdgeOutcome out = g.add_edge_checked(u, v);
            if (dup)
                REQUIRE(out == AddEdgeOutcome::RejectedDuplicate);
            else if (closes)
                REQUIRE(out == AddEdgeOutcome::RejectedCycle);
            else
                REQUIRE(out == AddEdgeOutcome::Added);
        }
    }
}

TEST_CASE("unguarded insert accepts cycles but not duplicates") {
    CausalGraph g(names(3));
    g.add_edge_unchecked(0, 1);
    g.add_edge_unchecked(1, 2);
    g.add_edge_unchecked(2, 0);
    CHECK_FALSE(is_acyclic(g));
    CHECK(g.edge_count() == 3);
    CHECK_THROWS_AS(g.add_edge_unchecked(0, 1), GraphError);
    CHECK_THROWS_AS(topological_order(g), GraphError);
}

TEST_CASE("topological order is a valid deterministic Kahn order") {
    CausalGraph g(names(6));
    g.add_edge_checked(5, 0);
    g.add_edge_checked(5, 2);
    g.add_edge_checked(2, 3);
    g.add_edge_checked(3, 1);
    g.add_edge_checked(4, 1);
    const std::vector<int> order = topological_order(g);
    REQUIRE(order.size() == 6);
    std::vector<int> pos(6);
    for (int i = 0; i < 6; ++i) pos[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;
    for (const auto& [u, v] : g.edges()) CHECK(pos[static_cast<std::size_t>(u)] < pos[static_cast<std::size_t>(v)]);
    // smallest-index tie-breaking makes the order unique
    CHECK(order == std::vector<int>{4, 5, 0, 2, 3, 1});
}

TEST_CASE("reachable agrees with a transitive-closure sweep") {
    std::mt19937_64 rng(93);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 7);
        CausalGraph g(names(n));
        std::uniform_int_distribution<int> node(0, n - 1);
        for (int step = 0; step < 2 * n; ++step) {
            const int u = node(rng);
            const int v = node(rng);
            if (u != v) g.add_edge_checked(u, v);
        }
        // Floyd–Warshall closure as the oracle
        AdjacencyMatrix closure = to_adjacency(g);
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (closure[i][k] && closure[k][j]) closure[i][j] = 1;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const bool expect = i == j ? true : closure[i][j] != 0;
                REQUIRE(g.reachable(i, j) == expect);
            }
    }
}

TEST_CASE("simple-path enumeration matches brute-force recursion") {
    std::mt19937_64 rng(94);
    for (int trial = 0; trial < 120; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 6);
        CausalGraph g(names(n));
        std::uniform_int_distribution<int> node(0, n - 1);
        for (int step = 0; step < 2 * n; ++step) {
            const int u = node(rng);
            const int v = node(rng);
            if (u != v) g.add_edge_checked(u, v);
        }
        const int src = node(rng);
        int dst = node(rng);
        if (dst == src) dst = (dst + 1) % n;
        const int max_len = (trial % 3 == 0) ? -1 : 1 + static_cast<int>(rng() % n);

        const auto got = enumerate_simple_paths(g, src, dst, max_len);
        std::vector<std::vector<int>> got_nodes;
        for (const auto& p : got) got_nodes.push_back(p.nodes);
        REQUIRE(got_nodes == brute_paths(to_adjacency(g), src, dst, max_len));
        REQUIRE(std::is_sorted(got_nodes.begin(), got_nodes.end()));
    }
}

TEST_CASE("path length counts edges") {
    CausalPath p;
    CHECK(p.length() == 0);
    p.nodes = {3};
    CHECK(p.length() == 0);
    p.nodes = {3, 1, 2};
    CHECK(p.length() == 2);
}

TEST_CASE("adjacency round trip preserves the graph") {
    const CausalGraph g = CausalGraph::from_edges(names(4), {{"N0", "N2"}, {"N2", "N3"}, {"N1", "N3"}});
    const AdjacencyMatrix a = to_adjacency(g);
    const CausalGraph back = CausalGraph::from_adjacency(g.nodes(), a);
    CHECK(back.edges() == g.edges());
    CHECK(back.nodes() == g.nodes());
}

TEST_CASE("from_edges rejects unknown endpoints") {
    CHECK_THROWS_AS(CausalGraph::from_edges({"a", "b"}, {{"a", "q"}}), GraphError);
}

TEST_CASE("from_adjacency accepts cyclic imports") {
    AdjacencyMatrix a = {{0, 1}, {1, 0}};
    const CausalGraph g = CausalGraph::from_adjacency({"u", "v"}, a);
    CHECK(g.edge_count() == 2);
    CHECK_FALSE(is_acyclic(g));
}
