#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace causalkit {

using AdjacencyMatrix = std::vector<std::vector<int>>;

enum class AddEdgeOutcome { Added, RejectedCycle, RejectedDuplicate };

const char* to_string(AddEdgeOutcome outcome);

// A simple directed path, stored as node indices from source to terminal.
struct CausalPath {
    std::vector<int> nodes;

    std::size_t length() const { return nodes.empty() ? 0 : nodes.size() - 1; }
};

// Directed graph over named variables. node_index assignment follows the
// node list given at construction and never changes afterwards.
//
// Graphs built through add_edge_checked stay acyclic: the guarded insert
// rejects any edge that would close a cycle. Imported graphs (baseline
// method outputs loaded from JSON/CSV) go through add_edge_unchecked and
// may carry cycles; is_acyclic() reports on those.
class CausalGraph {
public:
    explicit CausalGraph(std::vector<std::string> nodes);

    static CausalGraph from_edges(std::vector<std::string> nodes,
                                  const std::vector<std::pair<std::string, std::string>>& edges);
    static CausalGraph from_adjacency(std::vector<std::string> nodes, const AdjacencyMatrix& a);

    int node_count() const { return static_cast<int>(nodes_.size()); }
    int edge_count() const { return edge_count_; }
    const std::vector<std::string>& nodes() const { return nodes_; }

    bool has_node(const std::string& id) const { return index_.count(id) != 0; }
    // Throws GraphError on unknown identifiers.
    int index_of(const std::string& id) const;
    const std::string& name_of(int idx) const;

    bool has_edge(int u, int v) const;
    bool has_edge(const std::string& u, const std::string& v) const;

    // Out-/in-neighbours in ascending node_index order.
    const std::vector<int>& children(int u) const;
    const std::vector<int>& parents(int v) const;

    // All edges in lexicographic (u, v) index order.
    std::vector<std::pair<int, int>> edges() const;

    // Nodes with in-degree zero, ascending.
    std::vector<int> roots() const;

    // Guarded insert: rejects duplicates and cycle-closing edges, leaving
    // the graph untouched on rejection. Unknown nodes or self-edges throw.
    AddEdgeOutcome add_edge_checked(int u, int v);
    AddEdgeOutcome add_edge_checked(const std::string& u, const std::string& v);

    // Unguarded insert for imports; still rejects self-edges and duplicates
    // (duplicates throw, matching the no-duplicate invariant).
    void add_edge_unchecked(int u, int v);

    // True if v is reachable from u along directed edges.
    bool reachable(int u, int v) const;

private:
    void check_index(int idx) const;

    std::vector<std::string> nodes_;
    std::unordered_map<std::string, int> index_;
    std::vector<std::vector<int>> children_;
    std::vector<std::vector<int>> parents_;
    int edge_count_ = 0;
};

bool is_acyclic(const CausalGraph& g);

// Deterministic Kahn order; ties broken by ascending node_index.
// Throws GraphError if the graph has a cycle.
std::vector<int> topological_order(const CausalGraph& g);

// All simple directed paths src -> dst with at most max_len edges, in
// lexicographic node_index order. max_len < 0 means no bound (n - 1).
std::vector<CausalPath> enumerate_simple_paths(const CausalGraph& g, int src, int dst,
                                               int max_len = -1);
std::vector<CausalPath> enumerate_simple_paths(const CausalGraph& g, const std::string& src,
                                               const std::string& dst, int max_len = -1);

AdjacencyMatrix to_adjacency(const CausalGraph& g);

}  // namespace causalkit
