#include "causalkit/graph.hpp"

#include <algorithm>
#include <queue>

#include "causalkit/errors.hpp"

namespace causalkit {

const char* to_string(AddEdgeOutcome outcome) {
    switch (outcome) {
        case AddEdgeOutcome::Added: return "added";
        case AddEdgeOutcome::RejectedCycle: return "rejected-cycle";
        case AddEdgeOutcome::RejectedDuplicate: return "rejected-duplicate";
    }
    return "unknown";
}

CausalGraph::CausalGraph(std::vector<std::string> nodes) : nodes_(std::move(nodes)) {
    index_.reserve(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        auto [it, inserted] = index_.emplace(nodes_[i], static_cast<int>(i));
        if (!inserted) throw GraphError("duplicate node identifier: " + nodes_[i]);
    }
    children_.resize(nodes_.size());
    parents_.resize(nodes_.size());
}

CausalGraph CausalGraph::from_edges(std::vector<std::string> nodes,
                                    const std::vector<std::pair<std::string, std::string>>& edges) {
    CausalGraph g(std::move(nodes));
    for (const auto& [u, v] : edges) g.add_edge_unchecked(g.index_of(u), g.index_of(v));
    return g;
}

CausalGraph CausalGraph::from_adjacency(std::vector<std::string> nodes, const AdjacencyMatrix& a) {
    const std::size_t n = nodes.size();
    if (a.size() != n) throw GraphError("adjacency matrix row count does not match node count");
    CausalGraph g(std::move(nodes));
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i].size() != n) throw GraphError("adjacency matrix is not square");
        for (std::size_t j = 0; j < n; ++j) {
            if (a[i][j] == 0) continue;
            if (i == j) throw GraphError("adjacency matrix has a self-edge on the diagonal");
            g.add_edge_unchecked(static_cast<int>(i), static_cast<int>(j));
        }
    }
    return g;
}

int CausalGraph::index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw GraphError("unknown node identifier: " + id);
    return it->second;
}

const std::string& CausalGraph::name_of(int idx) const {
    check_index(idx);
    return nodes_[static_cast<std::size_t>(idx)];
}

void CausalGraph::check_index(int idx) const {
    if (idx < 0 || idx >= node_count())
        throw GraphError("node index out of range: " + std::to_string(idx));
}

bool CausalGraph::has_edge(int u, int v) const {
    check_index(u);
    check_index(v);
    const auto& ch = children_[static_cast<std::size_t>(u)];
    return std::binary_search(ch.begin(), ch.end(), v);
}

bool CausalGraph::has_edge(const std::string& u, const std::string& v) const {
    return has_edge(index_of(u), index_of(v));
}

const std::vector<int>& CausalGraph::children(int u) const {
    check_index(u);
    return children_[static_cast<std::size_t>(u)];
}

const std::vector<int>& CausalGraph::parents(int v) const {
    check_index(v);
    return parents_[static_cast<std::size_t>(v)];
}

std::vector<std::pair<int, int>> CausalGraph::edges() const {
    std::vector<std::pair<int, int>> out;
    out.reserve(static_cast<std::size_t>(edge_count_));
    for (int u = 0; u < node_count(); ++u)
        for (int v : children_[static_cast<std::size_t>(u)]) out.emplace_back(u, v);
    return out;
}

std::vector<int> CausalGraph::roots() const {
    std::vector<int> out;
    for (int v = 0; v < node_count(); ++v)
        if (parents_[static_cast<std::size_t>(v)].empty()) out.push_back(v);
    return out;
}

bool CausalGraph::reachable(int u, int v) const {
    check_index(u);
    check_index(v);
    if (u == v) return true;
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<int> stack{u};
    seen[static_cast<std::size_t>(u)] = 1;
    while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        for (int next : children_[static_cast<std::size_t>(cur)]) {
            if (next == v) return true;
            if (!seen[static_cast<std::size_t>(next)]) {
                seen[static_cast<std::size_t>(next)] = 1;
                stack.push_back(next);
            }
        }
    }
    return false;
}

AddEdgeOutcome CausalGraph::add_edge_checked(int u, int v) {
    check_index(u);
    check_index(v);
    if (u == v) throw GraphError("self-edge rejected: " + nodes_[static_cast<std::size_t>(u)]);
    if (has_edge(u, v)) return AddEdgeOutcome::RejectedDuplicate;
    // u -> v closes a cycle exactly when u is already reachable from v.
    if (reachable(v, u)) return AddEdgeOutcome::RejectedCycle;

    auto& ch = children_[static_cast<std::size_t>(u)];
    ch.insert(std::upper_bound(ch.begin(), ch.end(), v), v);
    auto& pa = parents_[static_cast<std::size_t>(v)];
    pa.insert(std::upper_bound(pa.begin(), pa.end(), u), u);
    ++edge_count_;
    return AddEdgeOutcome::Added;
}

AddEdgeOutcome CausalGraph::add_edge_checked(const std::string& u, const std::string& v) {
    return add_edge_checked(index_of(u), index_of(v));
}

void CausalGraph::add_edge_unchecked(int u, int v) {
    check_index(u);
    check_index(v);
    if (u == v) throw GraphError("self-edge rejected: " + nodes_[static_cast<std::size_t>(u)]);
    if (has_edge(u, v))
        throw GraphError("duplicate edge: " + nodes_[static_cast<std::size_t>(u)] + " -> " +
                         nodes_[static_cast<std::size_t>(v)]);
    auto& ch = children_[static_cast<std::size_t>(u)];
    ch.insert(std::upper_bound(ch.begin(), ch.end(), v), v);
    auto& pa = parents_[static_cast<std::size_t>(v)];
    pa.insert(std::upper_bound(pa.begin(), pa.end(), u), u);
    ++edge_count_;
}

bool is_acyclic(const CausalGraph& g) {
    const int n = g.node_count();
    std::vector<int> indegree(static_cast<std::size_t>(n), 0);
    for (int v = 0; v < n; ++v) indegree[static_cast<std::size_t>(v)] = static_cast<int>(g.parents(v).size());
    std::vector<int> queue;
    for (int v = 0; v < n; ++v)
        if (indegree[static_cast<std::size_t>(v)] == 0) queue.push_back(v);
    int removed = 0;
    while (!queue.empty()) {
        const int u = queue.back();
        queue.pop_back();
        ++removed;
        for (int v : g.children(u))
            if (--indegree[static_cast<std::size_t>(v)] == 0) queue.push_back(v);
    }
    return removed == n;
}

std::vector<int> topological_order(const CausalGraph& g) {
    const int n = g.node_count();
    std::vector<int> indegree(static_cast<std::size_t>(n), 0);
    for (int v = 0; v < n; ++v) indegree[static_cast<std::size_t>(v)] = static_cast<int>(g.parents(v).size());

    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (int v = 0; v < n; ++v)
        if (indegree[static_cast<std::size_t>(v)] == 0) ready.push(v);

    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n));
    while (!ready.empty()) {
        const int u = ready.top();
        ready.pop();
        order.push_back(u);
        for (int v : g.children(u))
            if (--indegree[static_cast<std::size_t>(v)] == 0) ready.push(v);
    }
    if (static_cast<int>(order.size()) != n)
        throw GraphError("topological order requested for a cyclic graph");
    return order;
}

namespace {

void paths_dfs(const CausalGraph& g, int cur, int dst, int max_len, std::vector<int>& prefix,
               std::vector<char>& visited, std::vector<CausalPath>& out) {
    if (cur == dst) {
        out.push_back(CausalPath{prefix});
        return;
    }
    if (static_cast<int>(prefix.size()) - 1 >= max_len) return;
    for (int next : g.children(cur)) {
        if (visited[static_cast<std::size_t>(next)]) continue;
        visited[static_cast<std::size_t>(next)] = 1;
        prefix.push_back(next);
        paths_dfs(g, next, dst, max_len, prefix, visited, out);
        prefix.pop_back();
        visited[static_cast<std::size_t>(next)] = 0;
    }
}

}  // namespace

std::vector<CausalPath> enumerate_simple_paths(const CausalGraph& g, int src, int dst, int max_len) {
    if (src == dst) throw GraphError("path enumeration requires distinct endpoints");
    if (max_len == 0) throw GraphError("max_len must be at least 1");
    if (max_len < 0) max_len = std::max(1, g.node_count() - 1);
    g.name_of(src);  // range checks
    g.name_of(dst);

    std::vector<CausalPath> out;
    std::vector<int> prefix{src};
    std::vector<char> visited(static_cast<std::size_t>(g.node_count()), 0);
    visited[static_cast<std::size_t>(src)] = 1;
    paths_dfs(g, src, dst, max_len, prefix, visited, out);
    return out;
}

std::vector<CausalPath> enumerate_simple_paths(const CausalGraph& g, const std::string& src,
                                               const std::string& dst, int max_len) {
    return enumerate_simple_paths(g, g.index_of(src), g.index_of(dst), max_len);
}

AdjacencyMatrix to_adjacency(const CausalGraph& g) {
    const std::size_t n = static_cast<std::size_t>(g.node_count());
    AdjacencyMatrix a(n, std::vector<int>(n, 0));
    for (const auto& [u, v] : g.edges()) a[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] = 1;
    return a;
}

}  // namespace causalkit
