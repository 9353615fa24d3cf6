#pragma once

#include <filesystem>

#include "causalkit/graph.hpp"

namespace causalkit::io {

// Graph JSON: {"nodes": ["A", ...], "edges": [["A","B"], ...]}.
// Adjacency CSV: header row of node names, then n rows of 0/1.
// Both are the interchange surface for graphs produced by external
// baseline methods, so cyclic inputs load fine; is_acyclic() reports.

CausalGraph load_graph_json(const std::filesystem::path& path);
void save_graph_json(const CausalGraph& g, const std::filesystem::path& path);

CausalGraph load_adjacency_csv(const std::filesystem::path& path);
void save_adjacency_csv(const CausalGraph& g, const std::filesystem::path& path);

// Dispatch on extension: .json or .csv.
CausalGraph load_graph_auto(const std::filesystem::path& path);

}  // namespace causalkit::io
