#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "causalkit/dataset.hpp"
#include "causalkit/graph.hpp"

namespace causalkit {

// The Child congenital-heart-disease network: 20 nodes, 25 edges, one root.
CausalGraph child_graph();
std::vector<VariableMeta> child_metadata();

// Small synthetic SEM with known coefficients, for effect-recovery checks.
// S is the sensitive attribute, Y the outcome.
CausalGraph sem6_graph();
std::vector<VariableMeta> sem6_metadata();
std::map<std::pair<std::string, std::string>, double> sem6_coefficients();

// Ancestral linear-Gaussian sampling: roots are standard normal, every other
// node is the coefficient-weighted sum of its parents plus N(0, sigma^2).
Dataset generate_linear_gaussian(const CausalGraph& graph,
                                 const std::map<std::pair<std::string, std::string>, double>& coefficients,
                                 std::size_t rows, std::uint64_t seed, double noise_sigma = 0.1);

// Uniform random DAG over nodes V0..V{n-1} with exactly `edges` edges.
CausalGraph random_dag(int nodes, int edges, std::uint64_t seed);

// Coefficients with magnitudes in [lo, hi], random sign when requested.
std::map<std::pair<std::string, std::string>, double> random_coefficients(const CausalGraph& graph,
                                                                          std::uint64_t seed,
                                                                          double lo = 0.5, double hi = 1.5,
                                                                          bool random_sign = true);

// Placeholder descriptions for synthetic graphs.
std::vector<VariableMeta> generic_metadata(const CausalGraph& graph);

// Plain CSV export (header + rows); categorical columns write their labels.
void save_dataset_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace causalkit
