#include "causalkit/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "causalkit/errors.hpp"

namespace causalkit::io {

CausalGraph load_graph_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open graph file: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": invalid JSON: " + e.what());
    }
    if (!doc.contains("nodes") || !doc["nodes"].is_array())
        throw IoError(path.string() + ": missing 'nodes' array");
    if (!doc.contains("edges") || !doc["edges"].is_array())
        throw IoError(path.string() + ": missing 'edges' array");

    std::vector<std::string> nodes;
    for (const auto& n : doc["nodes"]) {
        if (!n.is_string()) throw IoError(path.string() + ": node identifiers must be strings");
        nodes.push_back(n.get<std::string>());
    }
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& e : doc["edges"]) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string())
            throw IoError(path.string() + ": each edge must be a [source, target] string pair");
        edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    try {
        return CausalGraph::from_edges(std::move(nodes), edges);
    } catch (const GraphError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void save_graph_json(const CausalGraph& g, const std::filesystem::path& path) {
    nlohmann::ordered_json doc;
    doc["nodes"] = g.nodes();
    auto edges = nlohmann::ordered_json::array();
    for (const auto& [u, v] : g.edges())
        edges.push_back(nlohmann::ordered_json::array({g.name_of(u), g.name_of(v)}));
    doc["edges"] = std::move(edges);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write graph file: " + path.string());
    out << doc.dump(2) << '\n';
}

CausalGraph load_adjacency_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open adjacency file: " + path.string());

    std::string line;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        rows.push_back(std::move(fields));
    }
    if (rows.empty()) throw IoError(path.string() + ": empty adjacency file");

    const std::vector<std::string> nodes = rows.front();
    const std::size_t n = nodes.size();
    if (rows.size() != n + 1)
        throw IoError(path.string() + ": expected " + std::to_string(n) + " data rows, found " +
                      std::to_string(rows.size() - 1));

    AdjacencyMatrix a(n, std::vector<int>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = rows[i + 1];
        if (row.size() != n)
            throw IoError(path.string() + ": row " + std::to_string(i + 2) + " has " +
                          std::to_string(row.size()) + " fields, expected " + std::to_string(n));
        for (std::size_t j = 0; j < n; ++j) {
            if (row[j] == "0") a[i][j] = 0;
            else if (row[j] == "1") a[i][j] = 1;
            else
                throw IoError(path.string() + ": row " + std::to_string(i + 2) +
                              ": entries must be 0 or 1, found '" + row[j] + "'");
        }
    }
    try {
        return CausalGraph::from_adjacency(nodes, a);
    } catch (const GraphError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void save_adjacency_csv(const CausalGraph& g, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write adjacency file: " + path.string());
    const auto& nodes = g.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) out << (i ? "," : "") << nodes[i];
    out << '\n';
    const AdjacencyMatrix a = to_adjacency(g);
    for (const auto& row : a) {
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
        out << '\n';
    }
}

CausalGraph load_graph_auto(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".json") return load_graph_json(path);
    if (ext == ".csv") return load_adjacency_csv(path);
    throw IoError("unsupported graph file extension '" + ext + "' (expected .json or .csv): " +
                  path.string());
}

}  // namespace causalkit::io
