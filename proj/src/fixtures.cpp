#include "causalkit/fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "causalkit/errors.hpp"

namespace causalkit {

namespace {

struct NamedVariable {
    const char* name;
    const char* description;
};

constexpr NamedVariable kChildVariables[] = {
    {"BirthAsphyxia", "Lack of oxygen to the blood during the infant's birth."},
    {"HypDistrib", "Low oxygen areas equally distributed around the body."},
    {"HypoxiaInO2", "Hypoxia when breathing oxygen."},
    {"CO2", "Level of carbon dioxide in the body."},
    {"ChestXray", "Appearance of the lungs on a chest x-ray."},
    {"Grunting", "Grunting sounds in the infant's breathing."},
    {"LVHreport", "Report of left ventricular hypertrophy."},
    {"LowerBodyO2", "Level of oxygen in the lower body."},
    {"RUQO2", "Level of oxygen in the right upper quadrant of the body."},
    {"CO2Report", "Report of the carbon dioxide level."},
    {"XrayReport", "Report of the chest x-ray findings."},
    {"Disease", "Underlying congenital heart disease."},
    {"GruntingReport", "Report of the infant grunting."},
    {"Age", "Age of the infant at presentation."},
    {"LVH", "Left ventricular hypertrophy."},
    {"DuctFlow", "Blood flow across the ductus arteriosus."},
    {"CardiacMixing", "Mixing of oxygenated and deoxygenated blood."},
    {"LungParench", "State of the lung parenchyma."},
    {"LungFlow", "Blood flow through the lungs."},
    {"Sick", "Whether the infant presents as sick."},
};

constexpr std::pair<const char*, const char*> kChildEdges[] = {
    {"BirthAsphyxia", "Disease"}, {"Disease", "Age"},
    {"Disease", "Sick"},          {"Disease", "DuctFlow"},
    {"Disease", "CardiacMixing"}, {"Disease", "LungParench"},
    {"Disease", "LungFlow"},      {"Disease", "LVH"},
    {"LVH", "LVHreport"},         {"DuctFlow", "HypDistrib"},
    {"CardiacMixing", "HypDistrib"}, {"CardiacMixing", "HypoxiaInO2"},
    {"LungParench", "HypoxiaInO2"},  {"LungParench", "CO2"},
    {"LungParench", "ChestXray"},    {"LungParench", "Grunting"},
    {"LungFlow", "ChestXray"},       {"Sick", "Grunting"},
    {"Sick", "Age"},                 {"HypDistrib", "LowerBodyO2"},
    {"HypoxiaInO2", "LowerBodyO2"},  {"HypoxiaInO2", "RUQO2"},
    {"CO2", "CO2Report"},            {"ChestXray", "XrayReport"},
    {"Grunting", "GruntingReport"},
};

constexpr NamedVariable kSem6Variables[] = {
    {"S", "Sensitive attribute of the individual."},
    {"Z", "Background covariate independent of the sensitive attribute."},
    {"M1", "First mediator influenced by the sensitive attribute."},
    {"M2", "Second mediator influenced by the sensitive attribute."},
    {"W", "Covariate-driven control variable."},
    {"Y", "Outcome score."},
};

}  // namespace

CausalGraph child_graph() {
    std::vector<std::string> nodes;
    for (const auto& v : kChildVariables) nodes.emplace_back(v.name);
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& [u, v] : kChildEdges) edges.emplace_back(u, v);
    return CausalGraph::from_edges(std::move(nodes), edges);
}

std::vector<VariableMeta> child_metadata() {
    std::vector<VariableMeta> meta;
    for (const auto& v : kChildVariables) meta.push_back({v.name, v.description, DeclaredKind::Auto});
    return meta;
}

CausalGraph sem6_graph() {
    std::vector<std::string> nodes;
    for (const auto& v : kSem6Variables) nodes.emplace_back(v.name);
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& [edge, coeff] : sem6_coefficients()) edges.push_back(edge);
    return CausalGraph::from_edges(std::move(nodes), edges);
}

std::vector<VariableMeta> sem6_metadata() {
    std::vector<VariableMeta> meta;
    for (const auto& v : kSem6Variables) meta.push_back({v.name, v.description, DeclaredKind::Auto});
    return meta;
}

std::map<std::pair<std::string, std::string>, double> sem6_coefficients() {
    return {
        {{"S", "M1"}, 1.0}, {{"S", "M2"}, 0.8},  {{"S", "Y"}, 0.5}, {{"Z", "M1"}, 0.6},
        {{"Z", "W"}, 0.9},  {{"M1", "Y"}, 1.2},  {{"M2", "Y"}, -0.7}, {{"W", "Y"}, 0.4},
    };
}

Dataset generate_linear_gaussian(const CausalGraph& graph,
                                 const std::map<std::pair<std::string, std::string>, double>& coefficients,
                                 std::size_t rows, std::uint64_t seed, double noise_sigma) {
    if (rows == 0) throw ConfigError("generate_linear_gaussian: rows must be positive");
    if (noise_sigma < 0.0) throw ConfigError("generate_linear_gaussian: noise_sigma must be non-negative");
    for (const auto& [edge, coeff] : coefficients)
        if (!graph.has_node(edge.first) || !graph.has_node(edge.second) ||
            !graph.has_edge(edge.first, edge.second))
            throw ConfigError("generate_linear_gaussian: coefficient for non-edge " + edge.first + "->" +
                              edge.second);

    const int n = graph.node_count();
    std::vector<std::vector<double>> values(static_cast<std::size_t>(n),
                                            std::vector<double>(rows, 0.0));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (const int v : topological_order(graph)) {
        auto& column = values[static_cast<std::size_t>(v)];
        const auto& parents = graph.parents(v);
        if (parents.empty()) {
            for (std::size_t r = 0; r < rows; ++r) column[r] = gauss(rng);
            continue;
        }
        std::vector<double> beta(parents.size(), 0.0);
        for (std::size_t p = 0; p < parents.size(); ++p) {
            const auto it = coefficients.find({graph.name_of(parents[p]), graph.name_of(v)});
            if (it == coefficients.end())
                throw ConfigError("generate_linear_gaussian: missing coefficient for edge " +
                                  graph.name_of(parents[p]) + "->" + graph.name_of(v));
            beta[p] = it->second;
        }
        for (std::size_t r = 0; r < rows; ++r) {
            double sum = 0.0;
            for (std::size_t p = 0; p < parents.size(); ++p)
                sum += beta[p] * values[static_cast<std::size_t>(parents[p])][r];
            column[r] = sum + noise_sigma * gauss(rng);
        }
    }

    std::vector<Column> columns;
    columns.reserve(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
        Column c;
        c.name = graph.name_of(v);
        c.kind = ColumnKind::Continuous;
        c.values = std::move(values[static_cast<std::size_t>(v)]);
        columns.push_back(std::move(c));
    }
    return Dataset(std::move(columns));
}

CausalGraph random_dag(int nodes, int edges, std::uint64_t seed) {
    if (nodes < 2) throw ConfigError("random_dag: need at least 2 nodes");
    const long long max_edges = static_cast<long long>(nodes) * (nodes - 1) / 2;
    if (edges < 0 || edges > max_edges)
        throw ConfigError("random_dag: edge count " + std::to_string(edges) + " outside [0, " +
                          std::to_string(max_edges) + "]");

    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i) names.push_back("V" + std::to_string(i));

    // A random permutation fixes a topological order; edges are sampled
    // uniformly among the forward pairs of that order.
    std::mt19937_64 rng(seed);
    std::vector<int> order(static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i) order[static_cast<std::size_t>(i)] = i;
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(max_edges));
    for (int i = 0; i < nodes; ++i)
        for (int j = i + 1; j < nodes; ++j)
            pairs.emplace_back(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    std::shuffle(pairs.begin(), pairs.end(), rng);

    CausalGraph g(std::move(names));
    for (int e = 0; e < edges; ++e) g.add_edge_unchecked(pairs[static_cast<std::size_t>(e)].first,
                                                         pairs[static_cast<std::size_t>(e)].second);
    return g;
}

std::map<std::pair<std::string, std::string>, double> random_coefficients(const CausalGraph& graph,
                                                                          std::uint64_t seed, double lo,
                                                                          double hi, bool random_sign) {
    if (!(lo <= hi) || lo < 0.0) throw ConfigError("random_coefficients: need 0 <= lo <= hi");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> magnitude(lo, hi);
    std::uniform_int_distribution<int> sign(0, 1);

    std::map<std::pair<std::string, std::string>, double> out;
    for (const auto& [u, v] : graph.edges()) {
        double c = magnitude(rng);
        if (random_sign && sign(rng) == 1) c = -c;
        out[{graph.name_of(u), graph.name_of(v)}] = c;
    }
    return out;
}

std::vector<VariableMeta> generic_metadata(const CausalGraph& graph) {
    std::vector<VariableMeta> meta;
    for (const auto& name : graph.nodes())
        meta.push_back({name, "Synthetic variable " + name + ".", DeclaredKind::Auto});
    return meta;
}

void save_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset CSV: " + path.string());

    auto quote = [](const std::string& field) {
        if (field.find_first_of(",\"\n") == std::string::npos) return field;
        std::string quoted = "\"";
        for (const char c : field) {
            if (c == '"') quoted += "\"\"";
            else quoted += c;
        }
        quoted += "\"";
        return quoted;
    };

    for (int c = 0; c < data.column_count(); ++c) out << (c ? "," : "") << quote(data.column(c).name);
    out << "\n";
    std::ostringstream row;
    row.precision(17);
    for (std::size_t r = 0; r < data.row_count(); ++r) {
        row.str({});
        for (int c = 0; c < data.column_count(); ++c) {
            if (c) row << ',';
            const Column& col = data.column(c);
            if (col.kind == ColumnKind::Categorical)
                row << quote(col.levels[static_cast<std::size_t>(col.values[r])]);
            else
                row << col.values[r];
        }
        out << row.str() << "\n";
    }
    if (!out) throw IoError("failed writing dataset CSV: " + path.string());
}

}  // namespace causalkit
