#include "causalkit/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <Eigen/Dense>

#include "causalkit/errors.hpp"

namespace causalkit {

namespace {

// Maximal simple paths out of `start`: extend until no unvisited child
// remains (or the cap is hit). Counts paths of length >= 1 whose terminal
// node is not the outcome.
void count_spurious_from(const CausalGraph& g, int start, int outcome, int max_len, long long& count) {
    std::vector<int> path{start};
    std::vector<char> on_path(static_cast<std::size_t>(g.node_count()), 0);
    on_path[static_cast<std::size_t>(start)] = 1;

    auto dfs = [&](auto&& self, int u) -> void {
        bool extended = false;
        if (max_len < 0 || static_cast<int>(path.size()) - 1 < max_len) {
            for (const int v : g.children(u)) {
                if (on_path[static_cast<std::size_t>(v)]) continue;
                extended = true;
                path.push_back(v);
                on_path[static_cast<std::size_t>(v)] = 1;
                self(self, v);
                on_path[static_cast<std::size_t>(v)] = 0;
                path.pop_back();
            }
        }
        if (!extended && path.size() >= 2 && u != outcome) ++count;
    };
    dfs(dfs, start);
}

double population_variance(const Column& col) {
    const std::size_t n = col.values.size();
    if (n == 0) return 0.0;
    double mean = 0.0;
    for (const double v : col.values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (const double v : col.values) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(n);
}

double path_coefficient_product(const CausalGraph& g, const SemFit& fit, const CausalPath& path) {
    double product = 1.0;
    for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
        const auto key = std::make_pair(g.name_of(path.nodes[i]), g.name_of(path.nodes[i + 1]));
        const auto it = fit.edge_coefficients.find(key);
        if (it == fit.edge_coefficients.end())
            throw ConfigError("decompose_effects: fit has no coefficient for edge " + key.first + "->" +
                              key.second);
        product *= it->second;
    }
    return product;
}

EffectDecomposition decompose_one(const CausalGraph& graph, const SemFit& fit, const std::string& s,
                                  const std::string& outcome, int max_path_len, double var_y) {
    EffectDecomposition eff;
    eff.attribute = s;
    eff.direct_paths = graph.has_edge(s, outcome) ? 1 : 0;
    if (eff.direct_paths) {
        const auto it = fit.edge_coefficients.find(std::make_pair(s, outcome));
        if (it == fit.edge_coefficients.end())
            throw ConfigError("decompose_effects: fit has no coefficient for edge " + s + "->" + outcome);
        eff.de = it->second;
    }
    for (const auto& path :
         enumerate_simple_paths(graph, graph.index_of(s), graph.index_of(outcome), max_path_len)) {
        if (path.length() < 2) continue;
        ++eff.indirect_paths;
        eff.ie += path_coefficient_product(graph, fit, path);
    }
    eff.te = eff.de + eff.ie;
    eff.c_bias = std::abs(eff.te) / var_y;
    return eff;
}

}  // namespace

void FairnessSpec::validate(const CausalGraph& graph) const {
    if (sensitive.empty()) throw ConfigError("FairnessSpec: at least one sensitive attribute is required");
    if (!graph.has_node(outcome)) throw ConfigError("FairnessSpec: unknown outcome '" + outcome + "'");
    for (const auto& s : sensitive) {
        if (!graph.has_node(s)) throw ConfigError("FairnessSpec: unknown sensitive attribute '" + s + "'");
        if (s == outcome)
            throw ConfigError("FairnessSpec: outcome '" + outcome + "' cannot also be sensitive");
    }
    std::set<std::string> seen(sensitive.begin(), sensitive.end());
    if (seen.size() != sensitive.size())
        throw ConfigError("FairnessSpec: duplicate sensitive attribute");
}

PathCensus classify_paths(const CausalGraph& graph, const FairnessSpec& spec) {
    spec.validate(graph);
    PathCensus census;
    const int outcome = graph.index_of(spec.outcome);
    for (const auto& s : spec.sensitive) {
        const int src = graph.index_of(s);
        if (graph.has_edge(src, outcome)) ++census.direct;
        for (const auto& path : enumerate_simple_paths(graph, src, outcome, spec.max_path_len))
            if (path.length() >= 2) ++census.indirect;
        count_spurious_from(graph, src, outcome, spec.max_path_len, census.spurious);
    }
    return census;
}

SemFit fit_linear_sem(const CausalGraph& graph, const Dataset& data) {
    if (!is_acyclic(graph)) throw GraphError("fit_linear_sem: graph must be acyclic");
    for (const auto& name : graph.nodes())
        if (!data.has_column(name))
            throw ConfigError("fit_linear_sem: dataset is missing column '" + name + "'");
    const auto n = static_cast<Eigen::Index>(data.row_count());
    if (n == 0) throw ConfigError("fit_linear_sem: dataset is empty");

    const int node_count = graph.node_count();
    struct NodeFit {
        bool has_parents = false;
        bool ridged = false;
        double r2 = 0.0;
        std::vector<double> coefficients;  // one per parent, parent order
    };
    std::vector<NodeFit> fits(static_cast<std::size_t>(node_count));

    // Per-node regressions are independent; each iteration writes only its
    // own slot, so the result does not depend on the schedule.
#pragma omp parallel for schedule(dynamic)
    for (int v = 0; v < node_count; ++v) {
        const auto& parents = graph.parents(v);
        if (parents.empty()) continue;
        NodeFit& slot = fits[static_cast<std::size_t>(v)];
        slot.has_parents = true;

        const auto k = static_cast<Eigen::Index>(parents.size());
        Eigen::MatrixXd x(n, k + 1);
        x.col(0).setOnes();
        for (Eigen::Index c = 0; c < k; ++c) {
            const auto& values = data.column(graph.name_of(parents[static_cast<std::size_t>(c)])).values;
            for (Eigen::Index r = 0; r < n; ++r) x(r, c + 1) = values[static_cast<std::size_t>(r)];
        }
        Eigen::VectorXd y(n);
        {
            const auto& values = data.column(graph.name_of(v)).values;
            for (Eigen::Index r = 0; r < n; ++r) y(r) = values[static_cast<std::size_t>(r)];
        }

        Eigen::VectorXd beta;
        const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
        if (qr.rank() < k + 1) {
            slot.ridged = true;
            Eigen::MatrixXd gram = x.transpose() * x;
            gram.diagonal().array() += 1e-6;
            beta = gram.ldlt().solve(x.transpose() * y);
        } else {
            beta = qr.solve(y);
        }

        const Eigen::VectorXd residual = y - x * beta;
        const double ss_res = residual.squaredNorm();
        const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
        slot.r2 = ss_tot <= 0.0 ? 0.0 : std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
        slot.coefficients.resize(parents.size());
        for (Eigen::Index c = 0; c < k; ++c) slot.coefficients[static_cast<std::size_t>(c)] = beta(c + 1);
    }

    SemFit fit;
    for (int v = 0; v < node_count; ++v) {
        const NodeFit& slot = fits[static_cast<std::size_t>(v)];
        if (!slot.has_parents) continue;
        const auto& parents = graph.parents(v);
        for (std::size_t c = 0; c < parents.size(); ++c)
            fit.edge_coefficients[std::make_pair(graph.name_of(parents[c]), graph.name_of(v))] =
                slot.coefficients[c];
        fit.node_r2[graph.name_of(v)] = slot.r2;
        if (slot.ridged) fit.ridged.insert(graph.name_of(v));
    }
    return fit;
}

std::vector<EffectDecomposition> decompose_effects(const CausalGraph& graph, const SemFit& fit,
                                                   const FairnessSpec& spec, const Dataset& data) {
    spec.validate(graph);
    const double var_y = population_variance(data.column(spec.outcome));
    if (var_y <= 0.0)
        throw ConfigError("decompose_effects: outcome '" + spec.outcome +
                          "' has zero variance; bias contribution is undefined");

    std::vector<EffectDecomposition> out;
    out.reserve(spec.sensitive.size());
    for (const auto& s : spec.sensitive)
        out.push_back(decompose_one(graph, fit, s, spec.outcome, spec.max_path_len, var_y));
    return out;
}

FairnessReport analyze_fairness(const CausalGraph& graph, const Dataset& data, const FairnessSpec& spec) {
    spec.validate(graph);

    FairnessReport report;
    report.census = classify_paths(graph, spec);
    report.fit = fit_linear_sem(graph, data);
    report.outcome_variance = population_variance(data.column(spec.outcome));
    report.per_attribute = decompose_effects(graph, report.fit, spec, data);

    for (const auto& eff : report.per_attribute) report.aggregate_te += eff.te;
    report.aggregate_c_bias = std::abs(report.aggregate_te) / report.outcome_variance;

    if (spec.one_hot) {
        for (const auto& s : spec.sensitive) {
            const Column& col = data.column(s);
            if (col.kind != ColumnKind::Categorical) {
                report.warnings.push_back("one-hot mode: '" + s + "' is continuous; level expansion skipped");
                continue;
            }
            for (std::size_t level = 0; level < col.levels.size(); ++level) {
                // Re-fit with the sensitive column replaced by this level's
                // indicator; the graph is unchanged.
                std::vector<Column> columns;
                for (int c = 0; c < data.column_count(); ++c) columns.push_back(data.column(c));
                Column& target = columns[static_cast<std::size_t>(data.index_of(s))];
                for (auto& v : target.values) v = (static_cast<std::size_t>(v) == level) ? 1.0 : 0.0;
                target.kind = ColumnKind::Continuous;
                target.levels.clear();
                const Dataset expanded(std::move(columns));

                const SemFit fit = fit_linear_sem(graph, expanded);
                EffectDecomposition eff = decompose_one(graph, fit, s, spec.outcome, spec.max_path_len,
                                                        report.outcome_variance);
                eff.attribute = s + "=" + col.levels[level];
                report.per_level.push_back(std::move(eff));
            }
        }
    }
    return report;
}

nlohmann::ordered_json fairness_report_to_json(const FairnessReport& report) {
    nlohmann::ordered_json j;
    j["census"] = {{"direct", report.census.direct},
                   {"indirect", report.census.indirect},
                   {"spurious", report.census.spurious}};
    auto effect_json = [](const EffectDecomposition& e) {
        return nlohmann::ordered_json{{"attribute", e.attribute}, {"direct_paths", e.direct_paths},
                                      {"indirect_paths", e.indirect_paths}, {"de", e.de},
                                      {"ie", e.ie},         {"te", e.te},
                                      {"c_bias", e.c_bias}};
    };
    j["per_attribute"] = nlohmann::ordered_json::array();
    for (const auto& e : report.per_attribute) j["per_attribute"].push_back(effect_json(e));
    if (!report.per_level.empty()) {
        j["per_level"] = nlohmann::ordered_json::array();
        for (const auto& e : report.per_level) j["per_level"].push_back(effect_json(e));
    }
    j["aggregate_te"] = report.aggregate_te;
    j["aggregate_c_bias"] = report.aggregate_c_bias;
    j["outcome_variance"] = report.outcome_variance;
    j["node_r2"] = report.fit.node_r2;
    j["ridged_nodes"] = report.fit.ridged;
    j["warnings"] = report.warnings;
    return j;
}

std::string format_fairness_table(const FairnessReport& report) {
    std::size_t label_width = 9;
    for (const auto& e : report.per_attribute) label_width = std::max(label_width, e.attribute.size());
    for (const auto& e : report.per_level) label_width = std::max(label_width, e.attribute.size());

    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof(buf), "paths: direct %lld, indirect %lld, spurious %lld\n",
                  report.census.direct, report.census.indirect, report.census.spurious);
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-*s  %6s %8s %9s %9s %9s %9s\n", static_cast<int>(label_width),
                  "attribute", "direct", "indirect", "DE", "IE", "TE", "C_bias");
    out += buf;
    auto row = [&](const EffectDecomposition& e) {
        std::snprintf(buf, sizeof(buf), "%-*s  %6lld %8lld %9.4f %9.4f %9.4f %9.4f\n",
                      static_cast<int>(label_width), e.attribute.c_str(), e.direct_paths, e.indirect_paths,
                      e.de, e.ie, e.te, e.c_bias);
        out += buf;
    };
    for (const auto& e : report.per_attribute) row(e);
    for (const auto& e : report.per_level) row(e);
    std::snprintf(buf, sizeof(buf), "%-*s  %6s %8s %9s %9s %9.4f %9.4f\n", static_cast<int>(label_width),
                  "aggregate", "", "", "", "", report.aggregate_te, report.aggregate_c_bias);
    out += buf;
    return out;
}

}  // namespace causalkit
