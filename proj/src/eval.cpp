#include "causalkit/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "causalkit/errors.hpp"

namespace causalkit {

namespace {

void check_matrix(const AdjacencyMatrix& a, const char* label) {
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i].size() != n)
            throw ConfigError(std::string("confusion: ") + label + " matrix is not square");
        for (std::size_t j = 0; j < n; ++j) {
            if (a[i][j] != 0 && a[i][j] != 1)
                throw ConfigError(std::string("confusion: ") + label + " matrix entries must be 0 or 1");
            if (i == j && a[i][j] != 0)
                throw ConfigError(std::string("confusion: ") + label + " matrix must have a zero diagonal");
        }
    }
}

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

Confusion confusion(const AdjacencyMatrix& pred, const AdjacencyMatrix& truth) {
    if (pred.size() != truth.size())
        throw ConfigError("confusion: matrices differ in size (" + std::to_string(pred.size()) + " vs " +
                          std::to_string(truth.size()) + ")");
    check_matrix(pred, "pred");
    check_matrix(truth, "truth");

    Confusion c;
    const std::size_t n = pred.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            if (pred[i][j] == 1 && truth[i][j] == 1) ++c.tp;
            if (pred[i][j] == 1 && truth[i][j] == 0) ++c.fp;
            if (pred[i][j] == 0 && truth[i][j] == 1) ++c.fn;
        }
    return c;
}

EvalReport evaluate(const CausalGraph& pred, const CausalGraph& truth) {
    const std::set<std::string> pred_nodes(pred.nodes().begin(), pred.nodes().end());
    const std::set<std::string> truth_nodes(truth.nodes().begin(), truth.nodes().end());
    if (pred_nodes != truth_nodes) {
        std::string diff;
        for (const auto& n : pred_nodes)
            if (!truth_nodes.count(n)) diff += " +" + n;
        for (const auto& n : truth_nodes)
            if (!pred_nodes.count(n)) diff += " -" + n;
        throw ConfigError("evaluate: node sets differ (+ only in prediction, - only in truth):" + diff);
    }

    // Reindex the truth graph onto the prediction's node order.
    const int n = pred.node_count();
    AdjacencyMatrix truth_a(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), 0));
    for (const auto& [u, v] : truth.edges())
        truth_a[static_cast<std::size_t>(pred.index_of(truth.name_of(u)))]
               [static_cast<std::size_t>(pred.index_of(truth.name_of(v)))] = 1;

    const Confusion c = confusion(to_adjacency(pred), truth_a);

    EvalReport r;
    r.tp = c.tp;
    r.fp = c.fp;
    r.fn = c.fn;
    r.predicted_edges = pred.edge_count();
    r.true_edges = truth.edge_count();
    r.precision = safe_div(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
    r.recall = safe_div(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
    r.f1 = safe_div(2.0 * r.precision * r.recall, r.precision + r.recall);
    r.accuracy = safe_div(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp + c.fn));
    const double nn = static_cast<double>(n) * static_cast<double>(n);
    r.nhd = static_cast<double>(c.fp + c.fn) / nn;
    r.reference_nhd = static_cast<double>(r.predicted_edges + r.true_edges) / nn;
    r.ratio = safe_div(r.nhd, r.reference_nhd);
    r.pred_is_dag = is_acyclic(pred);
    r.truth_is_dag = is_acyclic(truth);
    return r;
}

nlohmann::ordered_json eval_report_to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["tp"] = r.tp;
    j["fp"] = r.fp;
    j["fn"] = r.fn;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["accuracy"] = r.accuracy;
    j["nhd"] = r.nhd;
    j["reference_nhd"] = r.reference_nhd;
    j["ratio"] = r.ratio;
    j["predicted_edges"] = r.predicted_edges;
    j["true_edges"] = r.true_edges;
    j["pred_is_dag"] = r.pred_is_dag;
    j["truth_is_dag"] = r.truth_is_dag;
    return j;
}

std::string format_eval_table(const std::vector<std::pair<std::string, EvalReport>>& rows) {
    std::size_t label_width = 6;
    for (const auto& [label, _] : rows) label_width = std::max(label_width, label.size());

    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof(buf), "%-*s  %8s %9s %6s %9s %7s %6s %9s %6s\n",
                  static_cast<int>(label_width), "method", "nhd", "ref_nhd", "ratio", "precision",
                  "recall", "f1", "accuracy", "edges");
    out += buf;
    for (const auto& [label, r] : rows) {
        std::snprintf(buf, sizeof(buf), "%-*s  %8.3f %9.3f %6.3f %9.3f %7.3f %6.3f %9.3f %6lld\n",
                      static_cast<int>(label_width), label.c_str(), r.nhd, r.reference_nhd, r.ratio,
                      r.precision, r.recall, r.f1, r.accuracy, r.predicted_edges);
        out += buf;
    }
    return out;
}

}  // namespace causalkit
