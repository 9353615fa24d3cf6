#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "causalkit/graph.hpp"

namespace causalkit {

struct Confusion {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
};

struct EvalReport {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;       // edge Jaccard: tp / (tp + fp + fn)
    double nhd = 0.0;            // (fp + fn) / n^2
    double reference_nhd = 0.0;  // (predicted_edges + true_edges) / n^2
    double ratio = 0.0;          // nhd / reference_nhd, 0 when reference is 0
    long long predicted_edges = 0;
    long long true_edges = 0;
    bool pred_is_dag = false;
    bool truth_is_dag = false;
};

// Directed-edge confusion over off-diagonal entries. Matrices must be
// square, same shape, strictly 0/1, with a zero diagonal.
Confusion confusion(const AdjacencyMatrix& pred, const AdjacencyMatrix& truth);

// Full metric set. Node sets must match by name; order may differ (the truth
// graph is reindexed onto the prediction's order).
EvalReport evaluate(const CausalGraph& pred, const CausalGraph& truth);

nlohmann::ordered_json eval_report_to_json(const EvalReport& report);

// Aligned table, one row per labelled report.
std::string format_eval_table(const std::vector<std::pair<std::string, EvalReport>>& rows);

}  // namespace causalkit
