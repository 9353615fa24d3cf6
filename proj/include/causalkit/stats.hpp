#pragma once

#include <string>
#include <vector>

#include "causalkit/dataset.hpp"

namespace causalkit {

// Pairwise statistical evidence for every column pair: normalized mutual
// information and absolute partial correlation, both in [0, 1]. Symmetric;
// the diagonal is unused and stays zero.
class StatCache {
public:
    StatCache() = default;
    explicit StatCache(int columns)
        : n_(columns),
          mi_(static_cast<std::size_t>(columns) * static_cast<std::size_t>(columns), 0.0),
          pc_(mi_.size(), 0.0) {}

    int column_count() const { return n_; }
    double mi(int x, int y) const { return mi_[flat(x, y)]; }
    double pc(int x, int y) const { return pc_[flat(x, y)]; }
    void set(int x, int y, double mi, double pc);

private:
    std::size_t flat(int x, int y) const {
        return static_cast<std::size_t>(x) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(y);
    }

    int n_ = 0;
    std::vector<double> mi_;
    std::vector<double> pc_;
};

struct StatOptions {
    int bins = 8;          // equal-frequency bins for continuous columns
    bool parallel = true;  // OpenMP over pairs; results are schedule-independent
};

// Deterministic equal-frequency bin assignment for one column. Categorical
// columns pass through their level codes. Exposed for tests.
std::vector<int> discretize_column(const Column& col, int bins);

// Plug-in mutual information on the discretized pair, normalized by the
// smaller marginal entropy into [0, 1]; 0 whenever either entropy is 0.
double mutual_information(const Dataset& d, int x, int y, int bins = 8);
double mutual_information(const Dataset& d, const std::string& x, const std::string& y, int bins = 8);

// Absolute partial correlation of x and y given all remaining columns, from
// the ridge-regularized inverse covariance. Falls back to |Pearson| when
// fewer than three columns exist; zero-variance columns yield 0.
double partial_correlation(const Dataset& d, int x, int y);
double partial_correlation(const Dataset& d, const std::string& x, const std::string& y);

double stat_score(const StatCache& cache, int x, int y);

// Fills all n(n-1)/2 pairs. The parallel path and the serial path produce
// bit-identical caches; build_stat_cache_reference is the independent
// per-pair implementation kept for testing and benchmarking.
StatCache build_stat_cache(const Dataset& d, const StatOptions& opts = {});
StatCache build_stat_cache_reference(const Dataset& d, const StatOptions& opts = {});

}  // namespace causalkit
