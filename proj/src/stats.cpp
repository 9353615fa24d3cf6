#include "causalkit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

#include "causalkit/errors.hpp"

namespace causalkit {

namespace {

// Marginals are derived from the joint histogram so that MI <= min(H) holds
// exactly and the normalized score cannot exceed 1.
double normalized_mi_from_bins(const std::vector<int>& bx, const std::vector<int>& by) {
    const std::size_t n = bx.size();
    if (n == 0) return 0.0;
    const int kx = *std::max_element(bx.begin(), bx.end()) + 1;
    const int ky = *std::max_element(by.begin(), by.end()) + 1;

    std::vector<double> joint(static_cast<std::size_t>(kx) * static_cast<std::size_t>(ky), 0.0);
    for (std::size_t r = 0; r < n; ++r)
        joint[static_cast<std::size_t>(bx[r]) * static_cast<std::size_t>(ky) + static_cast<std::size_t>(by[r])] += 1.0;

    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> px(static_cast<std::size_t>(kx), 0.0);
    std::vector<double> py(static_cast<std::size_t>(ky), 0.0);
    for (int i = 0; i < kx; ++i)
        for (int j = 0; j < ky; ++j) {
            const double p = joint[static_cast<std::size_t>(i) * static_cast<std::size_t>(ky) + static_cast<std::size_t>(j)] * inv_n;
            px[static_cast<std::size_t>(i)] += p;
            py[static_cast<std::size_t>(j)] += p;
        }

    double hx = 0.0;
    for (int i = 0; i < kx; ++i)
        if (px[static_cast<std::size_t>(i)] > 0.0) hx -= px[static_cast<std::size_t>(i)] * std::log(px[static_cast<std::size_t>(i)]);
    double hy = 0.0;
    for (int j = 0; j < ky; ++j)
        if (py[static_cast<std::size_t>(j)] > 0.0) hy -= py[static_cast<std::size_t>(j)] * std::log(py[static_cast<std::size_t>(j)]);

    const double hmin = std::min(hx, hy);
    if (hmin <= 0.0) return 0.0;

    double mi = 0.0;
    for (int i = 0; i < kx; ++i)
        for (int j = 0; j < ky; ++j) {
            const double p = joint[static_cast<std::size_t>(i) * static_cast<std::size_t>(ky) + static_cast<std::size_t>(j)] * inv_n;
            if (p > 0.0) mi += p * std::log(p / (px[static_cast<std::size_t>(i)] * py[static_cast<std::size_t>(j)]));
        }

    return std::clamp(mi / hmin, 0.0, 1.0);
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Population covariance matrix with a small ridge on the diagonal so the
// inverse exists even for collinear columns.
Eigen::MatrixXd ridged_covariance(const Dataset& d) {
    const int p = d.column_count();
    const int n = d.row_count();
    Eigen::MatrixXd x(n, p);
    for (int c = 0; c < p; ++c) {
        const auto& v = d.column(c).values;
        double mean = 0.0;
        for (int r = 0; r < n; ++r) mean += v[static_cast<std::size_t>(r)];
        mean /= static_cast<double>(n);
        for (int r = 0; r < n; ++r) x(r, c) = v[static_cast<std::size_t>(r)] - mean;
    }
    Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
    const double ridge = 1e-6 * cov.trace() / static_cast<double>(p);
    cov.diagonal().array() += ridge;
    return cov;
}

// |Pearson correlation|; 0 for zero-variance columns.
double abs_pearson(const Column& a, const Column& b) {
    const std::size_t n = a.values.size();
    if (n == 0) return 0.0;
    double ma = 0.0, mb = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        ma += a.values[r];
        mb += b.values[r];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const double da = a.values[r] - ma;
        const double db = b.values[r] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return clamp01(std::abs(sab / std::sqrt(saa * sbb)));
}

bool zero_variance(const Column& c) {
    for (const double v : c.values)
        if (v != c.values.front()) return false;
    return true;
}

// Full matrix of |partial correlations| from the precision matrix. Entries
// touching a zero-variance column are forced to 0.
Eigen::MatrixXd partial_correlation_matrix(const Dataset& d) {
    const int p = d.column_count();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p, p);
    if (p < 2 || d.row_count() == 0) return out;

    std::vector<bool> degenerate(static_cast<std::size_t>(p));
    for (int c = 0; c < p; ++c) degenerate[static_cast<std::size_t>(c)] = zero_variance(d.column(c));

    if (p < 3) {
        const double r = (degenerate[0] || degenerate[1]) ? 0.0 : abs_pearson(d.column(0), d.column(1));
        out(0, 1) = out(1, 0) = r;
        return out;
    }

    const Eigen::MatrixXd cov = ridged_covariance(d);
    const Eigen::MatrixXd prec = cov.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j) {
            double r = 0.0;
            if (!degenerate[static_cast<std::size_t>(i)] && !degenerate[static_cast<std::size_t>(j)]) {
                const double denom = std::sqrt(prec(i, i) * prec(j, j));
                if (denom > 0.0 && std::isfinite(denom)) r = clamp01(std::abs(-prec(i, j) / denom));
            }
            out(i, j) = out(j, i) = r;
        }
    return out;
}

}  // namespace

void StatCache::set(int x, int y, double mi, double pc) {
    mi_[flat(x, y)] = mi_[flat(y, x)] = mi;
    pc_[flat(x, y)] = pc_[flat(y, x)] = pc;
}

std::vector<int> discretize_column(const Column& col, int bins) {
    if (bins < 2) throw ConfigError("discretize_column: bins must be >= 2, got " + std::to_string(bins));
    const std::size_t n = col.values.size();
    std::vector<int> out(n, 0);
    if (n == 0) return out;

    if (col.kind == ColumnKind::Categorical) {
        for (std::size_t r = 0; r < n; ++r) out[r] = static_cast<int>(col.values[r]);
        return out;
    }

    // Equal-frequency cut points taken from the sorted sample; duplicates are
    // merged so heavily tied columns simply get fewer bins.
    std::vector<double> sorted(col.values);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    edges.reserve(static_cast<std::size_t>(bins) - 1);
    for (int k = 1; k < bins; ++k) {
        const std::size_t idx = static_cast<std::size_t>(k) * n / static_cast<std::size_t>(bins);
        edges.push_back(sorted[std::min(idx, n - 1)]);
    }
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    for (std::size_t r = 0; r < n; ++r)
        out[r] = static_cast<int>(std::upper_bound(edges.begin(), edges.end(), col.values[r]) - edges.begin());
    return out;
}

double mutual_information(const Dataset& d, int x, int y, int bins) {
    if (x == y) throw ConfigError("mutual_information: identical columns requested");
    return normalized_mi_from_bins(discretize_column(d.column(x), bins), discretize_column(d.column(y), bins));
}

double mutual_information(const Dataset& d, const std::string& x, const std::string& y, int bins) {
    return mutual_information(d, d.index_of(x), d.index_of(y), bins);
}

double partial_correlation(const Dataset& d, int x, int y) {
    if (x == y) throw ConfigError("partial_correlation: identical columns requested");
    d.column(x);
    d.column(y);
    return partial_correlation_matrix(d)(x, y);
}

double partial_correlation(const Dataset& d, const std::string& x, const std::string& y) {
    return partial_correlation(d, d.index_of(x), d.index_of(y));
}

double stat_score(const StatCache& cache, int x, int y) {
    return 0.5 * (cache.mi(x, y) + cache.pc(x, y));
}

StatCache build_stat_cache(const Dataset& d, const StatOptions& opts) {
    const int p = d.column_count();
    StatCache cache(p);
    if (p < 2) return cache;

    std::vector<std::vector<int>> binned(static_cast<std::size_t>(p));
    for (int c = 0; c < p; ++c) binned[static_cast<std::size_t>(c)] = discretize_column(d.column(c), opts.bins);

    const Eigen::MatrixXd pcm = partial_correlation_matrix(d);

    // Flattened upper-triangle pair list; every pair writes its own slot, so
    // the parallel schedule cannot affect the result.
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(p) * static_cast<std::size_t>(p - 1) / 2);
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j) pairs.emplace_back(i, j);

    std::vector<double> mi(pairs.size(), 0.0);
    const auto count = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic) if (opts.parallel)
    for (std::ptrdiff_t k = 0; k < count; ++k) {
        const auto [i, j] = pairs[static_cast<std::size_t>(k)];
        mi[static_cast<std::size_t>(k)] =
            normalized_mi_from_bins(binned[static_cast<std::size_t>(i)], binned[static_cast<std::size_t>(j)]);
    }

    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto [i, j] = pairs[k];
        cache.set(i, j, mi[k], pcm(i, j));
    }
    return cache;
}

StatCache build_stat_cache_reference(const Dataset& d, const StatOptions& opts) {
    const int p = d.column_count();
    StatCache cache(p);
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j)
            cache.set(i, j, mutual_information(d, i, j, opts.bins), partial_correlation(d, i, j));
    return cache;
}

}  // namespace causalkit
