// Benchmark: OpenMP stat-cache build vs the serial reference implementation.
// The two paths share every numeric step, so besides timing, this checks the
// caches are bit-identical.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>

#include "causalkit/fixtures.hpp"
#include "causalkit/seeds.hpp"
#include "causalkit/stats.hpp"

using namespace causalkit;

namespace {

double time_seconds(const Dataset& data, const StatOptions& opts, bool reference, int reps) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        const StatCache cache =
            reference ? build_stat_cache_reference(data, opts) : build_stat_cache(data, opts);
        const auto t1 = std::chrono::steady_clock::now();
        (void)cache;
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
}

bool same_bits(double x, double y) {
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    std::memcpy(&a, &x, sizeof x);
    std::memcpy(&b, &y, sizeof y);
    return a == b;
}

bool bit_identical(const StatCache& a, const StatCache& b) {
    if (a.column_count() != b.column_count()) return false;
    for (int i = 0; i < a.column_count(); ++i)
        for (int j = 0; j < a.column_count(); ++j) {
            if (i == j) continue;
            if (!same_bits(a.mi(i, j), b.mi(i, j)) || !same_bits(a.pc(i, j), b.pc(i, j))) return false;
        }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    int nodes = 40;
    int rows = 2000;
    int reps = 3;
    for (int i = 1; i + 1 < argc; i += 2) {
        if (!std::strcmp(argv[i], "--nodes")) nodes = std::stoi(argv[i + 1]);
        else if (!std::strcmp(argv[i], "--rows")) rows = std::stoi(argv[i + 1]);
        else if (!std::strcmp(argv[i], "--reps")) reps = std::stoi(argv[i + 1]);
    }

    const std::uint64_t seed = 20240601;
    const CausalGraph graph = random_dag(nodes, nodes * 3 / 2, derive_seed(seed, "bench-graph"));
    const auto coefficients = random_coefficients(graph, derive_seed(seed, "bench-coefficients"));
    const Dataset data = generate_linear_gaussian(graph, coefficients, static_cast<std::size_t>(rows),
                                                  derive_seed(seed, "bench-data"));

    StatOptions opts;
    std::printf("stat cache: %d nodes (%d pairs), %d rows, best of %d\n", nodes,
                nodes * (nodes - 1) / 2, rows, reps);

    opts.parallel = false;
    const double serial = time_seconds(data, opts, /*reference=*/true, reps);
    std::printf("  serial reference : %8.4f s\n", serial);

    opts.parallel = true;
    const double parallel = time_seconds(data, opts, /*reference=*/false, reps);
    std::printf("  openmp kernel    : %8.4f s  (speedup %.2fx)\n", parallel, serial / parallel);

    const StatCache a = build_stat_cache_reference(data, {opts.bins, false});
    const StatCache b = build_stat_cache(data, {opts.bins, true});
    const bool same = bit_identical(a, b);
    std::printf("  bit-identical    : %s\n", same ? "yes" : "NO");
    return same ? 0 : 1;
}
