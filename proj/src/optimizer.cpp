#include "causalkit/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "causalkit/seeds.hpp"
#include "causalkit/version.hpp"

namespace causalkit {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kHaltonBases[SearchSpace::kDims] = {2, 3, 5, 7, 11};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double affine(double t, const Range& r) { return r.lo + t * (r.hi - r.lo); }

double inverse_affine(double v, const Range& r) {
    if (r.hi == r.lo) return 0.0;
    return clamp01((v - r.lo) / (r.hi - r.lo));
}

// --- GP surrogate ---

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

struct GpModel {
    Eigen::MatrixXd x;      // n x d training inputs
    Eigen::VectorXd alpha;  // K^-1 y
    Eigen::LLT<Eigen::MatrixXd> llt;
    double length_scale = 0.3;
    double noise = 1e-6;
    double y_mean = 0.0;
    double y_scale = 1.0;
    double best_standardized = 0.0;
};

Eigen::MatrixXd se_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double length_scale) {
    const Eigen::Index na = a.rows(), nb = b.rows();
    Eigen::MatrixXd k(na, nb);
    const double inv = 1.0 / (2.0 * length_scale * length_scale);
    for (Eigen::Index i = 0; i < na; ++i)
        for (Eigen::Index j = 0; j < nb; ++j)
            k(i, j) = std::exp(-(a.row(i) - b.row(j)).squaredNorm() * inv);
    return k;
}

// Hyperparameters by maximum marginal likelihood over a small grid; the
// observation noise floor keeps the solve stable on noiseless objectives.
GpModel fit_gp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y_raw) {
    const Eigen::Index n = x.rows();
    GpModel model;
    model.x = x;
    model.y_mean = y_raw.mean();
    const double variance = (y_raw.array() - model.y_mean).square().sum() / static_cast<double>(n);
    model.y_scale = variance > 0.0 ? std::sqrt(variance) : 1.0;
    const Eigen::VectorXd y = (y_raw.array() - model.y_mean) / model.y_scale;

    const double length_grid[] = {0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.2, 2.0};
    const double noise_grid[] = {1e-6, 1e-4, 1e-2};

    double best_lml = -std::numeric_limits<double>::infinity();
    for (const double ls : length_grid) {
        const Eigen::MatrixXd k_base = se_kernel(x, x, ls);
        for (const double noise : noise_grid) {
            Eigen::MatrixXd k = k_base;
            k.diagonal().array() += noise + 1e-6;
            const Eigen::LLT<Eigen::MatrixXd> llt(k);
            if (llt.info() != Eigen::Success) continue;
            const Eigen::VectorXd alpha = llt.solve(y);
            double log_det = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(llt.matrixL()(i, i));
            const double lml = -0.5 * y.dot(alpha) - log_det -
                               0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
            if (lml > best_lml) {
                best_lml = lml;
                model.length_scale = ls;
                model.noise = noise;
                model.llt = llt;
                model.alpha = alpha;
            }
        }
    }
    model.best_standardized = y.maxCoeff();
    return model;
}

double expected_improvement(const GpModel& model, const Eigen::RowVectorXd& candidate) {
    const Eigen::MatrixXd k_star = se_kernel(model.x, candidate, model.length_scale);
    const double mu = k_star.col(0).dot(model.alpha);
    const Eigen::VectorXd v = model.llt.matrixL().solve(k_star.col(0));
    const double var = std::max(1.0 + model.noise - v.squaredNorm(), 0.0);
    const double sigma = std::sqrt(var);
    const double gap = mu - model.best_standardized;
    if (sigma <= 1e-12) return std::max(gap, 0.0);
    const double z = gap / sigma;
    return gap * normal_cdf(z) + sigma * normal_pdf(z);
}

// --- persistence helpers ---

nlohmann::ordered_json config_to_json(const DiscoveryConfig& c) {
    nlohmann::ordered_json j;
    j["weights"] = {{"w_stat", c.weights.w_stat}, {"w_conf", c.weights.w_conf}, {"w_hist", c.weights.w_hist}};
    j["score_threshold"] = c.score_threshold;
    j["max_iterations"] = c.max_iterations;
    j["temperature"] = c.temperature;
    j["seed"] = c.seed;
    j["requery"] = c.requery;
    j["stat_bins"] = c.stat_bins;
    j["token_budget"] = c.token_budget;
    return j;
}

DiscoveryConfig config_from_json(const nlohmann::json& j) {
    DiscoveryConfig c;
    c.weights.w_stat = j.at("weights").at("w_stat").get<double>();
    c.weights.w_conf = j.at("weights").at("w_conf").get<double>();
    c.weights.w_hist = j.at("weights").at("w_hist").get<double>();
    c.score_threshold = j.at("score_threshold").get<double>();
    c.max_iterations = j.at("max_iterations").get<int>();
    c.temperature = j.at("temperature").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.requery = j.at("requery").get<bool>();
    c.stat_bins = j.at("stat_bins").get<int>();
    c.token_budget = j.at("token_budget").get<int>();
    return c;
}

nlohmann::ordered_json trial_to_json(const TrialRecord& t) {
    nlohmann::ordered_json j;
    j["id"] = t.id;
    j["chunk"] = t.chunk;
    j["point"] = t.point;
    j["config"] = config_to_json(t.config);
    j["objective"] = t.objective;
    j["eval"] = eval_report_to_json(t.eval_report);
    j["error"] = t.error;
    return j;
}

TrialRecord trial_from_json(const nlohmann::json& j) {
    TrialRecord t;
    t.id = j.at("id").get<int>();
    t.chunk = j.at("chunk").get<int>();
    t.point = j.at("point").get<std::vector<double>>();
    t.config = config_from_json(j.at("config"));
    t.objective = j.at("objective").get<double>();
    const auto& e = j.at("eval");
    t.eval_report.tp = e.at("tp").get<long long>();
    t.eval_report.fp = e.at("fp").get<long long>();
    t.eval_report.fn = e.at("fn").get<long long>();
    t.eval_report.precision = e.at("precision").get<double>();
    t.eval_report.recall = e.at("recall").get<double>();
    t.eval_report.f1 = e.at("f1").get<double>();
    t.eval_report.accuracy = e.at("accuracy").get<double>();
    t.eval_report.nhd = e.at("nhd").get<double>();
    t.eval_report.reference_nhd = e.at("reference_nhd").get<double>();
    t.eval_report.ratio = e.at("ratio").get<double>();
    t.eval_report.predicted_edges = e.at("predicted_edges").get<long long>();
    t.eval_report.true_edges = e.at("true_edges").get<long long>();
    t.eval_report.pred_is_dag = e.at("pred_is_dag").get<bool>();
    t.eval_report.truth_is_dag = e.at("truth_is_dag").get<bool>();
    t.error = j.at("error").get<std::string>();
    return t;
}

nlohmann::ordered_json space_to_json(const SearchSpace& s) {
    nlohmann::ordered_json j;
    j["score_threshold"] = {{"lo", s.score_threshold.lo}, {"hi", s.score_threshold.hi}};
    j["temperature"] = {{"lo", s.temperature.lo}, {"hi", s.temperature.hi}};
    j["max_iterations"] = {{"lo", s.max_iterations.lo}, {"hi", s.max_iterations.hi}};
    return j;
}

std::vector<TrialRecord> load_trials(const fs::path& path) {
    std::vector<TrialRecord> records;
    std::ifstream in(path);
    if (!in) return records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(line);
            records.push_back(trial_from_json(parsed));
        } catch (const nlohmann::json::exception& e) {
            throw IoError("corrupt trial log " + path.string() + " at line " + std::to_string(line_no) +
                          ": " + e.what());
        }
    }
    for (std::size_t i = 0; i < records.size(); ++i)
        if (records[i].id != static_cast<int>(i))
            throw IoError("corrupt trial log " + path.string() + ": trial ids are not dense (line " +
                          std::to_string(i + 1) + " has id " + std::to_string(records[i].id) + ")");
    return records;
}

void write_top_json(const fs::path& dir, const std::vector<TrialRecord>& records) {
    nlohmann::ordered_json j;
    j["completed"] = records.size();
    j["top"] = nlohmann::ordered_json::array();
    for (const auto& t : top_trials(records, 5)) j["top"].push_back(trial_to_json(t));
    std::ofstream out(dir / "top.json");
    if (!out) throw IoError("cannot write " + (dir / "top.json").string());
    out << j.dump(2) << "\n";
}

void write_trials_csv(const fs::path& dir, const std::vector<TrialRecord>& records) {
    std::ofstream out(dir / "trials.csv");
    if (!out) throw IoError("cannot write " + (dir / "trials.csv").string());
    out << "id,chunk,w_stat,w_conf,w_hist,score_threshold,temperature,max_iterations,objective,error\n";
    for (const auto& t : records) {
        std::ostringstream row;
        row.precision(17);
        row << t.id << ',' << t.chunk << ',' << t.config.weights.w_stat << ',' << t.config.weights.w_conf
            << ',' << t.config.weights.w_hist << ',' << t.config.score_threshold << ','
            << t.config.temperature << ',' << t.config.max_iterations << ',' << t.objective << ','
            << (t.error.empty() ? "" : "1") << "\n";
        out << row.str();
    }
}

}  // namespace

SearchSpace SearchSpace::child_preset() { return SearchSpace{}; }

SearchSpace SearchSpace::neuropathic_preset() {
    SearchSpace s;
    s.score_threshold = {0.1, 0.5};
    s.temperature = {0.1, 0.3};
    s.max_iterations = {200, 500};
    return s;
}

void SearchSpace::validate() const {
    if (score_threshold.lo > score_threshold.hi || score_threshold.lo < 0.0)
        throw ConfigError("SearchSpace: invalid score_threshold range");
    if (temperature.lo > temperature.hi) throw ConfigError("SearchSpace: invalid temperature range");
    if (max_iterations.lo > max_iterations.hi || max_iterations.lo < 1)
        throw ConfigError("SearchSpace: invalid max_iterations range");
}

std::vector<double> encode_config(const DiscoveryConfig& config, const SearchSpace& space) {
    space.validate();
    config.weights.validate();
    std::vector<double> point(SearchSpace::kDims);
    point[0] = clamp01(config.weights.w_stat);
    point[1] = clamp01(config.weights.w_stat + config.weights.w_conf);
    point[2] = inverse_affine(config.score_threshold, space.score_threshold);
    point[3] = inverse_affine(config.temperature, space.temperature);
    point[4] = space.max_iterations.hi == space.max_iterations.lo
                   ? 0.0
                   : clamp01(static_cast<double>(config.max_iterations - space.max_iterations.lo) /
                             static_cast<double>(space.max_iterations.hi - space.max_iterations.lo));
    return point;
}

DiscoveryConfig decode_point(const std::vector<double>& point, const SearchSpace& space) {
    space.validate();
    if (point.size() != SearchSpace::kDims)
        throw ConfigError("decode_point: expected " + std::to_string(SearchSpace::kDims) +
                          " coordinates, got " + std::to_string(point.size()));
    const double a = clamp01(point[0]);
    const double b = clamp01(point[1]);
    const double u1 = std::min(a, b);
    const double u2 = std::max(a, b);

    DiscoveryConfig config;
    config.weights.w_stat = u1;
    config.weights.w_conf = u2 - u1;
    config.weights.w_hist = 1.0 - u2;
    config.score_threshold = affine(clamp01(point[2]), space.score_threshold);
    config.temperature = affine(clamp01(point[3]), space.temperature);
    config.max_iterations =
        space.max_iterations.lo +
        static_cast<int>(std::lround(clamp01(point[4]) *
                                     static_cast<double>(space.max_iterations.hi - space.max_iterations.lo)));
    return config;
}

double halton(std::uint64_t index, std::uint64_t base) {
    double result = 0.0;
    double f = 1.0;
    std::uint64_t i = index + 1;  // skip the degenerate all-zeros point
    while (i > 0) {
        f /= static_cast<double>(base);
        result += f * static_cast<double>(i % base);
        i /= base;
    }
    return result;
}

std::vector<double> halton_point(std::uint64_t index, int dims) {
    std::vector<double> point(static_cast<std::size_t>(dims));
    for (int d = 0; d < dims; ++d) point[static_cast<std::size_t>(d)] = halton(index, kHaltonBases[d]);
    return point;
}

std::vector<double> suggest_next(const std::vector<TrialRecord>& history, const SearchSpace& space,
                                 std::uint64_t seed, int n_init, int candidate_pool) {
    space.validate();
    if (n_init < 1) throw ConfigError("suggest_next: n_init must be >= 1");
    if (candidate_pool < 1) throw ConfigError("suggest_next: candidate_pool must be >= 1");

    // The Halton stream is offset by the seed so distinct seeds explore
    // distinct (but reproducible) sequences.
    const std::uint64_t init_offset = derive_seed(seed, "halton-init") % 100000;
    const std::size_t n = history.size();

    const bool warmup = n < static_cast<std::size_t>(n_init);
    bool degenerate = !warmup;
    if (!warmup) {
        for (std::size_t i = 1; i < n && degenerate; ++i)
            if (std::abs(history[i].objective - history[0].objective) > 1e-12) degenerate = false;
    }
    if (warmup || degenerate) return halton_point(init_offset + n, SearchSpace::kDims);

    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), SearchSpace::kDims);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (history[i].point.size() != SearchSpace::kDims)
            throw ConfigError("suggest_next: trial " + std::to_string(history[i].id) +
                              " has a malformed point");
        for (int d = 0; d < SearchSpace::kDims; ++d)
            x(static_cast<Eigen::Index>(i), d) = history[i].point[static_cast<std::size_t>(d)];
        y(static_cast<Eigen::Index>(i)) = history[i].objective;
    }
    const GpModel model = fit_gp(x, y);

    const std::uint64_t pool_offset = derive_seed(seed, "halton-pool") % 100000 + 1000000;
    const std::uint64_t pool_base = pool_offset + static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(candidate_pool);

    std::vector<double> ei(static_cast<std::size_t>(candidate_pool));
    std::vector<std::vector<double>> candidates(static_cast<std::size_t>(candidate_pool));
    for (int c = 0; c < candidate_pool; ++c)
        candidates[static_cast<std::size_t>(c)] =
            halton_point(pool_base + static_cast<std::uint64_t>(c), SearchSpace::kDims);

    // Candidates are scored into their own slots; the argmax scan below is
    // serial, so the parallel schedule cannot change the winner.
#pragma omp parallel for schedule(static)
    for (int c = 0; c < candidate_pool; ++c) {
        Eigen::RowVectorXd row(SearchSpace::kDims);
        for (int d = 0; d < SearchSpace::kDims; ++d)
            row(d) = candidates[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)];
        ei[static_cast<std::size_t>(c)] = expected_improvement(model, row);
    }

    std::size_t best = 0;
    for (std::size_t c = 1; c < ei.size(); ++c)
        if (ei[c] > ei[best]) best = c;
    return candidates[best];
}

std::vector<TrialRecord> top_trials(const std::vector<TrialRecord>& records, std::size_t count) {
    std::vector<TrialRecord> sorted = records;
    std::sort(sorted.begin(), sorted.end(), [](const TrialRecord& a, const TrialRecord& b) {
        if (a.objective != b.objective) return a.objective > b.objective;
        return a.id < b.id;
    });
    if (sorted.size() > count) sorted.resize(count);
    return sorted;
}

std::vector<TrialRecord> run_optimization(const SearchSpace& space, const OptimizerOptions& options,
                                          const ObjectiveRunner& objective) {
    space.validate();
    if (options.trials_total < 1) throw ConfigError("run_optimization: trials_total must be >= 1");
    if (options.chunk_size < 1) throw ConfigError("run_optimization: chunk_size must be >= 1");
    if (options.resume_dir.empty()) throw ConfigError("run_optimization: resume_dir is required");
    if (!objective) throw ConfigError("run_optimization: objective runner is required");

    const fs::path dir(options.resume_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create resume dir " + dir.string() + ": " + ec.message());

    // The meta file pins everything that shapes the trial sequence; resuming
    // under different settings would silently fork the log, so it is an error.
    const fs::path meta_path = dir / "meta.json";
    nlohmann::ordered_json meta;
    meta["seed"] = options.seed;
    meta["chunk_size"] = options.chunk_size;
    meta["n_init"] = options.n_init;
    meta["candidate_pool"] = options.candidate_pool;
    meta["space"] = space_to_json(space);
    meta["version"] = kVersion;
    if (fs::exists(meta_path)) {
        std::ifstream in(meta_path);
        nlohmann::json existing;
        try {
            in >> existing;
        } catch (const nlohmann::json::exception& e) {
            throw IoError("corrupt optimizer meta " + meta_path.string() + ": " + e.what());
        }
        for (const char* key : {"seed", "chunk_size", "n_init", "candidate_pool", "space"})
            if (existing.value(key, nlohmann::json()) != meta[key])
                throw ConfigError("resume mismatch: '" + std::string(key) + "' differs from " +
                                  meta_path.string());
    } else {
        std::ofstream out(meta_path);
        if (!out) throw IoError("cannot write " + meta_path.string());
        out << meta.dump(2) << "\n";
    }

    std::vector<TrialRecord> records = load_trials(dir / "trials.jsonl");
    if (static_cast<int>(records.size()) % options.chunk_size != 0 &&
        static_cast<int>(records.size()) < options.trials_total)
        throw IoError("corrupt trial log: " + std::to_string(records.size()) +
                      " trials is not a whole number of chunks of " + std::to_string(options.chunk_size));

    while (static_cast<int>(records.size()) < options.trials_total) {
        const int chunk_start = static_cast<int>(records.size());
        const int chunk_index = chunk_start / options.chunk_size;
        const int chunk_end = std::min(chunk_start + options.chunk_size, options.trials_total);

        // Constant-liar batch: each pending suggestion enters the lie history
        // at the mean observed objective so the next suggestion spreads out.
        double lie = 0.0;
        for (const auto& r : records) lie += r.objective;
        lie = records.empty() ? 0.0 : lie / static_cast<double>(records.size());

        std::vector<TrialRecord> pending;
        std::vector<TrialRecord> lie_history = records;
        for (int id = chunk_start; id < chunk_end; ++id) {
            TrialRecord t;
            t.id = id;
            t.chunk = chunk_index;
            t.point = suggest_next(lie_history, space, options.seed, options.n_init, options.candidate_pool);
            DiscoveryConfig config = options.base_config;
            const DiscoveryConfig decoded = decode_point(t.point, space);
            config.weights = decoded.weights;
            config.score_threshold = decoded.score_threshold;
            config.temperature = decoded.temperature;
            config.max_iterations = decoded.max_iterations;
            config.seed = derive_seed(options.seed, "trial", static_cast<std::uint64_t>(id));
            t.config = config;
            t.objective = lie;
            lie_history.push_back(t);
            pending.push_back(std::move(t));
        }

        // Trials are independent; each writes only its own record.
        const auto pending_count = static_cast<std::ptrdiff_t>(pending.size());
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < pending_count; ++i) {
            TrialRecord& t = pending[static_cast<std::size_t>(i)];
            const auto start = std::chrono::steady_clock::now();
            ObjectiveOutcome outcome;
            try {
                outcome = objective(t.config);
            } catch (const std::exception& e) {
                outcome.objective = 0.0;
                outcome.error = e.what();
            }
            t.objective = outcome.objective;
            t.eval_report = outcome.report;
            t.error = outcome.error;
            t.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }

        {
            std::ofstream log(dir / "trials.jsonl", std::ios::app);
            std::ofstream timings(dir / "timings.jsonl", std::ios::app);
            if (!log || !timings) throw IoError("cannot append to trial logs in " + dir.string());
            for (const auto& t : pending) {
                log << trial_to_json(t).dump() << "\n";
                timings << nlohmann::ordered_json{{"id", t.id}, {"wall_time", t.wall_time}}.dump() << "\n";
            }
        }
        for (auto& t : pending) records.push_back(std::move(t));
        write_top_json(dir, records);
        write_trials_csv(dir, records);
    }

    return records;
}

}  // namespace causalkit
