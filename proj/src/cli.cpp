#include "causalkit/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "causalkit/dataset.hpp"
#include "causalkit/discovery.hpp"
#include "causalkit/errors.hpp"
#include "causalkit/eval.hpp"
#include "causalkit/fairness.hpp"
#include "causalkit/fixtures.hpp"
#include "causalkit/graph.hpp"
#include "causalkit/io.hpp"
#include "causalkit/optimizer.hpp"
#include "causalkit/seeds.hpp"
#include "causalkit/version.hpp"

namespace causalkit {

namespace fs = std::filesystem;

namespace {

// --- shared option bundles ---

struct OracleFlags {
    std::string backend = "mock";
    std::string mock_truth;
    double noise = 0.0;
    std::string mock_confidence = "fixed:1.0";
    std::string endpoint = "http://localhost:8080/v1/chat/completions";
    std::string model = "gpt-4";
    int retries = 2;
    std::string api_key_env = "CAUSALKIT_API_KEY";
};

struct DiscoveryFlags {
    double w_stat = 0.3;
    double w_conf = 0.1;
    double w_hist = 0.6;
    double threshold = 0.0;
    int max_iterations = 100;
    double temperature = 0.2;
    std::uint64_t seed = 0;
    bool requery = true;
    int bins = 8;
    int token_budget = 8000;
};

MockConfidenceModel parse_confidence_model(const std::string& text) {
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
    try {
        if (kind == "fixed") return MockConfidenceModel::fixed(std::stod(args));
        if (kind == "noisy") {
            const auto comma = args.find(',');
            if (comma == std::string::npos) throw std::invalid_argument("need mean,spread");
            return MockConfidenceModel::noisy(std::stod(args.substr(0, comma)),
                                              std::stod(args.substr(comma + 1)));
        }
    } catch (const std::exception&) {
        throw ConfigError("cannot parse confidence model '" + text + "' (expected fixed:V or noisy:M,S)");
    }
    throw ConfigError("unknown confidence model '" + kind + "' (expected fixed:V or noisy:M,S)");
}

DiscoveryConfig build_config(const DiscoveryFlags& f) {
    DiscoveryConfig config;
    config.weights = {f.w_stat, f.w_conf, f.w_hist};
    config.score_threshold = f.threshold;
    config.max_iterations = f.max_iterations;
    config.temperature = f.temperature;
    config.seed = f.seed;
    config.requery = f.requery;
    config.stat_bins = f.bins;
    config.token_budget = f.token_budget;
    config.validate();
    return config;
}

std::unique_ptr<CausalOracle> build_oracle(const OracleFlags& f, const DiscoveryConfig& config) {
    if (f.backend == "mock") {
        if (f.mock_truth.empty())
            throw ConfigError("mock oracle requires --mock-truth (ground-truth graph file)");
        MockOracleOptions options;
        options.noise_rate = f.noise;
        options.confidence = parse_confidence_model(f.mock_confidence);
        options.seed = derive_seed(config.seed, "oracle");
        return std::make_unique<MockOracle>(io::load_graph_auto(f.mock_truth), options);
    }
    if (f.backend == "live") {
        LiveOracleConfig live;
        live.endpoint = f.endpoint;
        live.model = f.model;
        live.temperature = config.temperature;
        live.token_budget = config.token_budget;
        live.retries = f.retries;
        live.api_key_env = f.api_key_env;
        return std::make_unique<LiveOracle>(live);
    }
    throw ConfigError("unknown oracle backend '" + f.backend + "' (expected mock or live)");
}

// --- manifest ---

std::string file_hash_hex(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot hash missing file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string bytes = buffer.str();
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(std::string_view(bytes))));
    return hex;
}

class ManifestWriter {
public:
    ManifestWriter(std::string command, int argc, const char* const* argv) {
        start_ = std::chrono::steady_clock::now();
        doc_["command"] = std::move(command);
        std::string line;
        for (int i = 0; i < argc; ++i) {
            if (i) line += ' ';
            line += argv[i];
        }
        doc_["argv"] = line;
        doc_["version"] = kVersion;
    }

    void set_config(nlohmann::ordered_json config) { doc_["config"] = std::move(config); }
    void add_input(const fs::path& path) {
        doc_["inputs"].push_back({{"path", path.string()}, {"fnv1a64", file_hash_hex(path)}});
    }
    void add_artifact(const fs::path& path) { doc_["artifacts"].push_back(path.string()); }

    // Written via a temp file + rename so a crash never leaves a half
    // manifest behind.
    void write(const fs::path& path) {
        doc_["wall_time_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        const fs::path tmp = path.string() + ".tmp";
        {
            std::ofstream out(tmp);
            if (!out) throw IoError("cannot write manifest: " + tmp.string());
            out << doc_.dump(2) << "\n";
        }
        fs::rename(tmp, path);
    }

private:
    nlohmann::ordered_json doc_;
    std::chrono::steady_clock::time_point start_;
};

nlohmann::ordered_json discovery_config_json(const std::string& method, const DiscoveryConfig& c,
                                             const OracleFlags& o) {
    nlohmann::ordered_json j;
    j["method"] = method;
    j["weights"] = {{"w_stat", c.weights.w_stat}, {"w_conf", c.weights.w_conf}, {"w_hist", c.weights.w_hist}};
    j["score_threshold"] = c.score_threshold;
    j["max_iterations"] = c.max_iterations;
    j["temperature"] = c.temperature;
    j["seed"] = c.seed;
    j["requery"] = c.requery;
    j["stat_bins"] = c.stat_bins;
    j["token_budget"] = c.token_budget;
    j["oracle"] = {{"backend", o.backend}};
    if (o.backend == "mock") {
        j["oracle"]["mock_truth"] = o.mock_truth;
        j["oracle"]["noise"] = o.noise;
        j["oracle"]["confidence"] = o.mock_confidence;
    } else {
        j["oracle"]["endpoint"] = o.endpoint;
        j["oracle"]["model"] = o.model;
        j["oracle"]["retries"] = o.retries;
        j["oracle"]["api_key_env"] = o.api_key_env;
    }
    return j;
}

// --- config-file merging ---

const std::vector<std::string> kSubcommands = {"discover", "evaluate", "fairness", "optimize", "gen-fixture"};

std::vector<std::string> config_file_tokens(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": invalid JSON: " + e.what());
    }
    if (!doc.is_object()) throw ConfigError(path.string() + ": config file must be a JSON object");

    std::vector<std::string> tokens;
    for (const auto& [key, value] : doc.items()) {
        if (key == "config") throw ConfigError(path.string() + ": config files cannot nest 'config'");
        if (value.is_boolean()) {
            tokens.push_back((value.get<bool>() ? "--" : "--no-") + key);
        } else if (value.is_array()) {
            std::string joined;
            for (const auto& item : value) {
                if (!joined.empty()) joined += ',';
                joined += item.is_string() ? item.get<std::string>() : item.dump();
            }
            tokens.push_back("--" + key);
            tokens.push_back(joined);
        } else {
            tokens.push_back("--" + key);
            tokens.push_back(value.is_string() ? value.get<std::string>() : value.dump());
        }
    }
    return tokens;
}

// Flags from --config land right after the subcommand so explicit
// command-line flags stay behind them and win under TakeLast.
std::vector<std::string> merge_config_file(std::vector<std::string> args) {
    std::size_t sub_pos = args.size();
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (std::find(kSubcommands.begin(), kSubcommands.end(), args[i]) != kSubcommands.end()) {
            sub_pos = i;
            break;
        }
    }
    if (sub_pos == args.size()) return args;

    fs::path config_path;  // last occurrence wins, matching flag semantics
    for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;

    const std::vector<std::string> tokens = config_file_tokens(config_path);
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, tokens.begin(), tokens.end());
    return args;
}

// --- commands ---

struct DiscoverArgs {
    std::string method = "active";
    std::string metadata;
    std::string data;
    std::string out;
    std::string truth;  // optional: evaluate the result against this graph
    bool transcript = false;
    DiscoveryFlags discovery;
    OracleFlags oracle;
};

int cmd_discover(const DiscoverArgs& args, int argc, const char* const* argv) {
    const DiscoveryConfig config = build_config(args.discovery);
    if (args.method != "active" && args.method != "bfs" && args.method != "pairwise")
        throw ConfigError("unknown method '" + args.method + "' (expected active, bfs, or pairwise)");

    ManifestWriter manifest("discover", argc, argv);
    manifest.set_config(discovery_config_json(args.method, config, args.oracle));

    const std::vector<VariableMeta> metadata = load_metadata_json(args.metadata);
    manifest.add_input(args.metadata);

    Dataset dataset;
    if (args.method == "active") {
        if (args.data.empty()) throw ConfigError("--data is required for the active method");
        dataset = load_dataset(args.data, metadata);
        manifest.add_input(args.data);
    }
    if (args.oracle.backend == "mock" && !args.oracle.mock_truth.empty())
        manifest.add_input(args.oracle.mock_truth);

    const fs::path out_dir(args.out);
    fs::create_directories(out_dir);

    std::unique_ptr<CausalOracle> oracle = build_oracle(args.oracle, config);
    if (args.transcript) oracle->set_transcript_path((out_dir / "transcript.jsonl").string());

    auto write_artifacts = [&](const CausalGraph& graph, const QueryLog& log) {
        io::save_graph_json(graph, out_dir / "graph.json");
        io::save_adjacency_csv(graph, out_dir / "adjacency.csv");
        write_query_log(log, (out_dir / "query_log.jsonl").string());
        {
            std::ofstream out(out_dir / "config.json");
            if (!out) throw IoError("cannot write " + (out_dir / "config.json").string());
            out << discovery_config_json(args.method, config, args.oracle).dump(2) << "\n";
        }
        for (const char* name : {"graph.json", "adjacency.csv", "query_log.jsonl", "config.json"})
            manifest.add_artifact(out_dir / name);
        manifest.write(out_dir / "manifest.json");
    };

    CausalGraph graph({});
    QueryLog log;
    try {
        if (args.method == "active") {
            std::tie(graph, log) = run_active_discovery(metadata, dataset, *oracle, config);
        } else if (args.method == "bfs") {
            std::tie(graph, log) = run_bfs_baseline(metadata, *oracle, config);
        } else {
            std::tie(graph, log) = run_pairwise_baseline(metadata, *oracle);
        }
    } catch (const DiscoveryAborted& e) {
        write_artifacts(e.partial_graph, e.partial_log);
        std::cerr << "error: " << e.what() << " (partial artifacts written to " << out_dir.string() << ")\n";
        return 2;
    }
    write_artifacts(graph, log);

    std::cout << "method: " << args.method << "\n"
              << "queries: " << log.total_queries() << "\n"
              << "accepted edges: " << log.accepted << "\n"
              << "rejected (cycle): " << log.rejected_cycle << "\n"
              << "graph: " << graph.node_count() << " nodes, " << graph.edge_count() << " edges\n";
    for (const auto& w : log.warnings) std::cerr << "warning: " << w << "\n";

    // With a known truth (explicit, or implicit for mock runs) report quality.
    std::string truth_path = args.truth;
    if (truth_path.empty() && args.oracle.backend == "mock") truth_path = args.oracle.mock_truth;
    if (!truth_path.empty()) {
        const EvalReport report = evaluate(graph, io::load_graph_auto(truth_path));
        std::cout << format_eval_table({{args.method, report}});
        std::ofstream out(out_dir / "eval.json");
        if (!out) throw IoError("cannot write " + (out_dir / "eval.json").string());
        out << eval_report_to_json(report).dump(2) << "\n";
    }
    return 0;
}

struct EvaluateArgs {
    std::string pred;
    std::string truth;
    std::string out = "eval.json";
};

int cmd_evaluate(const EvaluateArgs& args) {
    const CausalGraph pred = io::load_graph_auto(args.pred);
    const CausalGraph truth = io::load_graph_auto(args.truth);
    const EvalReport report = evaluate(pred, truth);

    std::cout << format_eval_table({{fs::path(args.pred).filename().string(), report}});

    std::ofstream out(args.out);
    if (!out) throw IoError("cannot write " + args.out);
    out << eval_report_to_json(report).dump(2) << "\n";
    return 0;
}

struct FairnessArgs {
    std::string graph;
    std::string data;
    std::string metadata;  // optional; header-derived when absent
    std::vector<std::string> sensitive;
    std::string outcome;
    int max_path_len = -1;
    bool one_hot = false;
    std::string out = "fairness.json";
};

int cmd_fairness(const FairnessArgs& args) {
    const CausalGraph graph = io::load_graph_auto(args.graph);
    const Dataset dataset = args.metadata.empty()
                                ? load_dataset_auto(args.data)
                                : load_dataset(args.data, load_metadata_json(args.metadata));

    FairnessSpec spec;
    spec.sensitive = args.sensitive;
    spec.outcome = args.outcome;
    spec.max_path_len = args.max_path_len;
    spec.one_hot = args.one_hot;

    const FairnessReport report = analyze_fairness(graph, dataset, spec);
    std::cout << format_fairness_table(report);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";

    std::ofstream out(args.out);
    if (!out) throw IoError("cannot write " + args.out);
    out << fairness_report_to_json(report).dump(2) << "\n";
    return 0;
}

struct OptimizeArgs {
    int trials = 100;
    int chunk_size = 25;
    std::string space_preset = "child";
    std::string resume_dir;
    bool live = false;
    // custom space (used when --space-preset custom)
    std::vector<double> threshold_range;
    std::vector<double> temperature_range;
    std::vector<int> iterations_range;
    // objective fixture
    std::string fixture = "child";
    std::string truth;
    std::string metadata;
    std::string data;
    int fixture_rows = 500;
    DiscoveryFlags discovery;  // base config (weights etc. overridden per trial)
    OracleFlags oracle;
};

int cmd_optimize(const OptimizeArgs& args, int argc, const char* const* argv) {
    SearchSpace space;
    if (args.space_preset == "child") {
        space = SearchSpace::child_preset();
    } else if (args.space_preset == "neuropathic") {
        space = SearchSpace::neuropathic_preset();
    } else if (args.space_preset == "custom") {
        if (args.threshold_range.size() != 2 || args.temperature_range.size() != 2 ||
            args.iterations_range.size() != 2)
            throw ConfigError("custom space needs --threshold-range, --temperature-range and "
                              "--iterations-range, each as lo,hi");
        space.score_threshold = {args.threshold_range[0], args.threshold_range[1]};
        space.temperature = {args.temperature_range[0], args.temperature_range[1]};
        space.max_iterations = {args.iterations_range[0], args.iterations_range[1]};
    } else {
        throw ConfigError("unknown space preset '" + args.space_preset + "'");
    }
    space.validate();
    if (args.resume_dir.empty()) throw ConfigError("--resume-dir is required");

    // Objective fixture: explicit files win over the named fixture.
    CausalGraph truth({});
    std::vector<VariableMeta> metadata;
    if (!args.truth.empty()) {
        truth = io::load_graph_auto(args.truth);
        metadata = args.metadata.empty() ? generic_metadata(truth) : load_metadata_json(args.metadata);
    } else if (args.fixture == "child") {
        truth = child_graph();
        metadata = child_metadata();
    } else if (args.fixture == "sem6") {
        truth = sem6_graph();
        metadata = sem6_metadata();
    } else {
        throw ConfigError("unknown fixture '" + args.fixture + "' (expected child or sem6)");
    }

    Dataset dataset;
    if (!args.data.empty()) {
        dataset = load_dataset(args.data, metadata);
    } else {
        const auto coefficients =
            random_coefficients(truth, derive_seed(args.discovery.seed, "fixture-coefficients"));
        dataset = generate_linear_gaussian(truth, coefficients,
                                           static_cast<std::size_t>(args.fixture_rows),
                                           derive_seed(args.discovery.seed, "fixture-data"));
    }
    const StatCache cache = build_stat_cache(dataset, {args.discovery.bins, true});

    OptimizerOptions options;
    options.trials_total = args.trials;
    options.chunk_size = args.chunk_size;
    options.seed = args.discovery.seed;
    options.resume_dir = args.resume_dir;
    options.base_config = build_config(args.discovery);

    OracleFlags oracle_flags = args.oracle;
    if (args.live) oracle_flags.backend = "live";

    const ObjectiveRunner objective = [&](const DiscoveryConfig& config) {
        ObjectiveOutcome outcome;
        std::unique_ptr<CausalOracle> oracle;
        if (oracle_flags.backend == "mock") {
            MockOracleOptions mock;
            mock.noise_rate = oracle_flags.noise;
            mock.confidence = parse_confidence_model(oracle_flags.mock_confidence);
            mock.seed = derive_seed(config.seed, "oracle");
            oracle = std::make_unique<MockOracle>(truth, mock);
        } else {
            oracle = build_oracle(oracle_flags, config);
        }
        const auto [graph, log] = run_active_discovery(metadata, dataset, *oracle, config, &cache);
        outcome.report = evaluate(graph, truth);
        outcome.objective = outcome.report.f1;
        return outcome;
    };

    const std::vector<TrialRecord> records = run_optimization(space, options, objective);

    std::cout << "completed trials: " << records.size() << "\n";
    std::cout << "top configurations:\n";
    char line[160];
    std::snprintf(line, sizeof(line), "%4s %9s %7s %7s %7s %10s %12s %11s", "id", "objective", "w_stat",
                  "w_conf", "w_hist", "threshold", "temperature", "iterations");
    std::cout << line << "\n";
    for (const auto& t : top_trials(records, 5)) {
        std::snprintf(line, sizeof(line), "%4d %9.4f %7.3f %7.3f %7.3f %10.4f %12.3f %11d", t.id,
                      t.objective, t.config.weights.w_stat, t.config.weights.w_conf,
                      t.config.weights.w_hist, t.config.score_threshold, t.config.temperature,
                      t.config.max_iterations);
        std::cout << line << "\n";
    }

    ManifestWriter manifest("optimize", argc, argv);
    nlohmann::ordered_json config_snapshot;
    config_snapshot["trials"] = args.trials;
    config_snapshot["chunk_size"] = args.chunk_size;
    config_snapshot["space_preset"] = args.space_preset;
    config_snapshot["seed"] = args.discovery.seed;
    config_snapshot["live"] = args.live;
    manifest.set_config(std::move(config_snapshot));
    for (const char* name : {"trials.jsonl", "top.json", "trials.csv"})
        manifest.add_artifact(fs::path(args.resume_dir) / name);
    manifest.write(fs::path(args.resume_dir) / "manifest.json");
    return 0;
}

struct GenFixtureArgs {
    std::string name = "child";
    std::string out = ".";
    int nodes = 20;
    int edges = 25;
    int rows = 1000;
    double sigma = 0.1;
    std::uint64_t seed = 0;
};

int cmd_gen_fixture(const GenFixtureArgs& args) {
    const fs::path out_dir(args.out);
    fs::create_directories(out_dir);

    CausalGraph graph({});
    std::vector<VariableMeta> metadata;
    std::map<std::pair<std::string, std::string>, double> coefficients;
    if (args.name == "child") {
        graph = child_graph();
        metadata = child_metadata();
        coefficients = random_coefficients(graph, derive_seed(args.seed, "fixture-coefficients"));
    } else if (args.name == "sem6") {
        graph = sem6_graph();
        metadata = sem6_metadata();
        coefficients = sem6_coefficients();
    } else if (args.name == "random") {
        graph = random_dag(args.nodes, args.edges, derive_seed(args.seed, "fixture-graph"));
        metadata = generic_metadata(graph);
        coefficients = random_coefficients(graph, derive_seed(args.seed, "fixture-coefficients"));
    } else {
        throw ConfigError("unknown fixture '" + args.name + "' (expected child, sem6, or random)");
    }

    const Dataset data = generate_linear_gaussian(graph, coefficients, static_cast<std::size_t>(args.rows),
                                                  derive_seed(args.seed, "fixture-data"), args.sigma);

    io::save_graph_json(graph, out_dir / "graph.json");
    io::save_adjacency_csv(graph, out_dir / "adjacency.csv");
    save_metadata_json(metadata, out_dir / "metadata.json");
    save_dataset_csv(data, out_dir / "data.csv");
    {
        nlohmann::ordered_json j;
        for (const auto& [edge, c] : coefficients) j[edge.first + "->" + edge.second] = c;
        std::ofstream out(out_dir / "coefficients.json");
        if (!out) throw IoError("cannot write " + (out_dir / "coefficients.json").string());
        out << j.dump(2) << "\n";
    }
    std::cout << "fixture '" << args.name << "' written to " << out_dir.string() << " (" << graph.node_count()
              << " nodes, " << graph.edge_count() << " edges, " << args.rows << " rows)\n";
    return 0;
}

void add_discovery_flags(CLI::App* cmd, DiscoveryFlags& f) {
    cmd->add_option("--w-stat", f.w_stat, "Weight of the statistical score");
    cmd->add_option("--w-conf", f.w_conf, "Weight of the oracle-confidence score");
    cmd->add_option("--w-hist", f.w_hist, "Weight of the query-history score");
    cmd->add_option("--threshold", f.threshold, "Stop when the best pair scores below this");
    cmd->add_option("--max-iterations", f.max_iterations, "Query budget for the active method");
    cmd->add_option("--temperature", f.temperature, "Sampling temperature for live backends");
    cmd->add_option("--seed", f.seed, "Master seed; every RNG derives from it");
    cmd->add_flag("--requery,!--no-requery", f.requery, "Allow re-querying answered pairs");
    cmd->add_option("--bins", f.bins, "Equal-frequency bins for mutual information");
    cmd->add_option("--token-budget", f.token_budget, "Approximate prompt token budget");
}

void add_oracle_flags(CLI::App* cmd, OracleFlags& f) {
    cmd->add_option("--oracle", f.backend, "Oracle backend: mock or live");
    cmd->add_option("--mock-truth", f.mock_truth, "Ground-truth graph file for the mock oracle");
    cmd->add_option("--noise", f.noise, "Mock verdict flip probability");
    cmd->add_option("--mock-confidence", f.mock_confidence, "Mock confidence model (fixed:V or noisy:M,S)");
    cmd->add_option("--endpoint", f.endpoint, "Chat-completions endpoint URL");
    cmd->add_option("--model", f.model, "Model identifier for the live backend");
    cmd->add_option("--retries", f.retries, "Reply-format retries before giving up");
    cmd->add_option("--api-key-env", f.api_key_env, "Environment variable holding the API key");
}

}  // namespace

int run_cli(int argc, const char* const* argv) try {
    CLI::App app{"causal discovery toolkit: oracle-guided structure search, evaluation, "
                 "fairness auditing, and hyperparameter optimization"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    DiscoverArgs discover;
    auto* discover_cmd = app.add_subcommand("discover", "Run a discovery method and write run artifacts");
    discover_cmd->add_option("--method", discover.method, "active, bfs, or pairwise");
    discover_cmd->add_option("--metadata", discover.metadata, "Variable metadata JSON")->required();
    discover_cmd->add_option("--data", discover.data, "Dataset CSV (required for active)");
    discover_cmd->add_option("--out", discover.out, "Output directory")->required();
    discover_cmd->add_option("--truth", discover.truth, "Optional truth graph to evaluate against");
    discover_cmd->add_flag("--transcript,!--no-transcript", discover.transcript,
                           "Persist the oracle transcript");
    discover_cmd->add_option("--config", "JSON config file; explicit flags override it");
    add_discovery_flags(discover_cmd, discover.discovery);
    add_oracle_flags(discover_cmd, discover.oracle);

    EvaluateArgs evaluate_args;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a predicted graph against a truth graph");
    evaluate_cmd->add_option("--pred", evaluate_args.pred, "Predicted graph (JSON or adjacency CSV)")
        ->required();
    evaluate_cmd->add_option("--truth", evaluate_args.truth, "Truth graph")->required();
    evaluate_cmd->add_option("--out", evaluate_args.out, "Report JSON path");
    evaluate_cmd->add_option("--config", "JSON config file; explicit flags override it");

    FairnessArgs fairness_args;
    auto* fairness_cmd = app.add_subcommand("fairness", "Audit sensitive-attribute pathways and effects");
    fairness_cmd->add_option("--graph", fairness_args.graph, "Causal graph file")->required();
    fairness_cmd->add_option("--data", fairness_args.data, "Dataset CSV")->required();
    fairness_cmd->add_option("--metadata", fairness_args.metadata, "Optional metadata JSON");
    fairness_cmd->add_option("--sensitive", fairness_args.sensitive, "Sensitive attribute names")
        ->required()
        ->delimiter(',');
    fairness_cmd->add_option("--outcome", fairness_args.outcome, "Outcome variable")->required();
    fairness_cmd->add_option("--max-path-len", fairness_args.max_path_len, "Path length cap (-1 = none)");
    fairness_cmd->add_flag("--one-hot,!--no-one-hot", fairness_args.one_hot,
                           "Per-level effects for categorical attributes");
    fairness_cmd->add_option("--out", fairness_args.out, "Report JSON path");
    fairness_cmd->add_option("--config", "JSON config file; explicit flags override it");

    OptimizeArgs optimize;
    auto* optimize_cmd = app.add_subcommand("optimize", "Search discovery hyperparameters with a GP");
    optimize_cmd->add_option("--trials", optimize.trials, "Total trials");
    optimize_cmd->add_option("--chunk-size", optimize.chunk_size, "Trials per persisted chunk");
    optimize_cmd->add_option("--space-preset", optimize.space_preset, "child, neuropathic, or custom");
    optimize_cmd->add_option("--resume-dir", optimize.resume_dir, "Trial log directory")->required();
    optimize_cmd->add_flag("--live,!--no-live", optimize.live, "Score trials against the live oracle");
    optimize_cmd->add_option("--threshold-range", optimize.threshold_range, "Custom space: lo,hi")
        ->delimiter(',');
    optimize_cmd->add_option("--temperature-range", optimize.temperature_range, "Custom space: lo,hi")
        ->delimiter(',');
    optimize_cmd->add_option("--iterations-range", optimize.iterations_range, "Custom space: lo,hi")
        ->delimiter(',');
    optimize_cmd->add_option("--fixture", optimize.fixture, "Objective fixture: child or sem6");
    optimize_cmd->add_option("--truth", optimize.truth, "Truth graph file (overrides --fixture)");
    optimize_cmd->add_option("--metadata", optimize.metadata, "Metadata JSON for --truth");
    optimize_cmd->add_option("--data", optimize.data, "Dataset CSV for the objective");
    optimize_cmd->add_option("--fixture-rows", optimize.fixture_rows, "Rows when generating fixture data");
    optimize_cmd->add_option("--config", "JSON config file; explicit flags override it");
    add_discovery_flags(optimize_cmd, optimize.discovery);
    add_oracle_flags(optimize_cmd, optimize.oracle);

    GenFixtureArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-fixture", "Write a bundled or random fixture to disk");
    gen_cmd->add_option("--name", gen.name, "child, sem6, or random");
    gen_cmd->add_option("--out", gen.out, "Output directory");
    gen_cmd->add_option("--nodes", gen.nodes, "Node count for random fixtures");
    gen_cmd->add_option("--edges", gen.edges, "Edge count for random fixtures");
    gen_cmd->add_option("--rows", gen.rows, "Generated dataset rows");
    gen_cmd->add_option("--sigma", gen.sigma, "Noise standard deviation");
    gen_cmd->add_option("--seed", gen.seed, "Master seed");
    gen_cmd->add_option("--config", "JSON config file; explicit flags override it");

    for (auto* sub : app.get_subcommands({}))
        for (auto* opt : sub->get_options()) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    std::vector<std::string> args(argv + 1, argv + argc);
    args = merge_config_file(std::move(args));
    try {
        std::reverse(args.begin(), args.end());  // CLI11 consumes tokens back to front
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (discover_cmd->parsed()) return cmd_discover(discover, argc, argv);
    if (evaluate_cmd->parsed()) return cmd_evaluate(evaluate_args);
    if (fairness_cmd->parsed()) return cmd_fairness(fairness_args);
    if (optimize_cmd->parsed()) return cmd_optimize(optimize, argc, argv);
    if (gen_cmd->parsed()) return cmd_gen_fixture(gen);
    std::cerr << "error: no subcommand selected\n";
    return 1;
} catch (const DiscoveryAborted& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
} catch (const OracleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!e.raw_text().empty()) std::cerr << "raw reply: " << e.raw_text() << "\n";
    return 2;
} catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
} catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
} catch (const Error& e) {  // ConfigError, GraphError
    std::cerr << "error: " << e.what() << "\n";
    return 1;
} catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
}

}  // namespace causalkit
