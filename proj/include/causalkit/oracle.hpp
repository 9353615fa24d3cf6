#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "causalkit/dataset.hpp"
#include "causalkit/graph.hpp"

namespace causalkit {

enum class Verdict { Yes, No };
enum class OracleBackend { Live, Mock };

const char* to_string(Verdict v);
const char* to_string(OracleBackend b);

struct OracleAnswer {
    Verdict verdict = Verdict::No;
    std::optional<double> raw_confidence;  // mean answer-token log-probability when available
    std::string parsed_from;               // raw reply text the verdict was parsed out of
    OracleBackend backend = OracleBackend::Mock;
};

enum class PairwiseRelation { AtoB, BtoA, None };

struct PairwiseAnswer {
    PairwiseRelation relation = PairwiseRelation::None;
    std::string parsed_from;
    OracleBackend backend = OracleBackend::Mock;
};

struct ChatTurn {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;
};

// Rough token estimate used for budget decisions: ceil(chars / 4).
int approximate_tokens(const std::string& text);

// One conversation per discovery run. Turns are append-only; the budget
// governs how much of the history may be replayed into a single request.
class ChatSession {
public:
    explicit ChatSession(std::string system_preamble, int token_budget = 8000);

    void append(std::string role, std::string content);
    const std::vector<ChatTurn>& turns() const { return turns_; }
    const std::string& system_preamble() const { return turns_.front().content; }
    int token_budget() const { return token_budget_; }

private:
    std::vector<ChatTurn> turns_;
    int token_budget_;
};

// User-message builder at increasing compaction levels:
//   0 = full descriptions, verbose edge rendering
//   1 = descriptions truncated to their first sentence
//   2 = additionally compact "u->v" edge rendering
// If level 2 still overflows, the oldest non-system turns are dropped from
// the outgoing request (the stored session keeps everything).
using PromptVariants = std::function<std::string(int level)>;

std::vector<ChatTurn> assemble_request(const ChatSession& session, const PromptVariants& user_message);

// Raw backend reply: text plus, when the backend supplies them, the
// log-probabilities of the tokens inside the answer tag.
struct RawReply {
    std::string text;
    std::optional<std::vector<double>> answer_token_logprobs;
};

// --- parsing helpers (exposed for tests) ---

// Content of the <Answer>...</Answer> tag, case-insensitive. Empty optional
// when the tag is missing or when multiple tags disagree.
std::optional<std::string> extract_answer_tag(const std::string& text);
std::optional<Verdict> parse_verdict(const std::string& tag_content);
std::optional<PairwiseRelation> parse_pairwise_choice(const std::string& tag_content);
std::vector<std::string> parse_name_list(const std::string& tag_content);

// Mean answer-token log-probability, absent when the backend gave none.
std::optional<double> extract_raw_confidence(const RawReply& reply);

// Confidence mapping: sigmoid of the raw value, 0.5 when absent.
double llm_confidence(std::optional<double> raw);

// Matches a reply name against declared variables: case-insensitive exact
// first, then lowercase-alphanumeric normalization. -1 when nothing matches.
int match_variable_name(const std::string& reply_name, const std::vector<std::string>& declared);

// --- prompt builders (exposed for tests) ---

std::string default_system_preamble();
std::string render_variable_line(const VariableMeta& meta, bool first_sentence_only);
std::string render_graph_so_far(const CausalGraph& graph, bool compact);
std::string causal_question(const std::string& x, const std::string& y);

// --- oracle interface ---

class CausalOracle {
public:
    virtual ~CausalOracle() = default;
    virtual OracleBackend backend() const = 0;

    // Which variables are not caused by any other variable.
    std::vector<std::string> query_independent_variables(ChatSession& session,
                                                         const std::vector<VariableMeta>& metadata);

    // "Does X cause Y?" with both descriptions and the edges found so far.
    OracleAnswer query_causal(ChatSession& session, const std::string& x, const std::string& y,
                              const std::vector<VariableMeta>& metadata, const CausalGraph& graph_so_far);

    // Which of `candidates` does x cause (frontier expansion).
    std::vector<std::string> query_children(ChatSession& session, const std::string& x,
                                            const std::vector<std::string>& candidates,
                                            const std::vector<VariableMeta>& metadata,
                                            const CausalGraph& graph_so_far);

    // Three-way A/B/C judgment on an unordered pair.
    PairwiseAnswer query_pairwise(ChatSession& session, const std::string& a, const std::string& b,
                                  const std::vector<VariableMeta>& metadata);

    // Name-matching and parse warnings accumulated so far; clears the list.
    std::vector<std::string> take_warnings();

    // Optional audit transcript (JSON lines, one request/reply per line).
    void set_transcript_path(std::string path) { transcript_path_ = std::move(path); }

protected:
    // What is being asked, in structured form, so the mock can answer without
    // natural-language understanding.
    struct QueryContext {
        enum class Kind { IndependentVariables, Causal, Children, Pairwise } kind;
        std::string x;
        std::string y;
        std::vector<std::string> candidates;
    };

    virtual RawReply complete(const std::vector<ChatTurn>& request, const QueryContext& ctx) = 0;

    int retries_ = 2;
    std::vector<std::string> warnings_;

private:
    RawReply exchange(ChatSession& session, const PromptVariants& user_message, const QueryContext& ctx,
                      const std::function<bool(const RawReply&)>& acceptable, const std::string& reminder);
    void record_transcript(const std::vector<ChatTurn>& request, const RawReply& reply);

    std::string transcript_path_;
};

// --- mock backend ---

struct MockConfidenceModel {
    enum class Kind { Fixed, Noisy } kind = Kind::Fixed;
    double value = 0.0;   // fixed raw confidence
    double mean = 0.0;    // noisy: uniform on [mean - spread, mean + spread]
    double spread = 0.0;

    static MockConfidenceModel fixed(double v);
    static MockConfidenceModel noisy(double mean, double spread);
};

struct MockOracleOptions {
    double noise_rate = 0.0;  // probability of flipping each verdict
    MockConfidenceModel confidence = MockConfidenceModel::fixed(0.0);
    std::uint64_t seed = 0;
};

// Answers from a ground-truth graph, with seeded verdict noise. Replies are
// emitted as tagged text and go through the same parsing path as live ones.
class MockOracle : public CausalOracle {
public:
    MockOracle(CausalGraph truth, MockOracleOptions options);

    OracleBackend backend() const override { return OracleBackend::Mock; }
    const CausalGraph& truth() const { return truth_; }

protected:
    RawReply complete(const std::vector<ChatTurn>& request, const QueryContext& ctx) override;

private:
    bool flip();

    CausalGraph truth_;
    MockOracleOptions options_;
    std::mt19937_64 rng_;
};

// --- live backend ---

struct LiveOracleConfig {
    std::string endpoint = "http://localhost:8080/v1/chat/completions";
    std::string model = "gpt-4";
    double temperature = 0.2;
    int token_budget = 8000;
    int retries = 2;
    int timeout_seconds = 120;
    bool request_logprobs = true;
    std::string api_key_env = "CAUSALKIT_API_KEY";
};

// Chat-completions HTTP client. Transport failures and malformed replies are
// retried with a format reminder; persistent failure raises OracleError with
// the offending raw text attached.
class LiveOracle : public CausalOracle {
public:
    explicit LiveOracle(LiveOracleConfig config);

    OracleBackend backend() const override { return OracleBackend::Live; }
    const LiveOracleConfig& config() const { return config_; }

protected:
    RawReply complete(const std::vector<ChatTurn>& request, const QueryContext& ctx) override;

private:
    LiveOracleConfig config_;
    std::string host_;  // scheme://host[:port]
    std::string path_;
    std::string api_key_;
};

}  // namespace causalkit
