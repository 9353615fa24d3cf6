#include "causalkit/oracle.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "causalkit/errors.hpp"

namespace causalkit {

namespace {

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string normalize_alnum(const std::string& s) {
    std::string out;
    for (const char c : s)
        if (std::isalnum(static_cast<unsigned char>(c))) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

std::string first_sentence(const std::string& text) {
    const std::size_t cut = text.find_first_of(".!?");
    if (cut == std::string::npos) return text;
    return text.substr(0, cut + 1);
}

const VariableMeta& find_meta(const std::vector<VariableMeta>& metadata, const std::string& name) {
    for (const auto& m : metadata)
        if (m.name == name) return m;
    throw ConfigError("oracle: variable '" + name + "' is not in the metadata table");
}

int request_tokens(const std::vector<ChatTurn>& msgs) {
    int total = 0;
    for (const auto& m : msgs) total += approximate_tokens(m.content);
    return total;
}

// Span of the first answer tag's content inside `text`, or npos pair.
std::pair<std::size_t, std::size_t> answer_tag_span(const std::string& text) {
    const std::string lower = to_lower(text);
    const std::size_t open = lower.find("<answer>");
    if (open == std::string::npos) return {std::string::npos, std::string::npos};
    const std::size_t start = open + 8;
    const std::size_t close = lower.find("</answer>", start);
    if (close == std::string::npos) return {std::string::npos, std::string::npos};
    return {start, close};
}

}  // namespace

const char* to_string(Verdict v) { return v == Verdict::Yes ? "yes" : "no"; }
const char* to_string(OracleBackend b) { return b == OracleBackend::Live ? "live" : "mock"; }

int approximate_tokens(const std::string& text) {
    return static_cast<int>((text.size() + 3) / 4);
}

ChatSession::ChatSession(std::string system_preamble, int token_budget) : token_budget_(token_budget) {
    if (token_budget_ < 1) throw ConfigError("ChatSession: token_budget must be positive");
    turns_.push_back({"system", std::move(system_preamble)});
}

void ChatSession::append(std::string role, std::string content) {
    turns_.push_back({std::move(role), std::move(content)});
}

std::vector<ChatTurn> assemble_request(const ChatSession& session, const PromptVariants& user_message) {
    const auto& turns = session.turns();
    const int budget = session.token_budget();

    std::vector<ChatTurn> history;
    for (std::size_t i = 1; i < turns.size(); ++i) history.push_back(turns[i]);

    for (int level = 0; level <= 2; ++level) {
        std::vector<ChatTurn> request;
        request.push_back(turns.front());
        request.insert(request.end(), history.begin(), history.end());
        request.push_back({"user", user_message(level)});
        if (request_tokens(request) <= budget) return request;
    }

    // Most compact form still overflows: drop oldest non-system turns.
    std::vector<ChatTurn> request;
    request.push_back(turns.front());
    request.push_back({"user", user_message(2)});
    int used = request_tokens(request);
    std::vector<ChatTurn> kept;
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
        const int cost = approximate_tokens(it->content);
        if (used + cost > budget) break;
        kept.push_back(*it);
        used += cost;
    }
    std::reverse(kept.begin(), kept.end());
    request.insert(request.begin() + 1, kept.begin(), kept.end());
    return request;
}

std::optional<std::string> extract_answer_tag(const std::string& text) {
    const std::string lower = to_lower(text);
    std::vector<std::string> contents;
    std::size_t pos = 0;
    while (true) {
        const std::size_t open = lower.find("<answer>", pos);
        if (open == std::string::npos) break;
        const std::size_t start = open + 8;
        const std::size_t close = lower.find("</answer>", start);
        if (close == std::string::npos) break;
        contents.push_back(trim(text.substr(start, close - start)));
        pos = close + 9;
    }
    if (contents.empty()) return std::nullopt;
    for (const auto& c : contents)
        if (to_lower(c) != to_lower(contents.front())) return std::nullopt;  // ambiguous
    return contents.front();
}

std::optional<Verdict> parse_verdict(const std::string& tag_content) {
    const std::string norm = normalize_alnum(tag_content);
    if (norm == "yes") return Verdict::Yes;
    if (norm == "no") return Verdict::No;
    return std::nullopt;
}

std::optional<PairwiseRelation> parse_pairwise_choice(const std::string& tag_content) {
    const std::string norm = normalize_alnum(tag_content);
    if (norm == "a") return PairwiseRelation::AtoB;
    if (norm == "b") return PairwiseRelation::BtoA;
    if (norm == "c") return PairwiseRelation::None;
    return std::nullopt;
}

std::vector<std::string> parse_name_list(const std::string& tag_content) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        const std::string name = trim(current);
        current.clear();
        if (name.empty()) return;
        if (normalize_alnum(name) == "none") return;
        out.push_back(name);
    };
    for (const char c : tag_content) {
        if (c == ',' || c == ';' || c == '\n') {
            flush();
        } else {
            current.push_back(c);
        }
    }
    flush();
    return out;
}

std::optional<double> extract_raw_confidence(const RawReply& reply) {
    if (!reply.answer_token_logprobs || reply.answer_token_logprobs->empty()) return std::nullopt;
    double sum = 0.0;
    for (const double lp : *reply.answer_token_logprobs) sum += lp;
    return sum / static_cast<double>(reply.answer_token_logprobs->size());
}

double llm_confidence(std::optional<double> raw) {
    if (!raw) return 0.5;
    return 1.0 / (1.0 + std::exp(-*raw));
}

int match_variable_name(const std::string& reply_name, const std::vector<std::string>& declared) {
    const std::string wanted = to_lower(trim(reply_name));
    for (std::size_t i = 0; i < declared.size(); ++i)
        if (to_lower(declared[i]) == wanted) return static_cast<int>(i);
    const std::string wanted_norm = normalize_alnum(reply_name);
    if (wanted_norm.empty()) return -1;
    for (std::size_t i = 0; i < declared.size(); ++i)
        if (normalize_alnum(declared[i]) == wanted_norm) return static_cast<int>(i);
    return -1;
}

std::string default_system_preamble() {
    return "You are an expert on causal relationships between variables. Using the variable "
           "descriptions, the relationships established so far in this conversation, and your "
           "domain knowledge, answer each question strictly in the requested format.";
}

std::string render_variable_line(const VariableMeta& meta, bool first_sentence_only) {
    const std::string desc = first_sentence_only ? first_sentence(meta.description) : meta.description;
    if (desc.empty()) return meta.name;
    return meta.name + ": " + desc;
}

std::string render_graph_so_far(const CausalGraph& graph, bool compact) {
    const auto edges = graph.edges();
    if (edges.empty()) return "No causal relationships have been established yet.";
    std::string out;
    if (compact) {
        out = "Edges so far: ";
        for (std::size_t i = 0; i < edges.size(); ++i) {
            if (i > 0) out += ", ";
            out += graph.name_of(edges[i].first) + "->" + graph.name_of(edges[i].second);
        }
    } else {
        out = "Causal relationships established so far: ";
        for (std::size_t i = 0; i < edges.size(); ++i) {
            if (i > 0) out += "; ";
            out += graph.name_of(edges[i].first) + " causes " + graph.name_of(edges[i].second);
        }
    }
    out += ".";
    return out;
}

std::string causal_question(const std::string& x, const std::string& y) {
    return "Does " + x + " cause " + y +
           "? Provide the answer in the format: <Answer>Yes</Answer> or <Answer>No</Answer>.";
}

RawReply CausalOracle::exchange(ChatSession& session, const PromptVariants& user_message,
                                const QueryContext& ctx,
                                const std::function<bool(const RawReply&)>& acceptable,
                                const std::string& reminder) {
    const int attempts = retries_ + 1;
    RawReply last;
    bool have_reply = false;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        PromptVariants message = user_message;
        if (attempt > 0) {
            const std::string nudge = "The previous reply was not in the required format. " + reminder;
            message = [nudge](int) { return nudge; };
        }
        const std::vector<ChatTurn> request = assemble_request(session, message);
        RawReply reply;
        try {
            reply = complete(request, ctx);
        } catch (const OracleError& e) {
            warnings_.push_back(std::string("transport/backend failure: ") + e.what());
            if (attempt + 1 == attempts) throw;
            continue;
        }
        record_transcript(request, reply);
        session.append("user", request.back().content);
        session.append("assistant", reply.text);
        if (acceptable(reply)) return reply;
        warnings_.push_back("unparseable reply: " + reply.text);
        last = reply;
        have_reply = true;
    }
    throw OracleError("oracle reply could not be parsed after " + std::to_string(attempts) + " attempts",
                      have_reply ? last.text : std::string{});
}

std::vector<std::string> CausalOracle::query_independent_variables(ChatSession& session,
                                                                   const std::vector<VariableMeta>& metadata) {
    if (metadata.empty()) throw ConfigError("query_independent_variables: metadata is empty");

    QueryContext ctx;
    ctx.kind = QueryContext::Kind::IndependentVariables;
    for (const auto& m : metadata) ctx.candidates.push_back(m.name);

    const std::string question =
        "Which of the variables above are independent, meaning they are not caused by any of the "
        "other variables? Provide the answer in the format: <Answer>Name1, Name2</Answer>. If none "
        "of the variables are independent, answer <Answer>None</Answer>.";
    auto variants = [&metadata, &question](int level) {
        std::string s;
        for (const auto& m : metadata) s += render_variable_line(m, level >= 1) + "\n";
        s += question;
        return s;
    };

    const RawReply reply = exchange(
        session, variants, ctx,
        [](const RawReply& r) { return extract_answer_tag(r.text).has_value(); }, question);

    const std::vector<std::string> names = parse_name_list(*extract_answer_tag(reply.text));
    std::vector<bool> chosen(metadata.size(), false);
    for (const auto& n : names) {
        const int idx = match_variable_name(n, ctx.candidates);
        if (idx < 0) {
            warnings_.push_back("independent-variables reply names unknown variable '" + n + "'; dropped");
        } else {
            chosen[static_cast<std::size_t>(idx)] = true;
        }
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < metadata.size(); ++i)
        if (chosen[i]) out.push_back(metadata[i].name);
    return out;
}

OracleAnswer CausalOracle::query_causal(ChatSession& session, const std::string& x, const std::string& y,
                                        const std::vector<VariableMeta>& metadata,
                                        const CausalGraph& graph_so_far) {
    if (x == y) throw ConfigError("query_causal: x and y must differ");
    const VariableMeta& mx = find_meta(metadata, x);
    const VariableMeta& my = find_meta(metadata, y);

    QueryContext ctx;
    ctx.kind = QueryContext::Kind::Causal;
    ctx.x = x;
    ctx.y = y;

    const std::string question = causal_question(x, y);
    auto variants = [&](int level) {
        std::string s;
        s += render_variable_line(mx, level >= 1) + "\n";
        s += render_variable_line(my, level >= 1) + "\n";
        s += render_graph_so_far(graph_so_far, level >= 2) + "\n";
        s += question;
        return s;
    };

    const RawReply reply = exchange(
        session, variants, ctx,
        [](const RawReply& r) {
            const auto tag = extract_answer_tag(r.text);
            return tag && parse_verdict(*tag).has_value();
        },
        question);

    OracleAnswer answer;
    answer.verdict = *parse_verdict(*extract_answer_tag(reply.text));
    answer.raw_confidence = extract_raw_confidence(reply);
    answer.parsed_from = reply.text;
    answer.backend = backend();
    return answer;
}

std::vector<std::string> CausalOracle::query_children(ChatSession& session, const std::string& x,
                                                      const std::vector<std::string>& candidates,
                                                      const std::vector<VariableMeta>& metadata,
                                                      const CausalGraph& graph_so_far) {
    const VariableMeta& mx = find_meta(metadata, x);

    QueryContext ctx;
    ctx.kind = QueryContext::Kind::Children;
    ctx.x = x;
    ctx.candidates = candidates;

    std::string joined;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (i > 0) joined += ", ";
        joined += candidates[i];
    }
    const std::string question =
        "Which of the following variables does " + x + " cause: " + joined +
        "? Provide the answer in the format: <Answer>Name1, Name2</Answer>. If " + x +
        " causes none of them, answer <Answer>None</Answer>.";
    auto variants = [&](int level) {
        std::string s;
        s += render_variable_line(mx, level >= 1) + "\n";
        for (const auto& c : candidates) s += render_variable_line(find_meta(metadata, c), level >= 1) + "\n";
        s += render_graph_so_far(graph_so_far, level >= 2) + "\n";
        s += question;
        return s;
    };

    const RawReply reply = exchange(
        session, variants, ctx,
        [](const RawReply& r) { return extract_answer_tag(r.text).has_value(); }, question);

    const std::vector<std::string> names = parse_name_list(*extract_answer_tag(reply.text));
    std::vector<bool> chosen(candidates.size(), false);
    for (const auto& n : names) {
        const int idx = match_variable_name(n, candidates);
        if (idx < 0) {
            warnings_.push_back("children reply names unknown variable '" + n + "'; dropped");
        } else {
            chosen[static_cast<std::size_t>(idx)] = true;
        }
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (chosen[i]) out.push_back(candidates[i]);
    return out;
}

PairwiseAnswer CausalOracle::query_pairwise(ChatSession& session, const std::string& a, const std::string& b,
                                            const std::vector<VariableMeta>& metadata) {
    if (a == b) throw ConfigError("query_pairwise: variables must differ");
    const VariableMeta& ma = find_meta(metadata, a);
    const VariableMeta& mb = find_meta(metadata, b);

    QueryContext ctx;
    ctx.kind = QueryContext::Kind::Pairwise;
    ctx.x = a;
    ctx.y = b;

    const std::string format_line =
        "Provide the answer in the format: <Answer>A</Answer>, <Answer>B</Answer>, or <Answer>C</Answer>.";
    auto variants = [&](int level) {
        std::string s;
        s += render_variable_line(ma, level >= 1) + "\n";
        s += render_variable_line(mb, level >= 1) + "\n";
        s += "Given the above information, which of the following is the most likely:\n";
        s += "A. Changing " + a + " causes a change in " + b + "\n";
        s += "B. Changing " + b + " causes a change in " + a + "\n";
        s += "C. There is no causal relationship between " + a + " and " + b + "\n";
        s += format_line;
        return s;
    };

    const RawReply reply = exchange(
        session, variants, ctx,
        [](const RawReply& r) {
            const auto tag = extract_answer_tag(r.text);
            return tag && parse_pairwise_choice(*tag).has_value();
        },
        format_line);

    PairwiseAnswer answer;
    answer.relation = *parse_pairwise_choice(*extract_answer_tag(reply.text));
    answer.parsed_from = reply.text;
    answer.backend = backend();
    return answer;
}

std::vector<std::string> CausalOracle::take_warnings() {
    std::vector<std::string> out;
    out.swap(warnings_);
    return out;
}

void CausalOracle::record_transcript(const std::vector<ChatTurn>& request, const RawReply& reply) {
    if (transcript_path_.empty()) return;
    nlohmann::ordered_json line;
    line["backend"] = to_string(backend());
    auto& msgs = line["request"];
    msgs = nlohmann::ordered_json::array();
    for (const auto& m : request) msgs.push_back({{"role", m.role}, {"content", m.content}});
    line["reply"] = reply.text;
    line["has_logprobs"] = reply.answer_token_logprobs.has_value();
    std::ofstream out(transcript_path_, std::ios::app);
    if (!out) throw IoError("cannot open transcript file: " + transcript_path_);
    out << line.dump() << "\n";
}

MockConfidenceModel MockConfidenceModel::fixed(double v) {
    MockConfidenceModel m;
    m.kind = Kind::Fixed;
    m.value = v;
    return m;
}

MockConfidenceModel MockConfidenceModel::noisy(double mean, double spread) {
    MockConfidenceModel m;
    m.kind = Kind::Noisy;
    m.mean = mean;
    m.spread = spread;
    return m;
}

MockOracle::MockOracle(CausalGraph truth, MockOracleOptions options)
    : truth_(std::move(truth)), options_(options), rng_(options.seed) {
    if (options_.noise_rate < 0.0 || options_.noise_rate > 1.0)
        throw ConfigError("MockOracle: noise_rate must lie in [0, 1]");
    if (options_.confidence.kind == MockConfidenceModel::Kind::Noisy && options_.confidence.spread < 0.0)
        throw ConfigError("MockOracle: confidence spread must be non-negative");
}

bool MockOracle::flip() {
    if (options_.noise_rate <= 0.0) return false;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return u(rng_) < options_.noise_rate;
}

RawReply MockOracle::complete(const std::vector<ChatTurn>&, const QueryContext& ctx) {
    RawReply reply;
    switch (ctx.kind) {
        case QueryContext::Kind::Causal: {
            bool causes = truth_.has_node(ctx.x) && truth_.has_node(ctx.y) && truth_.has_edge(ctx.x, ctx.y);
            if (flip()) causes = !causes;
            reply.text = causes ? "<Answer>Yes</Answer>" : "<Answer>No</Answer>";
            double raw = options_.confidence.value;
            if (options_.confidence.kind == MockConfidenceModel::Kind::Noisy) {
                std::uniform_real_distribution<double> u(options_.confidence.mean - options_.confidence.spread,
                                                         options_.confidence.mean + options_.confidence.spread);
                raw = u(rng_);
            }
            reply.answer_token_logprobs = std::vector<double>{raw};
            break;
        }
        case QueryContext::Kind::IndependentVariables: {
            std::vector<std::string> picked;
            for (const auto& name : ctx.candidates) {
                bool is_root = true;
                if (truth_.has_node(name)) {
                    const int idx = truth_.index_of(name);
                    is_root = truth_.parents(idx).empty();
                }
                if (flip()) is_root = !is_root;
                if (is_root) picked.push_back(name);
            }
            std::string body;
            for (std::size_t i = 0; i < picked.size(); ++i) {
                if (i > 0) body += ", ";
                body += picked[i];
            }
            reply.text = "<Answer>" + (body.empty() ? std::string("None") : body) + "</Answer>";
            break;
        }
        case QueryContext::Kind::Children: {
            std::vector<std::string> picked;
            for (const auto& name : ctx.candidates) {
                bool causes = truth_.has_node(ctx.x) && truth_.has_node(name) && truth_.has_edge(ctx.x, name);
                if (flip()) causes = !causes;
                if (causes) picked.push_back(name);
            }
            std::string body;
            for (std::size_t i = 0; i < picked.size(); ++i) {
                if (i > 0) body += ", ";
                body += picked[i];
            }
            reply.text = "<Answer>" + (body.empty() ? std::string("None") : body) + "</Answer>";
            break;
        }
        case QueryContext::Kind::Pairwise: {
            int option;  // 0 = A->B, 1 = B->A, 2 = none
            const bool ab = truth_.has_node(ctx.x) && truth_.has_node(ctx.y) && truth_.has_edge(ctx.x, ctx.y);
            const bool ba = truth_.has_node(ctx.x) && truth_.has_node(ctx.y) && truth_.has_edge(ctx.y, ctx.x);
            option = ab ? 0 : (ba ? 1 : 2);
            if (flip()) {
                std::uniform_int_distribution<int> pick(0, 1);
                const int other = pick(rng_);
                option = (option + 1 + other) % 3;
            }
            reply.text = option == 0 ? "<Answer>A</Answer>" : (option == 1 ? "<Answer>B</Answer>" : "<Answer>C</Answer>");
            break;
        }
    }
    return reply;
}

LiveOracle::LiveOracle(LiveOracleConfig config) : config_(std::move(config)) {
    retries_ = config_.retries;
    const std::string& url = config_.endpoint;
    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("LiveOracle: endpoint must include a scheme: " + url);
    const std::size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        host_ = url;
        path_ = "/";
    } else {
        host_ = url.substr(0, path_start);
        path_ = url.substr(path_start);
    }
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
}

RawReply LiveOracle::complete(const std::vector<ChatTurn>& request, const QueryContext&) {
    nlohmann::ordered_json body;
    body["model"] = config_.model;
    auto& msgs = body["messages"];
    msgs = nlohmann::ordered_json::array();
    for (const auto& m : request) msgs.push_back({{"role", m.role}, {"content", m.content}});
    body["temperature"] = config_.temperature;
    if (config_.request_logprobs) body["logprobs"] = true;

    httplib::Client client(host_);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw OracleError("oracle transport failure: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw OracleError("oracle HTTP status " + std::to_string(res->status), res->body);

    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw OracleError(std::string("oracle reply is not valid JSON: ") + e.what(), res->body);
    }

    RawReply reply;
    try {
        const auto& choice = parsed.at("choices").at(0);
        reply.text = choice.at("message").at("content").get<std::string>();

        // Answer-tag token log-probabilities, when the backend returned them.
        if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
            choice["logprobs"].contains("content") && choice["logprobs"]["content"].is_array()) {
            const auto [tag_begin, tag_end] = answer_tag_span(reply.text);
            if (tag_begin != std::string::npos) {
                std::vector<double> lps;
                std::size_t offset = 0;
                for (const auto& tok : choice["logprobs"]["content"]) {
                    const std::string text = tok.value("token", std::string{});
                    const std::size_t tok_begin = offset;
                    const std::size_t tok_end = offset + text.size();
                    offset = tok_end;
                    if (tok_end <= tag_begin || tok_begin >= tag_end) continue;
                    if (tok.contains("logprob") && tok["logprob"].is_number())
                        lps.push_back(tok["logprob"].get<double>());
                }
                if (!lps.empty()) reply.answer_token_logprobs = lps;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw OracleError(std::string("oracle reply JSON has unexpected shape: ") + e.what(), res->body);
    }
    return reply;
}

}  // namespace causalkit
