#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "causalkit/errors.hpp"
#include "causalkit/fixtures.hpp"
#include "causalkit/oracle.hpp"

using namespace causalkit;

namespace {

std::vector<VariableMeta> tiny_metadata() {
    return {{"Rain", "Whether it rained in the last hour.", DeclaredKind::Auto},
            {"Sprinkler", "Whether the lawn sprinkler ran.", DeclaredKind::Auto},
            {"WetGrass", "Whether the grass is wet.", DeclaredKind::Auto}};
}

CausalGraph tiny_truth() {
    return CausalGraph::from_edges({"Rain", "Sprinkler", "WetGrass"},
                                   {{"Rain", "WetGrass"}, {"Sprinkler", "WetGrass"}});
}

// Plays back a fixed list of replies, then repeats the last one.
class ScriptedOracle : public CausalOracle {
public:
    explicit ScriptedOracle(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    OracleBackend backend() const override { return OracleBackend::Mock; }
    int calls = 0;

protected:
    RawReply complete(const std::vector<ChatTurn>&, const QueryContext&) override {
        const std::size_t i = std::min(static_cast<std::size_t>(calls), replies_.size() - 1);
        ++calls;
        return {replies_[i], std::nullopt};
    }

private:
    std::vector<std::string> replies_;
};

// Fails with a transport error a fixed number of times, then succeeds.
class FlakyOracle : public CausalOracle {
public:
    explicit FlakyOracle(int failures) : failures_(failures) {}
    OracleBackend backend() const override { return OracleBackend::Mock; }

protected:
    RawReply complete(const std::vector<ChatTurn>&, const QueryContext&) override {
        if (failures_-- > 0) throw OracleError("connection reset");
        return {"<Answer>Yes</Answer>", std::nullopt};
    }

private:
    int failures_;
};

}  // namespace

TEST_CASE("token estimate rounds up") {
    CHECK(approximate_tokens("") == 0);
    CHECK(approximate_tokens("abc") == 1);
    CHECK(approximate_tokens("abcd") == 1);
    CHECK(approximate_tokens("abcde") == 2);
}

TEST_CASE("answer tag extraction") {
    CHECK(*extract_answer_tag("<Answer>Yes</Answer>") == "Yes");
    CHECK(*extract_answer_tag("pre <ANSWER> No </ANSWER> post") == "No");
    CHECK(*extract_answer_tag("<answer>A, B</answer>") == "A, B");
    CHECK_FALSE(extract_answer_tag("Yes").has_value());
    CHECK_FALSE(extract_answer_tag("<Answer>Yes").has_value());
    // several tags are fine if they agree, ambiguous otherwise
    CHECK(*extract_answer_tag("<Answer>Yes</Answer> and again <Answer>YES</Answer>") == "Yes");
    CHECK_FALSE(extract_answer_tag("<Answer>Yes</Answer> but <Answer>No</Answer>").has_value());
}

TEST_CASE("verdict and choice parsing tolerate punctuation and case") {
    CHECK(*parse_verdict("Yes") == Verdict::Yes);
    CHECK(*parse_verdict(" yes. ") == Verdict::Yes);
    CHECK(*parse_verdict("NO") == Verdict::No);
    CHECK_FALSE(parse_verdict("maybe").has_value());
    CHECK_FALSE(parse_verdict("").has_value());

    CHECK(*parse_pairwise_choice("A") == PairwiseRelation::AtoB);
    CHECK(*parse_pairwise_choice("b.") == PairwiseRelation::BtoA);
    CHECK(*parse_pairwise_choice(" C ") == PairwiseRelation::None);
    CHECK_FALSE(parse_pairwise_choice("D").has_value());
}

TEST_CASE("name list parsing") {
    CHECK(parse_name_list("Rain, Sprinkler") == std::vector<std::string>{"Rain", "Sprinkler"});
    CHECK(parse_name_list("Rain; Sprinkler\nWetGrass") ==
          std::vector<std::string>{"Rain", "Sprinkler", "WetGrass"});
    CHECK(parse_name_list("None").empty());
    CHECK(parse_name_list("none.").empty());
    CHECK(parse_name_list("").empty());
}

TEST_CASE("raw confidence is the mean answer-token log-probability") {
    RawReply r;
    r.text = "<Answer>Yes</Answer>";
    CHECK_FALSE(extract_raw_confidence(r).has_value());
    r.answer_token_logprobs = std::vector<double>{-0.2, -0.4};
    CHECK(*extract_raw_confidence(r) == doctest::Approx(-0.3).epsilon(1e-15));
    r.answer_token_logprobs = std::vector<double>{};
    CHECK_FALSE(extract_raw_confidence(r).has_value());
}

TEST_CASE("confidence mapping is a sigmoid with a neutral default") {
    CHECK(llm_confidence(std::nullopt) == 0.5);
    CHECK(llm_confidence(0.0) == 0.5);
    CHECK(llm_confidence(1.0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-15));
    CHECK(llm_confidence(-3.0) == doctest::Approx(1.0 / (1.0 + std::exp(3.0))).epsilon(1e-15));
    CHECK(llm_confidence(2.0) > llm_confidence(1.0));
}

TEST_CASE("variable name matching is forgiving about case and punctuation") {
    const std::vector<std::string> declared = {"LowerBodyO2", "CO2Report", "Age"};
    CHECK(match_variable_name("Age", declared) == 2);
    CHECK(match_variable_name(" age ", declared) == 2);
    CHECK(match_variable_name("lowerbodyo2", declared) == 0);
    CHECK(match_variable_name("Lower Body O2", declared) == 0);
    CHECK(match_variable_name("CO2 Report", declared) == 1);
    CHECK(match_variable_name("Pulse", declared) == -1);
    CHECK(match_variable_name("", declared) == -1);
}

TEST_CASE("prompt building blocks") {
    CHECK(causal_question("X", "Y") ==
          "Does X cause Y? Provide the answer in the format: <Answer>Yes</Answer> or "
          "<Answer>No</Answer>.");

    const VariableMeta m{"Age", "Age of the patient. Recorded at admission.", DeclaredKind::Auto};
    CHECK(render_variable_line(m, false) == "Age: Age of the patient. Recorded at admission.");
    CHECK(render_variable_line(m, true) == "Age: Age of the patient.");
    CHECK(render_variable_line({"Age", "", DeclaredKind::Auto}, false) == "Age");

    CausalGraph g({"A", "B", "C"});
    CHECK(render_graph_so_far(g, false) == "No causal relationships have been established yet.");
    g.add_edge_checked("A", "B");
    g.add_edge_checked("B", "C");
    CHECK(render_graph_so_far(g, false) == "Causal relationships established so far: A causes B; B causes C.");
    CHECK(render_graph_so_far(g, true) == "Edges so far: A->B, B->C.");
}

TEST_CASE("chat session stores the full history") {
    ChatSession s("be helpful", 8000);
    CHECK(s.system_preamble() == "be helpful");
    CHECK(s.turns().size() == 1);
    s.append("user", "q1");
    s.append("assistant", "a1");
    CHECK(s.turns().size() == 3);
    CHECK(s.turns()[0].role == "system");
    CHECK_THROWS_AS(ChatSession("x", 0), ConfigError);
}

TEST_CASE("request assembly respects the token budget by compacting") {
    const std::string long_desc(2000, 'd');
    ChatSession s("sys", 200);
    for (int i = 0; i < 6; ++i) {
        s.append("user", "question " + std::to_string(i) + std::string(400, 'q'));
        s.append("assistant", "<Answer>No</Answer>");
    }
    auto variants = [&](int level) {
        if (level == 0) return "full " + long_desc;
        if (level == 1) return std::string("first-sentence version, still quite long ") + std::string(300, 's');
        return std::string("tiny");
    };
    const std::vector<ChatTurn> request = assemble_request(s, variants);
    REQUIRE(request.size() >= 2);
    CHECK(request.front().role == "system");
    CHECK(request.back().role == "user");
    CHECK(request.back().content == "tiny");  // level-2 compaction was needed
    int total = 0;
    for (const auto& t : request) total += approximate_tokens(t.content);
    CHECK(total <= 200);
    // the stored session is untouched by request-side compaction
    CHECK(s.turns().size() == 13);
}

TEST_CASE("request assembly keeps level 0 when it fits") {
    ChatSession s("sys", 8000);
    auto variants = [](int level) { return level == 0 ? std::string("rich prompt") : std::string("x"); };
    const std::vector<ChatTurn> request = assemble_request(s, variants);
    REQUIRE(request.size() == 2);
    CHECK(request.back().content == "rich prompt");
}

TEST_CASE("mock oracle answers from the truth graph") {
    MockOracle oracle(tiny_truth(), {});
    ChatSession s(default_system_preamble());
    const auto metadata = tiny_metadata();
    CausalGraph so_far({"Rain", "Sprinkler", "WetGrass"});

    const OracleAnswer yes = oracle.query_causal(s, "Rain", "WetGrass", metadata, so_far);
    CHECK(yes.verdict == Verdict::Yes);
    CHECK(yes.backend == OracleBackend::Mock);
    CHECK(yes.parsed_from == "<Answer>Yes</Answer>");
    const OracleAnswer no = oracle.query_causal(s, "WetGrass", "Rain", metadata, so_far);
    CHECK(no.verdict == Verdict::No);

    CHECK(oracle.query_independent_variables(s, metadata) ==
          std::vector<std::string>{"Rain", "Sprinkler"});

    CHECK(oracle.query_children(s, "Rain", {"Sprinkler", "WetGrass"}, metadata, so_far) ==
          std::vector<std::string>{"WetGrass"});
    CHECK(oracle.query_children(s, "WetGrass", {"Rain", "Sprinkler"}, metadata, so_far).empty());

    CHECK(oracle.query_pairwise(s, "Rain", "WetGrass", metadata).relation == PairwiseRelation::AtoB);
    CHECK(oracle.query_pairwise(s, "WetGrass", "Rain", metadata).relation == PairwiseRelation::BtoA);
    CHECK(oracle.query_pairwise(s, "Rain", "Sprinkler", metadata).relation == PairwiseRelation::None);
    CHECK(oracle.take_warnings().empty());
}

TEST_CASE("mock confidence models") {
    MockOracleOptions fixed;
    fixed.confidence = MockConfidenceModel::fixed(1.0);
    MockOracle oracle(tiny_truth(), fixed);
    ChatSession s(default_system_preamble());
    const OracleAnswer a = oracle.query_causal(s, "Rain", "WetGrass", tiny_metadata(),
                                               CausalGraph({"Rain", "Sprinkler", "WetGrass"}));
    REQUIRE(a.raw_confidence.has_value());
    CHECK(*a.raw_confidence == 1.0);
    CHECK(llm_confidence(a.raw_confidence) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));

    MockOracleOptions noisy;
    noisy.confidence = MockConfidenceModel::noisy(2.0, 0.5);
    noisy.seed = 9;
    MockOracle noisy_oracle(tiny_truth(), noisy);
    for (int i = 0; i < 20; ++i) {
        const OracleAnswer b = noisy_oracle.query_causal(s, "Rain", "WetGrass", tiny_metadata(),
                                                         CausalGraph({"Rain", "Sprinkler", "WetGrass"}));
        REQUIRE(b.raw_confidence.has_value());
        REQUIRE(*b.raw_confidence >= 1.5);
        REQUIRE(*b.raw_confidence <= 2.5);
    }
}

TEST_CASE("mock verdict noise flips at the requested rate") {
    MockOracleOptions opts;
    opts.noise_rate = 1.0;  // every verdict inverted
    MockOracle oracle(tiny_truth(), opts);
    ChatSession s(default_system_preamble());
    const CausalGraph so_far({"Rain", "Sprinkler", "WetGrass"});
    CHECK(oracle.query_causal(s, "Rain", "WetGrass", tiny_metadata(), so_far).verdict == Verdict::No);
    CHECK(oracle.query_causal(s, "WetGrass", "Rain", tiny_metadata(), so_far).verdict == Verdict::Yes);

    CHECK_THROWS_AS(MockOracle(tiny_truth(), {-0.1, MockConfidenceModel::fixed(0.0), 0}), ConfigError);
    CHECK_THROWS_AS(MockOracle(tiny_truth(), {1.1, MockConfidenceModel::fixed(0.0), 0}), ConfigError);
}

TEST_CASE("mock oracle replies are deterministic per seed") {
    const auto run = [](std::uint64_t seed) {
        MockOracleOptions opts;
        opts.noise_rate = 0.4;
        opts.confidence = MockConfidenceModel::noisy(1.0, 1.0);
        opts.seed = seed;
        MockOracle oracle(tiny_truth(), opts);
        ChatSession s(default_system_preamble());
        std::string tape;
        const CausalGraph so_far({"Rain", "Sprinkler", "WetGrass"});
        for (int i = 0; i < 30; ++i) {
            const OracleAnswer a =
                oracle.query_causal(s, "Rain", "WetGrass", tiny_metadata(), so_far);
            tape += a.parsed_from + "|" + std::to_string(*a.raw_confidence) + ";";
        }
        return tape;
    };
    CHECK(run(5) == run(5));
    CHECK(run(5) != run(6));
}

TEST_CASE("format retries nudge the oracle and eventually fail loudly") {
    const auto metadata = tiny_metadata();
    const CausalGraph so_far({"Rain", "Sprinkler", "WetGrass"});

    ScriptedOracle recovers({"gibberish", "<Answer>Yes</Answer>"});
    ChatSession s1(default_system_preamble());
    const OracleAnswer a = recovers.query_causal(s1, "Rain", "WetGrass", metadata, so_far);
    CHECK(a.verdict == Verdict::Yes);
    CHECK(recovers.calls == 2);
    const auto warnings = recovers.take_warnings();
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("unparseable") != std::string::npos);
    // the retry prompt carries the format reminder
    bool found_nudge = false;
    for (const auto& t : s1.turns())
        if (t.content.find("The previous reply was not in the required format.") != std::string::npos)
            found_nudge = true;
    CHECK(found_nudge);

    ScriptedOracle hopeless({"still not an answer"});
    ChatSession s2(default_system_preamble());
    try {
        hopeless.query_causal(s2, "Rain", "WetGrass", metadata, so_far);
        FAIL("expected OracleError");
    } catch (const OracleError& e) {
        CHECK(e.raw_text() == "still not an answer");
        CHECK(hopeless.calls == 3);  // initial try + two retries
    }
}

TEST_CASE("transport failures are retried before surfacing") {
    const auto metadata = tiny_metadata();
    const CausalGraph so_far({"Rain", "Sprinkler", "WetGrass"});

    FlakyOracle flaky(2);
    ChatSession s1(default_system_preamble());
    CHECK(flaky.query_causal(s1, "Rain", "WetGrass", metadata, so_far).verdict == Verdict::Yes);
    CHECK(flaky.take_warnings().size() == 2);

    FlakyOracle dead(99);
    ChatSession s2(default_system_preamble());
    CHECK_THROWS_AS(dead.query_causal(s2, "Rain", "WetGrass", metadata, so_far), OracleError);
}

TEST_CASE("transcript records one line per request") {
    const auto path = std::filesystem::temp_directory_path() / "causalkit-transcript.jsonl";
    std::filesystem::remove(path);
    {
        MockOracle oracle(tiny_truth(), {});
        oracle.set_transcript_path(path.string());
        ChatSession s(default_system_preamble());
        oracle.query_causal(s, "Rain", "WetGrass", tiny_metadata(),
                            CausalGraph({"Rain", "Sprinkler", "WetGrass"}));
        oracle.query_causal(s, "Sprinkler", "Rain", tiny_metadata(),
                            CausalGraph({"Rain", "Sprinkler", "WetGrass"}));
    }
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        const auto doc = nlohmann::json::parse(line);
        CHECK(doc.contains("request"));
        CHECK(doc.contains("reply"));
        CHECK(doc["backend"] == "mock");
        ++lines;
    }
    CHECK(lines == 2);
}

TEST_CASE("live oracle speaks chat-completions over HTTP") {
    setenv("CAUSALKIT_TEST_KEY", "sekrit-token", 1);

    httplib::Server server;
    std::atomic<int> hits{0};
    std::string seen_auth;
    nlohmann::json seen_body;

    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        const int hit = ++hits;
        seen_auth = req.get_header_value("Authorization");
        seen_body = nlohmann::json::parse(req.body);
        if (hit == 1) {  // first call fails, exercising the transport retry
            res.status = 503;
            res.set_content("overloaded", "text/plain");
            return;
        }
        nlohmann::json choice;
        choice["message"]["content"] = "I think so. <Answer>Yes</Answer>";
        choice["logprobs"]["content"] = nlohmann::json::array();
        for (const auto& [token, lp] : std::vector<std::pair<std::string, double>>{
                 {"I think so. <Answer>", -9.0}, {"Yes", -0.25}, {"</Answer>", -8.0}})
            choice["logprobs"]["content"].push_back({{"token", token}, {"logprob", lp}});
        nlohmann::json reply;
        reply["choices"] = nlohmann::json::array({choice});
        res.set_content(reply.dump(), "application/json");
    });

    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    LiveOracleConfig config;
    config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    config.model = "test-model";
    config.api_key_env = "CAUSALKIT_TEST_KEY";
    LiveOracle oracle(config);

    ChatSession s(default_system_preamble());
    const OracleAnswer a = oracle.query_causal(s, "Rain", "WetGrass", tiny_metadata(),
                                               CausalGraph({"Rain", "Sprinkler", "WetGrass"}));
    CHECK(a.verdict == Verdict::Yes);
    CHECK(a.backend == OracleBackend::Live);
    // only the tokens inside the answer tag feed the confidence
    REQUIRE(a.raw_confidence.has_value());
    CHECK(*a.raw_confidence == doctest::Approx(-0.25).epsilon(1e-12));

    CHECK(hits == 2);
    CHECK(seen_auth == "Bearer sekrit-token");
    CHECK(seen_body["model"] == "test-model");
    CHECK(seen_body["logprobs"] == true);
    REQUIRE(seen_body["messages"].is_array());
    CHECK(seen_body["messages"][0]["role"] == "system");
    CHECK(seen_body["messages"].back()["content"].get<std::string>().find("Does Rain cause WetGrass?") !=
          std::string::npos);
    CHECK(oracle.take_warnings().size() == 1);  // the 503

    server.stop();
    server_thread.join();
}
