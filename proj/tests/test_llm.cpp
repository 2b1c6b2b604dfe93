#include <doctest.h>

#include "habitat/explain.hpp"
#include "habitat/json.hpp"

#include "test_support.hpp"

#include <atomic>

using namespace habitat;
using habitat_test::FixtureServer;

namespace {

CausalEstimate estimate_of(const std::string& bio, double ate) {
    CausalEstimate e;
    e.treatment = bio;
    e.ate = ate;
    e.ci95 = {ate - 0.02, ate + 0.02};
    return e;
}

std::vector<CausalEstimate> five_effects() {
    return {estimate_of("BIO11", 0.13), estimate_of("BIO10", -0.03), estimate_of("BIO2", -0.07),
            estimate_of("BIO5", -0.12), estimate_of("BIO12", 0.06)};
}

json chat_reply(const std::string& content) {
    return json{{"id", "cmpl-1"},
                {"object", "chat.completion"},
                {"choices", json::array({json{{"index", 0},
                                              {"message", json{{"role", "assistant"},
                                                               {"content", content}}},
                                              {"finish_reason", "stop"}}})}};
}

}  // namespace

TEST_CASE("render_llm parses a numbered list and respects the wire contract") {
    std::string last_body;
    FixtureServer server([&](httplib::Server& s) {
        s.Post("/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
            last_body = req.body;
            res.set_content(chat_reply("1. Mild winters reduce frost mortality.\n"
                                       "2. Heat in the warmest quarter causes drought stress.\n"
                                       "3. Wide diurnal swings disrupt pollinator activity.\n"
                                       "4. Extreme summer maxima exceed thermal tolerance.\n"
                                       "5) Reliable rainfall sustains moist ground cover.")
                                .dump(),
                            "application/json");
        });
    });

    LlmConfig cfg;
    cfg.base_url = server.base_url();
    cfg.api_key = "test-key";
    const auto texts = render_llm(five_effects(), "Ajuga reptans", cfg);
    REQUIRE(texts.size() == 5);
    CHECK(texts[0] == "Mild winters reduce frost mortality.");
    CHECK(texts[4] == "Reliable rainfall sustains moist ground cover.");

    const json body = json::parse(last_body);
    CHECK(body["model"] == "llama-3.3-70b");
    CHECK(body["temperature"] == 0.2);
    CHECK(body["messages"].size() == 1);
    CHECK(body["messages"][0]["role"] == "user");
    const std::string prompt = body["messages"][0]["content"].get<std::string>();
    CHECK(prompt.find("BIO11") != std::string::npos);
    CHECK(prompt.find("free from vague generalizations") != std::string::npos);
}

TEST_CASE("render_llm failure modes") {
    SUBCASE("http 500 -> LlmUnavailable") {
        std::atomic<int> hits{0};
        FixtureServer server([&](httplib::Server& s) {
            s.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
                ++hits;
                res.status = 500;
            });
        });
        LlmConfig cfg;
        cfg.base_url = server.base_url();
        CHECK_THROWS_AS(render_llm(five_effects(), "X", cfg), LlmUnavailable);
        CHECK(hits == 2);  // one retry
    }
    SUBCASE("wrong item count -> LlmMalformed") {
        FixtureServer server([&](httplib::Server& s) {
            s.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
                res.set_content(chat_reply("1. a\n2. b\n3. c\n4. d").dump(), "application/json");
            });
        });
        LlmConfig cfg;
        cfg.base_url = server.base_url();
        CHECK_THROWS_AS(render_llm(five_effects(), "X", cfg), LlmMalformed);
    }
    SUBCASE("non-chat payload -> LlmMalformed") {
        FixtureServer server([&](httplib::Server& s) {
            s.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
                res.set_content(R"({"unexpected": true})", "application/json");
            });
        });
        LlmConfig cfg;
        cfg.base_url = server.base_url();
        CHECK_THROWS_AS(render_llm(five_effects(), "X", cfg), LlmMalformed);
    }
    SUBCASE("unconfigured backend -> LlmUnavailable") {
        CHECK_THROWS_AS(render_llm(five_effects(), "X", LlmConfig{}), LlmUnavailable);
    }
}

TEST_CASE("make_explanations falls back to rule-only on llm failure") {
    FixtureServer server([&](httplib::Server& s) {
        s.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
            res.status = 500;
        });
    });
    LlmConfig cfg;
    cfg.base_url = server.base_url();

    const auto explanations = make_explanations(five_effects(), "Ajuga reptans", cfg);
    REQUIRE(explanations.size() == 5);
    for (const auto& ex : explanations) {
        CHECK(ex.source == "rule");
        CHECK_FALSE(ex.llm_text.has_value());
        CHECK_FALSE(ex.rule_text.empty());  // rule text never depends on the backend
    }
}

TEST_CASE("make_explanations augments when the backend answers") {
    std::atomic<int> hits{0};
    FixtureServer server([&](httplib::Server& s) {
        s.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
            ++hits;
            res.set_content(chat_reply("1. one\n2. two\n3. three\n4. four\n5. five").dump(),
                            "application/json");
        });
    });
    LlmConfig cfg;
    cfg.base_url = server.base_url();

    const auto explanations = make_explanations(five_effects(), "Ajuga reptans", cfg);
    REQUIRE(explanations.size() == 5);
    for (const auto& ex : explanations) {
        CHECK(ex.source == "llm");
        REQUIRE(ex.llm_text.has_value());
        CHECK_FALSE(ex.rule_text.empty());  // llm augments, never replaces
    }
    CHECK(*explanations[0].llm_text == "one");
    CHECK(hits == 1);  // all effects travel in a single request
}

TEST_CASE("llm config from environment") {
    ::setenv("HABITAT_LLM_BASE_URL", "http://example.test:8000/v1", 1);
    ::setenv("HABITAT_LLM_MODEL", "my-model", 1);
    ::setenv("HABITAT_LLM_API_KEY", "sk-secret", 1);
    const LlmConfig cfg = LlmConfig::from_env();
    CHECK(cfg.configured());
    CHECK(cfg.base_url == "http://example.test:8000/v1");
    CHECK(cfg.model == "my-model");
    CHECK(cfg.api_key == "sk-secret");
    ::unsetenv("HABITAT_LLM_BASE_URL");
    ::unsetenv("HABITAT_LLM_MODEL");
    ::unsetenv("HABITAT_LLM_API_KEY");
    CHECK_FALSE(LlmConfig::from_env().configured());
}
