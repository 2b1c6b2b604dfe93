#include "habitat/explain.hpp"

#include "habitat/climate.hpp"
#include "habitat/json.hpp"

#include <httplib.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <regex>
#include <sstream>

namespace habitat {

const std::vector<EffectBand>& effect_bands() {
    static const std::vector<EffectBand> bands = {
        {0.1, 1.0, true, true, "strong+",
         "High {BIO} strongly promotes {SP} presence. This likely reflects a core habitat requirement."},
        {0.05, 0.1, true, false, "moderate+", "High {BIO} moderately promotes {SP} presence."},
        {0.0, 0.05, false, false, "weak+", "High {BIO} weakly promotes {SP} presence."},
        {0.0, 0.0, true, true, "negligible", "{BIO} has a negligible effect on {SP} presence."},
        {-0.05, 0.0, false, false, "weak-", "{BIO} has a weak negative effect."},
        {-0.1, -0.05, false, true, "moderate-", "High {BIO} has a moderate negative effect on {SP} presence."},
        {-1.0, -0.1, true, true, "strong-", "High {BIO} imposes a strong negative constraint on {SP} presence."},
    };
    return bands;
}

const EffectBand& band_for(double ate) {
    if (!std::isfinite(ate) || ate < -1.0 || ate > 1.0)
        throw OutOfRange("ATE outside [-1, 1]: " + std::to_string(ate));
    const auto& bands = effect_bands();
    if (ate >= 0.1) return bands[0];
    if (ate >= 0.05) return bands[1];
    if (ate > 0.0) return bands[2];
    if (ate == 0.0) return bands[3];
    if (ate > -0.05) return bands[4];
    if (ate > -0.1) return bands[5];
    return bands[6];
}

namespace {

std::string fill_placeholders(std::string text, const std::string& bio_long,
                              const std::string& species) {
    auto replace_all = [](std::string s, const std::string& from, const std::string& to) {
        std::size_t pos = 0;
        while ((pos = s.find(from, pos)) != std::string::npos) {
            s.replace(pos, from.size(), to);
            pos += to.size();
        }
        return s;
    };
    text = replace_all(std::move(text), "{BIO}", bio_long);
    return replace_all(std::move(text), "{SP}", species);
}

}  // namespace

std::string render_rule(const CausalEstimate& est, const std::string& species) {
    const std::string long_name = bio_long_name(est.treatment);  // throws UnknownVariable
    return fill_placeholders(band_for(est.ate).tmpl, long_name, species);
}

LlmConfig LlmConfig::from_env() {
    LlmConfig cfg;
    if (const char* url = std::getenv("HABITAT_LLM_BASE_URL")) cfg.base_url = url;
    if (const char* model = std::getenv("HABITAT_LLM_MODEL")) cfg.model = model;
    if (const char* key = std::getenv("HABITAT_LLM_API_KEY")) cfg.api_key = key;
    return cfg;
}

std::string build_llm_prompt(const std::vector<CausalEstimate>& estimates,
                             const std::string& species) {
    std::ostringstream p;
    p << "You are assisting with a species distribution analysis of " << species << ".\n"
      << "Estimated average treatment effects (ATE) of bioclimatic variables on the probability "
      << "of species presence, with 95% confidence intervals:\n";
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const auto& e = estimates[i];
        char line[256];
        std::snprintf(line, sizeof(line), "%zu. %s (%s): ATE = %.4f, CI95 = [%.4f, %.4f]\n", i + 1,
                      e.treatment.c_str(), bio_long_name(e.treatment).c_str(), e.ate, e.ci95.first,
                      e.ci95.second);
        p << line;
    }
    p << "For each variable above: Write 1 sentence explaining the most likely ecological "
      << "mechanism behind the causal influence. Ensure the explanation is realistic, grounded "
      << "in ecological reasoning, and free from vague generalizations. Respond with a numbered "
      << "list of exactly " << estimates.size()
      << " items in the same order as the variables, one sentence per item, and nothing else.";
    return p.str();
}

std::vector<std::string> render_llm(const std::vector<CausalEstimate>& estimates,
                                    const std::string& species, const LlmConfig& cfg) {
    if (!cfg.configured()) throw LlmUnavailable("no LLM backend configured");
    if (estimates.empty()) return {};

    json body{{"model", cfg.model},
              {"temperature", 0.2},
              {"messages", json::array({json{{"role", "user"},
                                             {"content", build_llm_prompt(estimates, species)}}})}};

    httplib::Client client(cfg.base_url);
    client.set_connection_timeout(cfg.timeout_s, 0);
    client.set_read_timeout(cfg.timeout_s, 0);
    httplib::Headers headers;
    if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

    httplib::Result res;
    for (int attempt = 0; attempt <= cfg.retries; ++attempt) {
        res = client.Post("/chat/completions", headers, body.dump(), "application/json");
        if (res && res->status == 200) break;
    }
    if (!res || res->status != 200)
        throw LlmUnavailable("LLM backend error" +
                             (res ? (": HTTP " + std::to_string(res->status)) : " (no response)"));

    std::string content;
    try {
        const json reply = json::parse(res->body);
        content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw LlmMalformed(std::string("unexpected chat-completion payload: ") + e.what());
    }

    // parse "1. text" / "2) text" lines; must yield one item per estimate
    std::vector<std::string> items;
    static const std::regex item_re(R"(^\s*(\d+)[.)]\s*(.+?)\s*$)");
    std::istringstream lines(content);
    std::string line;
    while (std::getline(lines, line)) {
        std::smatch m;
        if (std::regex_match(line, m, item_re)) items.push_back(m[2].str());
    }
    if (items.size() != estimates.size())
        throw LlmMalformed("expected a numbered list of " + std::to_string(estimates.size()) +
                           " items, got " + std::to_string(items.size()));
    return items;
}

std::vector<Explanation> make_explanations(const std::vector<CausalEstimate>& estimates,
                                           const std::string& species, const LlmConfig& cfg) {
    std::vector<Explanation> out;
    out.reserve(estimates.size());
    for (const auto& e : estimates) {
        Explanation ex;
        ex.variable = e.treatment;
        ex.long_name = bio_long_name(e.treatment);
        ex.rule_text = render_rule(e, species);
        ex.source = "rule";
        ex.ate = e.ate;
        out.push_back(std::move(ex));
    }

    if (cfg.configured() && !estimates.empty()) {
        try {
            const auto texts = render_llm(estimates, species, cfg);
            for (std::size_t i = 0; i < out.size(); ++i) {
                out[i].llm_text = texts[i];
                out[i].source = "llm";
            }
        } catch (const Error& e) {
            std::cerr << "[explain] warning: LLM augmentation unavailable (" << e.what()
                      << "); falling back to rule-based text\n";
        }
    }
    return out;
}

}  // namespace habitat
