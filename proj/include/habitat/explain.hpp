#pragma once
// Plain-language explanations: a fixed 7-band template table over the ATE
// scale, plus optional augmentation from a chat-completion LLM backend with
// constrained prompting. Rule text is always present; LLM text only adds.

#include <optional>
#include <string>
#include <vector>

#include "habitat/causal.hpp"

namespace habitat {

struct EffectBand {
    double lower = 0.0, upper = 0.0;
    bool lower_closed = false, upper_closed = false;
    std::string label;     // e.g. "strong+"
    std::string tmpl;      // with {BIO} and {SP} placeholders
};

// The 7 bands partitioning [-1, 1]:
//   [0.1, 1] strong+ | [0.05, 0.1) moderate+ | (0, 0.05) weak+ | {0} negligible
//   (-0.05, 0) weak- | (-0.1, -0.05] moderate- | [-1, -0.1] strong-
const std::vector<EffectBand>& effect_bands();

const EffectBand& band_for(double ate);  // throws OutOfRange outside [-1, 1]

// Fills the band template with the variable's long name and the species.
std::string render_rule(const CausalEstimate& est, const std::string& species);

struct LlmConfig {
    std::string base_url;   // OpenAI-style: POST {base_url}/chat/completions
    std::string model = "llama-3.3-70b";
    std::string api_key;
    int timeout_s = 30;
    int retries = 1;

    bool configured() const { return !base_url.empty(); }
    static LlmConfig from_env();  // HABITAT_LLM_BASE_URL / _MODEL / _API_KEY
};

// One request covering all effects; the response must be a numbered list
// with exactly one item per effect. Throws LlmUnavailable / LlmMalformed.
std::vector<std::string> render_llm(const std::vector<CausalEstimate>& estimates,
                                    const std::string& species, const LlmConfig& cfg);

// Prompt text, exposed for tests.
std::string build_llm_prompt(const std::vector<CausalEstimate>& estimates,
                             const std::string& species);

struct Explanation {
    std::string variable;   // "BIO11"
    std::string long_name;  // "Mean Temperature of Coldest Quarter"
    std::string rule_text;
    std::optional<std::string> llm_text;
    std::string source;     // "rule" or "llm"
    double ate = 0.0;
};

// Rule text always; LLM augmentation when configured, with silent fallback
// to rule-only on backend failure (a warning is logged, never an error).
std::vector<Explanation> make_explanations(const std::vector<CausalEstimate>& estimates,
                                           const std::string& species, const LlmConfig& cfg);

}  // namespace habitat
