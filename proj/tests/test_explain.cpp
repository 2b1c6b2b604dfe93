#include <doctest.h>

#include "habitat/explain.hpp"

#include <cmath>

using namespace habitat;

namespace {

CausalEstimate estimate_of(const std::string& bio, double ate) {
    CausalEstimate e;
    e.treatment = bio;
    e.ate = ate;
    e.ci95 = {ate - 0.02, ate + 0.02};
    return e;
}

}  // namespace

TEST_CASE("band_for boundary behavior") {
    CHECK(band_for(0.13).label == "strong+");
    CHECK(band_for(0.1).label == "strong+");    // lower edge closed
    CHECK(band_for(1.0).label == "strong+");
    CHECK(band_for(0.09).label == "moderate+");
    CHECK(band_for(0.05).label == "moderate+");  // lower edge closed
    CHECK(band_for(0.049).label == "weak+");
    CHECK(band_for(1e-12).label == "weak+");
    CHECK(band_for(0.0).label == "negligible");
    CHECK(band_for(-1e-12).label == "weak-");
    CHECK(band_for(-0.03).label == "weak-");
    CHECK(band_for(-0.05).label == "moderate-");  // upper edge closed
    CHECK(band_for(-0.09).label == "moderate-");
    CHECK(band_for(-0.1).label == "strong-");     // upper edge closed
    CHECK(band_for(-1.0).label == "strong-");

    CHECK_THROWS_AS(band_for(1.01), OutOfRange);
    CHECK_THROWS_AS(band_for(-1.5), OutOfRange);
    CHECK_THROWS_AS(band_for(std::nan("")), OutOfRange);
}

TEST_CASE("band partition is total on a dense grid over [-1, 1]") {
    const auto& bands = effect_bands();
    for (int i = 0; i <= 10000; ++i) {
        const double ate = -1.0 + 2.0 * i / 10000.0;
        const EffectBand& band = band_for(ate);  // must not throw
        // each value maps to exactly one band of the table
        int matches = 0;
        for (const auto& b : bands)
            if (&b == &band) ++matches;
        CHECK(matches == 1);
    }
}

TEST_CASE("render_rule fills the template verbatim") {
    CHECK(render_rule(estimate_of("BIO11", 0.13), "Ajuga reptans") ==
          "High Mean Temperature of Coldest Quarter strongly promotes Ajuga reptans presence. "
          "This likely reflects a core habitat requirement.");
    CHECK(render_rule(estimate_of("BIO10", -0.03), "Ajuga reptans") ==
          "Mean Temperature of Warmest Quarter has a weak negative effect.");
    CHECK(render_rule(estimate_of("BIO2", 0.0), "Osmia parietina") ==
          "Mean Diurnal Range has a negligible effect on Osmia parietina presence.");
    CHECK_THROWS_AS(render_rule(estimate_of("BIO99", 0.1), "x"), UnknownVariable);
}

TEST_CASE("template integrity: positive bands say promotes, negative bands say negative") {
    for (double ate : {0.2, 0.07, 0.01}) {
        const auto text = render_rule(estimate_of("BIO5", ate), "Testus specius");
        CHECK(text.find("promotes") != std::string::npos);
        CHECK(text.find("Max Temperature of Warmest Month") != std::string::npos);
    }
    for (double ate : {-0.01, -0.07, -0.5}) {
        const auto text = render_rule(estimate_of("BIO5", ate), "Testus specius");
        CHECK(text.find("negative") != std::string::npos);
        CHECK(text.find("Max Temperature of Warmest Month") != std::string::npos);
    }
}

TEST_CASE("llm prompt embeds the constraint sentences and the ATE table") {
    const std::vector<CausalEstimate> effects = {estimate_of("BIO11", 0.13),
                                                 estimate_of("BIO10", -0.03)};
    const std::string prompt = build_llm_prompt(effects, "Ajuga reptans");
    CHECK(prompt.find("Ensure the explanation is realistic, grounded in ecological reasoning, "
                      "and free from vague generalizations") != std::string::npos);
    CHECK(prompt.find("Write 1 sentence explaining the most likely ecological mechanism behind "
                      "the causal influence") != std::string::npos);
    CHECK(prompt.find("BIO11") != std::string::npos);
    CHECK(prompt.find("0.13") != std::string::npos);
    CHECK(prompt.find("Ajuga reptans") != std::string::npos);
}

TEST_CASE("make_explanations without a backend stays rule-only") {
    const std::vector<CausalEstimate> effects = {estimate_of("BIO11", 0.13),
                                                 estimate_of("BIO4", -0.2)};
    const auto explanations = make_explanations(effects, "Ajuga reptans", LlmConfig{});
    REQUIRE(explanations.size() == 2);
    for (const auto& ex : explanations) {
        CHECK(ex.source == "rule");
        CHECK_FALSE(ex.llm_text.has_value());
        CHECK_FALSE(ex.rule_text.empty());
    }
    CHECK(explanations[0].variable == "BIO11");
    CHECK(explanations[0].long_name == "Mean Temperature of Coldest Quarter");
    CHECK(explanations[1].ate == -0.2);
}
