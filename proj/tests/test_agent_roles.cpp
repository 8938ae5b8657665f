#include <doctest.h>

#include "magus/agent_roles.hpp"
#include "magus/errors.hpp"
#include "support.hpp"

using namespace magus;
using namespace magus::testing;

TEST_CASE("default registry carries the canonical pipeline prompts") {
    const RoleRegistry registry = RoleRegistry::defaults();

    CHECK(registry.role(roles::kSummarizer)
              .system_prompt.rfind("You are a Final Answer Agent", 0) == 0);
    CHECK(registry.role(roles::kGeneralAnswer).system_prompt.rfind("You are Qwen", 0) == 0);

    const auto& audio_judger = registry.role(roles::judger(Modality::Audio)).system_prompt;
    CHECK(audio_judger.find("(1) Content Enjoyment (CE)") != std::string::npos);
    CHECK(judgement_dimensions(Modality::Audio).front() == "Content Enjoyment (CE)");

    const auto& video_judger = registry.role(roles::judger(Modality::Video)).system_prompt;
    CHECK(video_judger.find("sixteen dimensions") != std::string::npos);
    CHECK(judgement_dimensions(Modality::Video).size() == 16);

    CHECK(registry.role(roles::kSelectorReasoning).output_shape == OutputShape::SelectorJson);
    CHECK(registry.role(roles::scorer(Modality::Image)).output_shape == OutputShape::ScoreScalar);
    CHECK(registry.role(roles::kPlanner).output_shape == OutputShape::PlanJson);
    CHECK(registry.role(roles::kReflector).output_shape == OutputShape::VerdictJson);

    // Every built-in action has a role of its own.
    CHECK(registry.has("visual_augmenter"));
    CHECK(registry.has("audio_semantic_expert"));
}

TEST_CASE("prompt overrides replace one role and leave the rest untouched") {
    TempDir dir;
    const auto path = write_json(dir.path, "overrides.json",
                                 nlohmann::json{{"selector_reasoning", "pick wisely"},
                                                {"brand_new_role", "you are new"}});
    const RoleRegistry registry = RoleRegistry::load(path);
    CHECK(registry.role(roles::kSelectorReasoning).system_prompt == "pick wisely");
    CHECK(registry.role(roles::kSummarizer)
              .system_prompt.rfind("You are a Final Answer Agent", 0) == 0);
    CHECK(registry.role("brand_new_role").system_prompt == "you are new");
}

TEST_CASE("malformed overrides are rejected") {
    TempDir dir;
    const auto bad_value =
        write_json(dir.path, "bad1.json", nlohmann::json{{"speaker", 42}});
    CHECK_THROWS_AS(RoleRegistry::load(bad_value), ConfigError);

    const auto bad_root = write_text(dir.path, "bad2.json", "[1,2,3]");
    CHECK_THROWS_AS(RoleRegistry::load(bad_root), ConfigError);

    const auto empty_prompt =
        write_json(dir.path, "bad3.json", nlohmann::json{{"speaker", ""}});
    CHECK_THROWS_AS(RoleRegistry::load(empty_prompt), ConfigError);
}

TEST_CASE("every action role resolves with a non-empty prompt") {
    const RoleRegistry registry = RoleRegistry::defaults();
    ActionRegistry actions;
    CHECK_NOTHROW(check_role_integrity(registry, actions));

    ActionSpec orphan;
    orphan.name = "orphan_expert";
    orphan.description = "nobody implements me";
    orphan.task_kind = TaskKind::reasoning(Modality::Text);
    orphan.behavior = ActionBehavior::ExpertAdvice;
    orphan.agent_role = "missing_role";
    actions.add(orphan);
    CHECK_THROWS_AS(check_role_integrity(registry, actions), Error);
}

TEST_CASE("parse_selector accepts the documented JSON shape") {
    const std::vector<std::string> candidates = {"general_vision_expert", "visual_augmenter"};

    CHECK(parse_selector(R"({"selected_experts": ["general_vision_expert"]})", candidates)
              .expert == "general_vision_expert");

    // Leading prose is tolerated; the first JSON object wins.
    CHECK(parse_selector(R"(I choose: {"selected_experts": ["visual_augmenter"]})", candidates)
              .expert == "visual_augmenter");

    // Nested objects are found too.
    CHECK(parse_selector(R"({"thoughts": {"selected_experts": ["visual_augmenter"]}})",
                         candidates)
              .expert == "visual_augmenter");
}

TEST_CASE("parse_selector error taxonomy") {
    const std::vector<std::string> candidates = {"a", "b"};
    CHECK_THROWS_AS(parse_selector("no structure here", candidates), NoJsonFound);
    CHECK_THROWS_AS(parse_selector(R"({"selected_experts": []})", candidates), EmptySelection);
    CHECK_THROWS_AS(parse_selector(R"({"selected_experts": "a"})", candidates), EmptySelection);
    try {
        parse_selector(R"({"selected_experts": ["unlisted_expert"]})", candidates);
        FAIL("expected UnknownExpert");
    } catch (const UnknownExpert& e) {
        CHECK(e.name() == "unlisted_expert");
    }
    CHECK_THROWS_AS(parse_selector(R"({"selected_experts": ["a"]})", {}), Error);
}

TEST_CASE("parse_score takes the first decimal literal and clamps") {
    CHECK(parse_score("0.85").value() == 0.85);
    CHECK(parse_score("Score: 0.42\n").value() == 0.42);
    const ScoreValue clamped = parse_score("1.3");
    CHECK(clamped.value() == 1.0);
    CHECK(clamped.clamped());
    CHECK(parse_score("0.5 because the colors match").value() == 0.5);
    CHECK_THROWS_AS(parse_score("excellent"), NoNumberFound);
    CHECK_THROWS_AS(parse_score(""), NoNumberFound);
}

TEST_CASE("parse_score inverts two-decimal rendering across the whole grid") {
    for (int i = 0; i <= 100; ++i) {
        const double value = i / 100.0;
        CHECK(parse_score(render_score(value)).value() == value);
    }
}

TEST_CASE("parse_judgement splits on the modality's dimension headings") {
    const std::string image_report =
        "Object Presence: All objects are there.\n"
        "Counting: Two dogs as asked.\n"
        "Color Matching: The dog is blue.\n"
        "Position Relation: Dog sits on the grass.\n"
        "Attribute Binding: Blue binds to dog.\n"
        "Complex Compliance: Scene is complete.";
    const JudgementReport report = parse_judgement(image_report, Modality::Image);
    REQUIRE(report.dimensions.size() == 6);
    CHECK(report.dimensions[0].name == "Object Presence");
    CHECK(report.dimensions[0].analysis == "All objects are there.");
    CHECK(report.dimensions[5].name == "Complex Compliance");
    CHECK(report.raw == image_report);
}

TEST_CASE("parse_judgement keeps raw text when nothing parses") {
    const JudgementReport report = parse_judgement("a shapeless blob of text", Modality::Image);
    CHECK(report.dimensions.empty());
    CHECK(report.raw == "a shapeless blob of text");
}

TEST_CASE("parse_judgement handles all sixteen video headings") {
    std::string report_text;
    for (const auto& name : judgement_dimensions(Modality::Video)) {
        report_text += name + ": fine.\n";
    }
    const JudgementReport report = parse_judgement(report_text, Modality::Video);
    CHECK(report.dimensions.size() == 16);
    CHECK(report.dimensions[2].name == "Temporal Flickering");
}

TEST_CASE("parse_judgement handles the audio heading format") {
    const std::string audio_report =
        "Content Enjoyment (CE): pleasant.\nProduction Quality (PQ): clean mix.";
    const JudgementReport report = parse_judgement(audio_report, Modality::Audio);
    REQUIRE(report.dimensions.size() == 2);
    CHECK(report.dimensions[0].name == "Content Enjoyment (CE)");
    CHECK(report.dimensions[1].analysis == "clean mix.");
}
