#include <doctest.h>

#include "magus/action_registry.hpp"
#include "magus/errors.hpp"
#include "support.hpp"

using namespace magus;
using namespace magus::testing;

namespace {

std::vector<std::string> names_of(const ActionCatalog& catalog) {
    std::vector<std::string> out;
    for (const auto& spec : catalog.entries) out.push_back(spec.name);
    return out;
}

}  // namespace

TEST_CASE("built-in catalogs match the action tables") {
    ActionRegistry registry;

    const auto image_reasoning = registry.catalog_for(TaskKind::reasoning(Modality::Image));
    CHECK(names_of(image_reasoning) ==
          std::vector<std::string>{"text_logic_vision_expert", "general_vision_expert",
                                   "cultural_vision_expert", "visual_augmenter"});
    CHECK(image_reasoning.find("visual_augmenter")->behavior ==
          ActionBehavior::GenerativeAugment);

    const auto audio_reasoning = registry.catalog_for(TaskKind::reasoning(Modality::Audio));
    CHECK(names_of(audio_reasoning) ==
          std::vector<std::string>{"general_audio_expert", "speech_audio_expert",
                                   "music_audio_expert", "audio_augmenter"});

    const auto video_reasoning = registry.catalog_for(TaskKind::reasoning(Modality::Video));
    CHECK(names_of(video_reasoning) ==
          std::vector<std::string>{"narrative_event_reasoning_expert", "role_interaction_expert",
                                   "goal_procedure_expert", "emotion_context_expert",
                                   "video_augmenter"});

    const auto image_generation = registry.catalog_for(TaskKind::generation(Modality::Image));
    CHECK(names_of(image_generation) ==
          std::vector<std::string>{"image_structure_expert", "image_visual_expert",
                                   "image_scene_expert"});
    for (const auto& spec : image_generation.entries) {
        CHECK(spec.behavior == ActionBehavior::PromptRefine);
    }

    const auto video_generation = registry.catalog_for(TaskKind::generation(Modality::Video));
    CHECK(names_of(video_generation) ==
          std::vector<std::string>{"video_structure_expert", "video_visual_expert",
                                   "video_scene_expert"});

    const auto audio_generation = registry.catalog_for(TaskKind::generation(Modality::Audio));
    CHECK(names_of(audio_generation) ==
          std::vector<std::string>{"audio_semantic_expert", "audio_production_expert",
                                   "audio_aesthetic_expert"});
    for (const auto& spec : audio_generation.entries) {
        CHECK(spec.behavior == ActionBehavior::PromptRefine);
    }
}

TEST_CASE("pure-text reasoning ships an advice-only default catalog") {
    ActionRegistry registry;
    const auto text = registry.catalog_for(TaskKind::reasoning(Modality::Text));
    CHECK(text.entries.size() == 3);
    for (const auto& spec : text.entries) {
        CHECK(spec.behavior == ActionBehavior::ExpertAdvice);
        CHECK(spec.name.find("augmenter") == std::string::npos);
    }
}

TEST_CASE("text generation is the speaker's job, not a search catalog") {
    ActionRegistry registry;
    CHECK_THROWS_AS(registry.catalog_for(TaskKind::generation(Modality::Text)),
                    UnsupportedKind);
}

TEST_CASE("render_candidates lists unused actions in catalog order") {
    ActionRegistry registry;
    const auto catalog = registry.catalog_for(TaskKind::reasoning(Modality::Image));

    const std::string all = render_candidates(catalog, {});
    CHECK(all.rfind("text_logic_vision_expert:", 0) == 0);
    CHECK(std::count(all.begin(), all.end(), '\n') == 3);  // 4 lines

    CHECK(render_candidates(catalog, {"text_logic_vision_expert", "general_vision_expert",
                                      "cultural_vision_expert", "visual_augmenter"}) == "");

    const std::string three = render_candidates(catalog, {"visual_augmenter"});
    CHECK(std::count(three.begin(), three.end(), '\n') == 2);
    CHECK(three.find("visual_augmenter") == std::string::npos);
    CHECK(three.rfind("text_logic_vision_expert:", 0) == 0);
}

TEST_CASE("render_candidates line count equals catalog minus exclusions") {
    ActionRegistry registry;
    const auto catalog = registry.catalog_for(TaskKind::reasoning(Modality::Video));
    const auto names = names_of(catalog);
    for (unsigned mask = 0; mask < (1u << names.size()); ++mask) {
        std::set<std::string> exclude;
        for (unsigned bit = 0; bit < names.size(); ++bit) {
            if (mask & (1u << bit)) exclude.insert(names[bit]);
        }
        exclude.insert("not_in_catalog");
        const std::string rendered = render_candidates(catalog, exclude);
        const auto expected = names.size() - (exclude.size() - 1);
        const auto lines = rendered.empty()
                               ? 0u
                               : static_cast<unsigned>(
                                     std::count(rendered.begin(), rendered.end(), '\n')) + 1u;
        CHECK(lines == expected);
    }
}

TEST_CASE("catalog extensions are append-only") {
    TempDir dir;
    const auto path = write_json(
        dir.path, "ext.json",
        nlohmann::json::array(
            {{{"name", "ocr_expert"},
              {"description", "Reads small or degraded text in images."},
              {"task_kind", "reasoning"},
              {"modality", "image"},
              {"behavior", "expert_advice"},
              {"agent_role", "ocr_expert"}}}));

    ActionRegistry registry;
    const auto before = registry.catalog_for(TaskKind::reasoning(Modality::Image));
    registry.load_extensions(path);
    const auto after = registry.catalog_for(TaskKind::reasoning(Modality::Image));

    CHECK(after.entries.size() == before.entries.size() + 1);
    // Existing entries keep their positions; the extension lands at the end.
    for (std::size_t i = 0; i < before.entries.size(); ++i) {
        CHECK(after.entries[i].name == before.entries[i].name);
    }
    CHECK(after.entries.back().name == "ocr_expert");
}

TEST_CASE("extension constraints are enforced") {
    ActionRegistry registry;

    ActionSpec bad_augmenter;
    bad_augmenter.name = "fancy_augmenter";
    bad_augmenter.description = "claims to augment";
    bad_augmenter.task_kind = TaskKind::reasoning(Modality::Image);
    bad_augmenter.behavior = ActionBehavior::ExpertAdvice;  // name says otherwise
    bad_augmenter.agent_role = "fancy_augmenter";
    CHECK_THROWS_AS(registry.add(bad_augmenter), Error);

    ActionSpec bad_generation;
    bad_generation.name = "image_palette_expert";
    bad_generation.description = "adjusts palettes";
    bad_generation.task_kind = TaskKind::generation(Modality::Image);
    bad_generation.behavior = ActionBehavior::ExpertAdvice;  // generation must refine prompts
    bad_generation.agent_role = "image_palette_expert";
    CHECK_THROWS_AS(registry.add(bad_generation), Error);

    ActionSpec duplicate;
    duplicate.name = "general_vision_expert";
    duplicate.description = "again";
    duplicate.task_kind = TaskKind::reasoning(Modality::Image);
    duplicate.behavior = ActionBehavior::ExpertAdvice;
    duplicate.agent_role = "general_vision_expert";
    CHECK_THROWS_AS(registry.add(duplicate), Error);
}
