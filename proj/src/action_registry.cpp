#include "magus/action_registry.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "magus/errors.hpp"

namespace magus {

std::string to_string(ActionBehavior behavior) {
    switch (behavior) {
        case ActionBehavior::ExpertAdvice: return "expert_advice";
        case ActionBehavior::GenerativeAugment: return "generative_augment";
        case ActionBehavior::PromptRefine: return "prompt_refine";
    }
    return "expert_advice";
}

ActionBehavior action_behavior_from_string(std::string_view s) {
    if (s == "expert_advice") return ActionBehavior::ExpertAdvice;
    if (s == "generative_augment") return ActionBehavior::GenerativeAugment;
    if (s == "prompt_refine") return ActionBehavior::PromptRefine;
    throw Error("unknown action behavior '" + std::string(s) + "'");
}

std::vector<ActionSpec> ActionCatalog::unused(const std::vector<std::string>& used_names) const {
    std::vector<ActionSpec> out;
    for (const auto& spec : entries) {
        if (std::find(used_names.begin(), used_names.end(), spec.name) == used_names.end()) {
            out.push_back(spec);
        }
    }
    return out;
}

const ActionSpec* ActionCatalog::find(const std::string& name) const {
    for (const auto& spec : entries) {
        if (spec.name == name) return &spec;
    }
    return nullptr;
}

int ActionCatalog::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

namespace {

ActionSpec make(const char* name, TaskKind kind, ActionBehavior behavior, const char* desc) {
    return ActionSpec{name, desc, kind, behavior, name};
}

std::vector<ActionSpec> build_default_table() {
    using B = ActionBehavior;
    const auto rimg = TaskKind::reasoning(Modality::Image);
    const auto raud = TaskKind::reasoning(Modality::Audio);
    const auto rvid = TaskKind::reasoning(Modality::Video);
    const auto rtxt = TaskKind::reasoning(Modality::Text);
    const auto gimg = TaskKind::generation(Modality::Image);
    const auto gvid = TaskKind::generation(Modality::Video);
    const auto gaud = TaskKind::generation(Modality::Audio);

    return {
        make("text_logic_vision_expert", rimg, B::ExpertAdvice,
             "Strong in logical reasoning, character recognition, code-related visual "
             "understanding."),
        make("general_vision_expert", rimg, B::ExpertAdvice,
             "Specialized in basic visual understanding—object existence, counting, spatial "
             "positioning, and scene layout."),
        make("cultural_vision_expert", rimg, B::ExpertAdvice,
             "Skilled in interpreting cultural elements, artistic styles, and historical "
             "landmarks. Also capable of general vision tasks."),
        make("visual_augmenter", rimg, B::GenerativeAugment,
             "An auxiliary visual generator that can produce new high-resolution images to "
             "support your reasoning. Use this if the visual content is unclear or missing "
             "details."),

        make("general_audio_expert", raud, B::ExpertAdvice,
             "Specialized in ambient sound perception, environmental acoustics, and physical "
             "event recognition. Skilled at analyzing eco-acoustic cues, temporal sound "
             "patterns, and complex sound scenes."),
        make("speech_audio_expert", raud, B::ExpertAdvice,
             "Expert in human speech comprehension, including speaker role mapping, emotion "
             "tone detection, stress patterns, and factual or conversational content "
             "extraction."),
        make("music_audio_expert", raud, B::ExpertAdvice,
             "Focused on music-related understanding—identifying melody, rhythm, harmony, "
             "instrumentation, genre, lyrics, and structural composition of audio tracks."),
        make("audio_augmenter", raud, B::GenerativeAugment,
             "An auxiliary audio generator that imagines and describes realistic auditory "
             "scenes based on the question and options. Helps synthesize supporting audio for "
             "better inference."),

        make("narrative_event_reasoning_expert", rvid, B::ExpertAdvice,
             "Expert in understanding video narratives and event progressions, including "
             "temporal order and causal relationships."),
        make("role_interaction_expert", rvid, B::ExpertAdvice,
             "Expert in analyzing roles, behaviors, and social or functional interactions "
             "between people and objects in videos."),
        make("goal_procedure_expert", rvid, B::ExpertAdvice,
             "Expert in identifying step-by-step procedures and the underlying goals of "
             "actions observed in video sequences."),
        make("emotion_context_expert", rvid, B::ExpertAdvice,
             "Expert in interpreting emotional cues, situational context, and their impact on "
             "behavior through visual analysis."),
        make("video_augmenter", rvid, B::GenerativeAugment,
             "An auxiliary video generator that creates realistic dynamic scenes based on the "
             "question and context. Helps generate supportive video clips when visual motion, "
             "temporal dynamics, or scene evolution are critical for accurate reasoning."),

        // Pure-text reasoning has no counterpart table; this advice-only
        // subset is the shipped default and extensible through config.
        make("general_knowledge_expert", rtxt, B::ExpertAdvice,
             "Broad factual knowledge across science, history, geography, and everyday "
             "domains. Use this expert when the question hinges on facts rather than "
             "derivation."),
        make("logical_reasoning_expert", rtxt, B::ExpertAdvice,
             "Specialized in deduction, multi-step inference, arithmetic, and consistency "
             "checking. Use this expert when the question requires working through a chain of "
             "reasoning."),
        make("linguistic_analysis_expert", rtxt, B::ExpertAdvice,
             "Focused on language itself—reading comprehension, ambiguity, tone, and "
             "intent. Use this expert when the difficulty lies in interpreting the text of "
             "the question."),

        make("image_structure_expert", gimg, B::PromptRefine,
             "Responsible for improving the structural clarity of the prompt, including the "
             "number of objects, spatial relationships (left/right/above/below), and proper "
             "binding between objects and their attributes. Use this expert when the image "
             "shows incorrect positions, wrong object counts, or confused attribute "
             "associations."),
        make("image_visual_expert", gimg, B::PromptRefine,
             "Focuses on refining visual details in the prompt, such as color accuracy, size "
             "descriptions, shape, material, or texture. Use this expert when the generated "
             "image fails to match the visual appearance described in the prompt (e.g., wrong "
             "colors or missing visual traits)."),
        make("image_scene_expert", gimg, B::PromptRefine,
             "Improves overall scene coherence and completeness by adding background "
             "elements, contextual settings, or enhancing the realism of object placement. "
             "Use this expert when the image appears sparse, disconnected, or lacks "
             "environmental grounding."),

        make("video_structure_expert", gvid, B::PromptRefine,
             "Enhances the structural consistency of the video by focusing on subject "
             "identity, object count, spatial layout, and accurate human-object interactions "
             "across frames."),
        make("video_visual_expert", gvid, B::PromptRefine,
             "Ensures consistency and quality of visual features such as color, appearance "
             "style, clarity, and aesthetic fidelity across time in the video."),
        make("video_scene_expert", gvid, B::PromptRefine,
             "Improves temporal coherence and background consistency by addressing motion "
             "smoothness, flickering, and maintaining a unified scene style and realism "
             "throughout the video."),

        make("audio_semantic_expert", gaud, B::PromptRefine,
             "Improves the semantic alignment between the audio and the prompt. Use this "
             "expert when the generated audio fails to reflect the intended meaning, emotion, "
             "or context described, such as missing the expected sound types, mood, or "
             "narrative structure."),
        make("audio_production_expert", gaud, B::PromptRefine,
             "Enhances clarity, layering, and technical structure of the described audio. Use "
             "this expert when the audio lacks proper timing, multi-source coordination, or "
             "sounds muddy and poorly composed."),
        make("audio_aesthetic_expert", gaud, B::PromptRefine,
             "Focuses on the overall listening experience and emotional/aesthetic resonance. "
             "Use this expert when the audio sounds bland, lacks expressiveness, or fails to "
             "create the desired atmosphere or artistic effect."),
    };
}

void check_spec(const ActionSpec& spec) {
    const bool augmenter_name = spec.name.size() >= 9 &&
                                spec.name.rfind("augmenter") == spec.name.size() - 9;
    if (augmenter_name && spec.behavior != ActionBehavior::GenerativeAugment) {
        throw Error("action '" + spec.name + "' ends in augmenter but is not generative");
    }
    if (spec.task_kind.is_generation() && spec.behavior != ActionBehavior::PromptRefine) {
        throw Error("generation action '" + spec.name + "' must be a prompt refiner");
    }
    if (spec.name.empty() || spec.agent_role.empty()) {
        throw Error("action specs need a name and an agent role");
    }
}

}  // namespace

const std::vector<ActionSpec>& default_action_table() {
    static const std::vector<ActionSpec> table = build_default_table();
    return table;
}

ActionRegistry::ActionRegistry() : actions_(default_action_table()) {}

void ActionRegistry::add(ActionSpec spec) {
    check_spec(spec);
    for (const auto& existing : actions_) {
        if (existing.name == spec.name && existing.task_kind == spec.task_kind) {
            throw Error("action '" + spec.name + "' already registered for " +
                        to_string(spec.task_kind));
        }
    }
    actions_.push_back(std::move(spec));
}

void ActionRegistry::load_extensions(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open action extension file " + file.string());
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("action extension parse error: " + std::string(e.what()));
    }
    if (!parsed.is_array()) throw ConfigError("action extension file must be a JSON list");
    for (const auto& item : parsed) {
        ActionSpec spec;
        spec.name = item.at("name").get<std::string>();
        spec.description = item.at("description").get<std::string>();
        const auto type = item.at("task_kind").get<std::string>();
        const auto modality = modality_from_string(item.at("modality").get<std::string>());
        if (type == "reasoning") spec.task_kind = TaskKind::reasoning(modality);
        else if (type == "generation") spec.task_kind = TaskKind::generation(modality);
        else throw ConfigError("task_kind must be reasoning or generation");
        spec.behavior = action_behavior_from_string(item.at("behavior").get<std::string>());
        spec.agent_role = item.at("agent_role").get<std::string>();
        add(std::move(spec));
    }
}

ActionCatalog ActionRegistry::catalog_for(const TaskKind& kind) const {
    if (kind == TaskKind::generation(Modality::Text)) {
        throw UnsupportedKind("generation:text is produced by the speaker, not searched");
    }
    ActionCatalog catalog;
    catalog.kind = kind;
    for (const auto& spec : actions_) {
        if (spec.task_kind == kind) catalog.entries.push_back(spec);
    }
    if (catalog.entries.empty()) {
        throw UnsupportedKind("no action catalog for " + to_string(kind));
    }
    return catalog;
}

std::vector<ActionSpec> ActionRegistry::all() const { return actions_; }

std::string render_candidates(const ActionCatalog& catalog, const std::set<std::string>& exclude) {
    std::string out;
    for (const auto& spec : catalog.entries) {
        if (exclude.count(spec.name)) continue;
        if (!out.empty()) out += "\n";
        out += spec.name + ": " + spec.description;
    }
    return out;
}

}  // namespace magus
