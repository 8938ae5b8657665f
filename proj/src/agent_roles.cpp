#include "magus/agent_roles.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <regex>

#include <nlohmann/json.hpp>

#include "magus/errors.hpp"

namespace magus {

namespace roles {

std::string judger(Modality modality) { return "judger_" + to_string(modality); }
std::string scorer(Modality modality) { return "scorer_" + to_string(modality); }
std::string prompt_extender(Modality modality) { return "prompt_extender_" + to_string(modality); }

}  // namespace roles

namespace {

// ---- pipeline agent system prompts ----

const char* kGeneralAnswerPrompt =
    "You are Qwen, a virtual human, capable of perceiving auditory and visual inputs, as well "
    "as generating text and speech.";

const char* kSummarizerPrompt =
    "You are a Final Answer Agent, responsible for producing a single, accurate, and concise "
    "answer to a given user query. Your inputs include: (1) A question (Q), and (2) A "
    "collection of structured outputs from multiple experts (H), which may include factual "
    "observations, reasoning results, or auxiliary suggestions. Your responsibilities are: (1) "
    "Carefully analyze all expert outputs (H) and synthesize a coherent final answer to the "
    "question (Q). (2) You must rely strictly on the content of expert outputs. Do not "
    "hallucinate, speculate, or introduce external knowledge. (3) If conflicting information "
    "exists, apply logical reasoning to determine the most plausible or reliable conclusion. "
    "(4) Your answer must be direct, concise, and clearly address the user's question. (5) You "
    "are not permitted to explain your reasoning process or mention any expert names, roles, "
    "or intermediate content. (6) Do not include system-level descriptions or formatting "
    "instructions in the output. The format should be a single paragraph directly answering "
    "the user's question, grounded entirely in the provided expert information. If the "
    "question is a multiple-choice task, you must answer with the corresponding option letter "
    "only, such as A, B, or C, without any explanation or extra text unless explicitly "
    "requested.";

const char* kSelectorReasoningPrompt =
    "You are an Expert Coordinator Agent. Your task is to improve an insufficient or ambiguous "
    "answer by selecting one module to help generate a better response. You will be provided "
    "with a list of available experts. Your responsibilities are as follows: (1) Read the "
    "user's question and the input data. (2) Analyze what kind of information is missing or "
    "unclear. (3) Select one expert whose capabilities are most helpful for this question. You "
    "must only select from the expert list provided. The output format must be in JSON only: "
    "\"selected_experts\": [\"expert_name\"]. You must only output the structured JSON block "
    "and nothing else. Only one expert should be selected.";

const char* kSelectorGenerationPrompt =
    "You are an Expert Coordinator Agent. Your task is to improve an insufficient or ambiguous "
    "answer by selecting one module to help generate a better response. Context: You will be "
    "provided with a list of available experts. Your responsibilities: Read the user's prompt "
    "and the image's diagnostic report. Analyze what kind of information is missing or "
    "unclear. Select one expert whose capabilities are most helpful for this question. Output "
    "format: JSON only, with the structure \"selected_experts\": [\"expert_name\"]. "
    "Constraints: Only select an expert from the list provided. Only output the structured "
    "JSON block and nothing else. Only select one expert.";

const char* kImageJudgerPrompt =
    "You are a multimodal evaluation agent that evaluates how well a generated image matches a "
    "given text prompt. You receive a description (text prompt) and an image. Evaluation is "
    "based on six dimensions: (1) Object Presence: Are all mentioned objects present? (2) "
    "Counting: Does the number of objects match the prompt? (3) Color Matching: Do object "
    "colors match the description? (4) Position Relation: Are spatial relationships "
    "(left/right/above/below) correct? (5) Attribute Binding: Are attributes like color and "
    "object correctly bound? (6) Complex Compliance: Does the image capture the full scene as "
    "described? For each dimension, you write a short paragraph explaining what matches and "
    "what does not. The format should follow the dimension headings, such as \"Object "
    "Presence: analysis\", with only natural language analysis.";

const char* kImageScorerPrompt =
    "You are a scoring assistant that calculates a final image-text alignment score. Your "
    "input consists of natural language analyses from six dimensions: Object Presence, "
    "Counting, Color Matching, Position Relation, Attribute Binding, and Complex Compliance. "
    "Each section is prefixed with its name. You should read all sections and assess overall "
    "consistency between image and prompt, then output a single final score between 0 and 1. "
    "Output only the score—no explanations, formatting, or intermediate values.";

const char* kVideoJudgerPrompt =
    "You are a multimodal evaluation agent that evaluates how well a generated video aligns "
    "with a text prompt. You receive a description (text prompt) and a video. Evaluation is "
    "based on sixteen dimensions: (1) Subject Consistency – Is the main subject stable "
    "throughout? (2) Background Consistency – Is the background coherent across frames? "
    "(3) Temporal Flickering – Are there flickers or inconsistencies? (4) Motion "
    "Smoothness – Is motion fluid and natural? (5) Dynamic Degree – Does the video "
    "show meaningful change? (6) Aesthetic Quality – Is it visually pleasing? (7) Imaging "
    "Quality – Are frames clear and artifact-free? (8) Object Class Accuracy – Are "
    "object categories correct? (9) Multiple Objects – Are all described objects present? "
    "(10) Human Action Accuracy – Are actions recognizable and correct? (11) Color "
    "Matching – Do colors match the prompt? (12) Spatial Relationship – Are object "
    "positions correct? (13) Scene Accuracy – Is the setting consistent with the prompt? "
    "(14) Temporal Style Consistency – Is the visual style consistent over time? (15) "
    "Appearance Style Consistency – Is appearance stylistically coherent? (16) Overall "
    "Consistency – Does the video holistically match the prompt? For each dimension, "
    "write a paragraph explaining matches and mismatches in natural language.";

const char* kVideoScorerPrompt =
    "You are a scoring assistant that calculates a final video-text alignment score. You "
    "receive natural language evaluations across six dimensions: Object Consistency "
    "(persistence and coherence), Temporal Dynamics (motion and events), Action Accuracy, "
    "Visual-Text Matching, Attribute Continuity, and Scene Composition. Each section is "
    "prefixed accordingly. You should assess overall consistency and output a single score "
    "between 0 and 1. Output only the score. No explanations or extra text.";

const char* kAudioJudgerPrompt =
    "You are a multimodal evaluation agent that evaluates how well an audio clip matches a "
    "text prompt. You receive a description (text prompt) and an audio clip. Evaluation is "
    "based on five dimensions: (1) Content Enjoyment (CE): Is the audio enjoyable in terms of "
    "clarity, emotion, and fluency? (2) Content Usefulness (CU): Is the content relevant and "
    "valuable to the prompt? (3) Production Complexity (PC): Consider sound layering, timing, "
    "and transitions. (4) Production Quality (PQ): Evaluate noise level, clarity, and volume "
    "balance. (5) Semantic Alignment: Does the audio match the prompt in mood and structure? "
    "For each, output a short paragraph in natural language. Use the format \"Content "
    "Enjoyment (CE): <analysis>\" for clarity.";

const char* kAudioScorerPrompt =
    "You are a scoring assistant that calculates a final audio-text alignment score. Your "
    "input consists of natural language analysis across six dimensions: Sound Event Presence, "
    "Timing Accuracy, Acoustic Environment Consistency, Speaker or Source Identity, Attribute "
    "Matching (pitch, emotion, texture), and Semantic Consistency. Each section is prefixed. "
    "You should assess overall consistency and output a single score between 0 and 1. Output "
    "only the score. No explanations or extra text.";

// ---- synthesized prompts (roles deferred to configuration) ----

const char* kTextJudgerPrompt =
    "You are an evaluation agent that judges how well a candidate answer addresses a question. "
    "You receive the question, any available context, and the answer. Evaluation is based on "
    "four dimensions: (1) Relevance: Does the answer address what was asked? (2) Factual "
    "Support: Is the answer consistent with the given context? (3) Completeness: Does it cover "
    "every part of the question? (4) Clarity: Is it unambiguous and direct? For each "
    "dimension, write a short paragraph in natural language, using the format \"Relevance: "
    "<analysis>\".";

const char* kTextScorerPrompt =
    "You are a scoring assistant that calculates a final answer-quality score. Your input "
    "consists of natural language analyses across four dimensions: Relevance, Factual Support, "
    "Completeness, and Clarity. Each section is prefixed with its name. Assess overall answer "
    "quality and output a single score between 0 and 1. Output only the score. No explanations "
    "or extra text.";

const char* kPerceiverPrompt =
    "You are the Perceiver agent. Interpret the user's instruction together with any attached "
    "media and produce a concise semantic summary of the task: what the user wants, which "
    "inputs are involved, and any constraints or preferences stated. Output a short paragraph. "
    "Do not propose a plan.";

const char* kPlannerPrompt =
    "You are the Planner agent. Given the user's instruction and the task summary, produce a "
    "structured task plan. Output JSON only, with the structure {\"intent\": \"...\", "
    "\"steps\": [{\"kind\": \"generate\" or \"understand\", \"modality\": \"image\" | "
    "\"video\" | \"audio\" | \"text\", \"prompt\": \"...\"}]}. Each step prompt must be "
    "self-contained and executable on its own. Cover every output the instruction asks for, "
    "and nothing more. Output only the JSON block.";

const char* kReflectorPrompt =
    "You are the Reflector agent. You receive the user's instruction, the task summary, and a "
    "candidate plan. Check the plan against the instruction for missing steps, redundant "
    "steps, and wrong modalities. Output JSON only: {\"approved\": true | false, \"notes\": "
    "\"revision guidance when not approved\"}.";

const char* kSpeakerPrompt =
    "You are the Speaker agent. You receive the user's instruction, the inferred intent, and "
    "the results of every executed step, including answers and generated artifacts referenced "
    "by id. Compose one coherent response that answers the instruction, summarizes the "
    "results, and refers to produced artifacts by their ids. Output only the response.";

std::string extender_prompt(Modality modality) {
    return "You are a prompt expansion assistant for " + to_string(modality) +
           " generation. Expand the user's short prompt into a rich, detailed generation "
           "prompt: make subjects, attributes, composition, and atmosphere explicit while "
           "preserving the original intent. Do not add requirements the user did not imply. "
           "Output only the expanded prompt.";
}

std::string advice_prompt(const ActionSpec& spec) {
    return "You are the " + spec.name + " agent. " + spec.description +
           " You receive the original input, the user's question, and the current candidate "
           "answer. Provide focused, factual analysis from your specialty that helps answer "
           "the question. Be concrete and concise.";
}

std::string augmenter_prompt(const ActionSpec& spec) {
    return "You are the " + spec.name + " agent. " + spec.description +
           " Based on the question and the available context, write one generation prompt "
           "describing the auxiliary " + to_string(spec.task_kind.modality) +
           " content that would best support answering the question. Output only the "
           "generation prompt.";
}

std::string refiner_prompt(const ActionSpec& spec) {
    return "You are the " + spec.name + " agent. " + spec.description +
           " You receive the user's original prompt, the current generation prompt, and the "
           "judgement report of the latest output. Rewrite the generation prompt so it fixes "
           "the issues identified in the judgement while preserving the user's intent. Output "
           "only the revised prompt.";
}

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace

nlohmann::json first_json_object_with_key(const std::string& text, const std::string& key) {
    for (auto start = text.find('{'); start != std::string::npos;
         start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        std::size_t end = std::string::npos;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}') {
                if (--depth == 0) {
                    end = i;
                    break;
                }
            }
        }
        if (end == std::string::npos) continue;
        auto parsed = nlohmann::json::parse(text.substr(start, end - start + 1), nullptr,
                                            /*allow_exceptions=*/false);
        if (parsed.is_discarded() || !parsed.is_object()) continue;
        if (parsed.contains(key)) return parsed;
    }
    return nlohmann::json();
}

RoleRegistry RoleRegistry::defaults() {
    RoleRegistry registry;
    auto add = [&](std::string name, std::string prompt, OutputShape shape) {
        registry.roles_[name] = AgentRole{name, std::move(prompt), shape};
    };

    add(roles::kGeneralAnswer, kGeneralAnswerPrompt, OutputShape::FreeText);
    add(roles::kSummarizer, kSummarizerPrompt, OutputShape::FreeText);
    add(roles::kSelectorReasoning, kSelectorReasoningPrompt, OutputShape::SelectorJson);
    add(roles::kSelectorGeneration, kSelectorGenerationPrompt, OutputShape::SelectorJson);

    add(roles::judger(Modality::Image), kImageJudgerPrompt, OutputShape::JudgementReport);
    add(roles::scorer(Modality::Image), kImageScorerPrompt, OutputShape::ScoreScalar);
    add(roles::judger(Modality::Video), kVideoJudgerPrompt, OutputShape::JudgementReport);
    add(roles::scorer(Modality::Video), kVideoScorerPrompt, OutputShape::ScoreScalar);
    add(roles::judger(Modality::Audio), kAudioJudgerPrompt, OutputShape::JudgementReport);
    add(roles::scorer(Modality::Audio), kAudioScorerPrompt, OutputShape::ScoreScalar);
    add(roles::judger(Modality::Text), kTextJudgerPrompt, OutputShape::JudgementReport);
    add(roles::scorer(Modality::Text), kTextScorerPrompt, OutputShape::ScoreScalar);

    for (Modality m : {Modality::Image, Modality::Video, Modality::Audio}) {
        add(roles::prompt_extender(m), extender_prompt(m), OutputShape::FreeText);
    }

    add(roles::kPerceiver, kPerceiverPrompt, OutputShape::FreeText);
    add(roles::kPlanner, kPlannerPrompt, OutputShape::PlanJson);
    add(roles::kReflector, kReflectorPrompt, OutputShape::VerdictJson);
    add(roles::kSpeaker, kSpeakerPrompt, OutputShape::FreeText);

    for (const auto& spec : default_action_table()) {
        switch (spec.behavior) {
            case ActionBehavior::ExpertAdvice:
                add(spec.agent_role, advice_prompt(spec), OutputShape::FreeText);
                break;
            case ActionBehavior::GenerativeAugment:
                add(spec.agent_role, augmenter_prompt(spec), OutputShape::FreeText);
                break;
            case ActionBehavior::PromptRefine:
                add(spec.agent_role, refiner_prompt(spec), OutputShape::FreeText);
                break;
        }
    }
    return registry;
}

RoleRegistry RoleRegistry::load(const std::optional<std::filesystem::path>& overrides) {
    RoleRegistry registry = defaults();
    if (overrides) registry.apply_overrides(*overrides);
    return registry;
}

bool RoleRegistry::has(const std::string& name) const { return roles_.count(name) > 0; }

const AgentRole& RoleRegistry::role(const std::string& name) const {
    auto it = roles_.find(name);
    if (it == roles_.end()) throw Error("no agent role named '" + name + "'");
    return it->second;
}

std::vector<std::string> RoleRegistry::names() const {
    std::vector<std::string> out;
    out.reserve(roles_.size());
    for (const auto& [name, _] : roles_) out.push_back(name);
    return out;
}

void RoleRegistry::set_prompt(const std::string& name, const std::string& prompt) {
    if (prompt.empty()) throw ConfigError("system prompt for '" + name + "' is empty");
    auto it = roles_.find(name);
    if (it == roles_.end()) {
        roles_[name] = AgentRole{name, prompt, OutputShape::FreeText};
    } else {
        it->second.system_prompt = prompt;
    }
}

void RoleRegistry::apply_overrides(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open prompt override file " + file.string());
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("prompt override parse error: " + std::string(e.what()));
    }
    if (!parsed.is_object()) throw ConfigError("prompt override file must be a JSON object");
    for (const auto& [name, value] : parsed.items()) {
        if (!value.is_string()) {
            throw ConfigError("override for role '" + name + "' must be a string");
        }
        set_prompt(name, value.get<std::string>());
    }
}

void check_role_integrity(const RoleRegistry& registry, const ActionRegistry& actions) {
    const char* pipeline[] = {roles::kGeneralAnswer, roles::kSummarizer,
                              roles::kSelectorReasoning, roles::kSelectorGeneration,
                              roles::kSpeaker, roles::kPerceiver, roles::kPlanner,
                              roles::kReflector};
    for (const char* name : pipeline) {
        if (!registry.has(name)) throw Error(std::string("pipeline role missing: ") + name);
    }
    for (Modality m : {Modality::Image, Modality::Video, Modality::Audio}) {
        for (const auto& name : {roles::judger(m), roles::scorer(m), roles::prompt_extender(m)}) {
            if (!registry.has(name)) throw Error("pipeline role missing: " + name);
        }
    }
    for (const auto& spec : actions.all()) {
        if (!registry.has(spec.agent_role)) {
            throw Error("action '" + spec.name + "' names unregistered role '" +
                        spec.agent_role + "'");
        }
        if (registry.role(spec.agent_role).system_prompt.empty()) {
            throw Error("role '" + spec.agent_role + "' has an empty system prompt");
        }
    }
}

SelectorChoice parse_selector(const std::string& text,
                              const std::vector<std::string>& candidates) {
    if (candidates.empty()) throw Error("parse_selector requires a non-empty candidate list");
    const auto obj = first_json_object_with_key(text, "selected_experts");
    if (obj.is_null()) throw NoJsonFound();
    const auto& selected = obj["selected_experts"];
    if (!selected.is_array() || selected.empty() || !selected[0].is_string()) {
        throw EmptySelection();
    }
    const auto name = selected[0].get<std::string>();
    if (std::find(candidates.begin(), candidates.end(), name) == candidates.end()) {
        throw UnknownExpert(name);
    }
    return SelectorChoice{name};
}

ScoreValue parse_score(const std::string& text) {
    static const std::regex number(R"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)");
    std::smatch match;
    if (!std::regex_search(text, match, number)) throw NoNumberFound();
    return ScoreValue(std::stod(match.str()));
}

std::string render_score(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", value);
    return buf;
}

const std::vector<std::string>& judgement_dimensions(Modality modality) {
    static const std::vector<std::string> image = {
        "Object Presence",  "Counting",          "Color Matching",
        "Position Relation", "Attribute Binding", "Complex Compliance",
    };
    static const std::vector<std::string> video = {
        "Subject Consistency",       "Background Consistency",
        "Temporal Flickering",       "Motion Smoothness",
        "Dynamic Degree",            "Aesthetic Quality",
        "Imaging Quality",           "Object Class Accuracy",
        "Multiple Objects",          "Human Action Accuracy",
        "Color Matching",            "Spatial Relationship",
        "Scene Accuracy",            "Temporal Style Consistency",
        "Appearance Style Consistency", "Overall Consistency",
    };
    static const std::vector<std::string> audio = {
        "Content Enjoyment (CE)",    "Content Usefulness (CU)",
        "Production Complexity (PC)", "Production Quality (PQ)",
        "Semantic Alignment",
    };
    static const std::vector<std::string> text = {
        "Relevance", "Factual Support", "Completeness", "Clarity",
    };
    switch (modality) {
        case Modality::Image: return image;
        case Modality::Video: return video;
        case Modality::Audio: return audio;
        case Modality::Text: return text;
    }
    return text;
}

JudgementReport parse_judgement(const std::string& text, Modality modality) {
    JudgementReport report;
    report.raw = text;

    struct Hit {
        std::size_t pos;
        std::size_t content_start;
        const std::string* name;
    };
    std::vector<Hit> hits;
    const std::string lower = to_lower(text);
    for (const auto& heading : judgement_dimensions(modality)) {
        const std::string needle = to_lower(heading);
        std::size_t from = 0;
        while (true) {
            const std::size_t pos = lower.find(needle, from);
            if (pos == std::string::npos) break;
            std::size_t colon = pos + needle.size();
            while (colon < text.size() && (text[colon] == ' ' || text[colon] == '\t')) ++colon;
            if (colon < text.size() && text[colon] == ':') {
                hits.push_back({pos, colon + 1, &heading});
                from = colon + 1;
            } else {
                from = pos + 1;
            }
        }
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.pos < b.pos; });

    for (std::size_t i = 0; i < hits.size(); ++i) {
        const std::size_t end = (i + 1 < hits.size()) ? hits[i + 1].pos : text.size();
        report.dimensions.push_back(
            {*hits[i].name, trim(text.substr(hits[i].content_start, end - hits[i].content_start))});
    }
    return report;
}

}  // namespace magus
