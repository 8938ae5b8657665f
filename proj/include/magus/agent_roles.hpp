#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "magus/action_registry.hpp"
#include "magus/core.hpp"

namespace magus {

enum class OutputShape {
    FreeText,
    SelectorJson,
    ScoreScalar,
    JudgementReport,
    PlanJson,
    VerdictJson,
};

struct AgentRole {
    std::string name;
    std::string system_prompt;
    OutputShape output_shape = OutputShape::FreeText;
};

// Canonical pipeline role names.
namespace roles {
inline constexpr const char* kGeneralAnswer = "general_answer";
inline constexpr const char* kSummarizer = "summarizer";
inline constexpr const char* kSelectorReasoning = "selector_reasoning";
inline constexpr const char* kSelectorGeneration = "selector_generation";
inline constexpr const char* kSpeaker = "speaker";
inline constexpr const char* kPerceiver = "perceiver";
inline constexpr const char* kPlanner = "planner";
inline constexpr const char* kReflector = "reflector";
std::string judger(Modality modality);           // judger_image, ...
std::string scorer(Modality modality);           // scorer_image, ...
std::string prompt_extender(Modality modality);  // prompt_extender_image, ...
}  // namespace roles

// Immutable-after-load registry of every role-conditioned agent. Defaults
// include one role per built-in action (role name equals action name).
class RoleRegistry {
public:
    static RoleRegistry defaults();
    // Override file: JSON map role-name -> system prompt. Unknown names
    // define new free-text roles (so catalog extensions can bring their own
    // agents).
    static RoleRegistry load(const std::optional<std::filesystem::path>& overrides = {});

    bool has(const std::string& name) const;
    const AgentRole& role(const std::string& name) const;  // throws Error when missing
    std::vector<std::string> names() const;

    void set_prompt(const std::string& name, const std::string& prompt);
    void apply_overrides(const std::filesystem::path& file);

private:
    std::map<std::string, AgentRole> roles_;
};

// Throws Error unless every action's agent_role resolves to a registered
// role with a non-empty system prompt. Run at startup.
void check_role_integrity(const RoleRegistry& registry, const ActionRegistry& actions);

// ---------------------------------------------------------------------------
// Structured-output parsers (pure functions)
// ---------------------------------------------------------------------------

// First balanced JSON object in free text whose top level contains `key`;
// leading and trailing prose is tolerated. Null json when none is found.
nlohmann::json first_json_object_with_key(const std::string& text, const std::string& key);

struct SelectorChoice {
    std::string expert;
};

// Extracts the first JSON object containing "selected_experts" and validates
// element 0 against the candidate list. Errors: NoJsonFound, EmptySelection,
// UnknownExpert.
SelectorChoice parse_selector(const std::string& text, const std::vector<std::string>& candidates);

// First decimal literal in the text, clamped to [0,1]. Throws NoNumberFound.
ScoreValue parse_score(const std::string& text);

// Two-decimal rendering; parse_score(render_score(v)) == v on that grid.
std::string render_score(double value);

struct JudgementDimension {
    std::string name;
    std::string analysis;
};

// Free-text tolerant judgement parse: dimensions found by their modality's
// known headings, raw always preserved. Never throws.
struct JudgementReport {
    std::vector<JudgementDimension> dimensions;
    std::string raw;
};

JudgementReport parse_judgement(const std::string& text, Modality modality);

const std::vector<std::string>& judgement_dimensions(Modality modality);

}  // namespace magus
