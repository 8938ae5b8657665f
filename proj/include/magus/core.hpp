#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "magus/errors.hpp"

namespace magus {

// ---------------------------------------------------------------------------
// Modalities and task kinds
// ---------------------------------------------------------------------------

enum class Modality { Text, Image, Audio, Video };

std::string to_string(Modality m);
Modality modality_from_string(std::string_view s);  // throws Error on unknown name

// A task is either reasoning over inputs of one modality or generating an
// artifact of one modality. Generation(Text) exists as a kind but is handled
// by the Speaker, never dispatched to the search.
struct TaskKind {
    enum class Type { Reasoning, Generation };

    Type type = Type::Reasoning;
    Modality modality = Modality::Text;

    static TaskKind reasoning(Modality m) { return {Type::Reasoning, m}; }
    static TaskKind generation(Modality m) { return {Type::Generation, m}; }

    bool is_reasoning() const { return type == Type::Reasoning; }
    bool is_generation() const { return type == Type::Generation; }

    friend bool operator==(const TaskKind& a, const TaskKind& b) {
        return a.type == b.type && a.modality == b.modality;
    }
};

std::string to_string(const TaskKind& kind);              // "reasoning:image"
TaskKind task_kind_from_string(std::string_view s);       // throws Error

// ---------------------------------------------------------------------------
// Media handles
// ---------------------------------------------------------------------------

// Opaque handle into the artifact store. Nothing in the engine decodes media;
// the uri is a run-directory-relative path and meta carries whatever the
// producing backend tagged (dimensions, duration, generation params).
struct MediaRef {
    std::string id;
    Modality modality = Modality::Image;
    std::string uri;
    std::map<std::string, std::string> meta;

    friend bool operator==(const MediaRef& a, const MediaRef& b) {
        return a.id == b.id && a.modality == b.modality && a.uri == b.uri;
    }
};

// ---------------------------------------------------------------------------
// Scores
// ---------------------------------------------------------------------------

// Confidence in [0,1]. Out-of-range inputs are clamped rather than rejected:
// remote scorers are free text and a run should not abort on "1.02". The
// clamp is recorded so traces can surface it.
class ScoreValue {
public:
    ScoreValue() = default;
    explicit ScoreValue(double raw);

    double value() const { return value_; }
    bool clamped() const { return clamped_; }

    friend bool operator==(const ScoreValue& a, const ScoreValue& b) {
        return a.value_ == b.value_;
    }

private:
    double value_ = 0.0;
    bool clamped_ = false;
};

// ---------------------------------------------------------------------------
// Search node content
// ---------------------------------------------------------------------------

// One expert contribution accumulated on a reasoning node: either advice text
// or a generated auxiliary artifact, tagged with the action that produced it.
struct AuxiliaryItem {
    std::string source_action;
    std::variant<std::string, MediaRef> payload;

    bool is_text() const { return std::holds_alternative<std::string>(payload); }
    const std::string& text() const { return std::get<std::string>(payload); }
    const MediaRef& media() const { return std::get<MediaRef>(payload); }
};

struct ReasoningNodeContent {
    std::vector<MediaRef> input_media;        // original multimodal input
    std::string question;                     // original natural-language query
    std::vector<AuxiliaryItem> auxiliary_items;  // empty iff root
    std::string node_answer;                  // current candidate answer
};

struct GenerationNodeContent {
    std::string original_prompt;   // the user's text
    std::string node_prompt;       // possibly refined prompt used for this node
    MediaRef node_answer;          // artifact generated from node_prompt
    std::string judgement;         // judger report the score was derived from
};

using NodeContent = std::variant<ReasoningNodeContent, GenerationNodeContent>;

// A candidate solution in the search tree. Immutable after construction and
// safe to share between expansion workers.
struct SearchNode {
    std::string id;
    NodeContent content;
    ScoreValue score;
    std::vector<std::string> actions;   // ordered history, duplicate-free
    std::optional<std::string> parent;

    int depth() const { return static_cast<int>(actions.size()); }

    const ReasoningNodeContent& reasoning() const {
        return std::get<ReasoningNodeContent>(content);
    }
    const GenerationNodeContent& generation() const {
        return std::get<GenerationNodeContent>(content);
    }
};

int node_depth(const SearchNode& node);

// Order-insensitive canonical key over an action history. Two histories with
// the same set of actions map to the same key; the empty history maps to the
// empty key. Throws DuplicateAction when a name repeats.
std::string action_set_key(const std::vector<std::string>& actions);

// ---------------------------------------------------------------------------
// Search configuration
// ---------------------------------------------------------------------------

enum class ExpansionStrategy { Exhaustive, SelectorGuided };

struct SearchConfig {
    ScoreValue threshold{0.6};                // accept when score >= threshold
    int max_depth = 3;
    int beam_width = 3;
    ExpansionStrategy strategy = ExpansionStrategy::SelectorGuided;
    int max_backend_retries = 2;
    // When true the next frontier is picked from surviving parents plus new
    // children instead of new children only.
    bool frontier_pool = false;

    void validate() const;  // throws ConfigError on non-positive bounds
};

// ---------------------------------------------------------------------------
// Task plans
// ---------------------------------------------------------------------------

struct PlanStep {
    TaskKind kind;
    std::string prompt;
    std::vector<MediaRef> inputs;
};

struct TaskPlan {
    std::string intent;
    std::vector<PlanStep> steps;
    int revision_count = 0;
    // False when the reflection loop exhausted its rounds without sign-off;
    // the plan is still executed, best effort.
    bool approved = true;
};

// ---------------------------------------------------------------------------
// Hashing helpers (stable across platforms and runs)
// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 1469598103934665603ull);
std::string hex64(std::uint64_t value);

}  // namespace magus
