#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "magus/core.hpp"

namespace magus {

// How an action changes a node: textual expert advice, generation of
// auxiliary media (names ending in "augmenter"), or generation-prompt
// refinement (all generation-task actions).
enum class ActionBehavior { ExpertAdvice, GenerativeAugment, PromptRefine };

std::string to_string(ActionBehavior behavior);
ActionBehavior action_behavior_from_string(std::string_view s);

struct ActionSpec {
    std::string name;
    std::string description;  // the one-liner shown to the Selector
    TaskKind task_kind;
    ActionBehavior behavior = ActionBehavior::ExpertAdvice;
    std::string agent_role;   // resolves in the role registry
};

struct ActionCatalog {
    TaskKind kind;
    std::vector<ActionSpec> entries;  // catalog order is the deterministic tie-break order

    std::vector<ActionSpec> unused(const std::vector<std::string>& used_names) const;
    const ActionSpec* find(const std::string& name) const;
    int index_of(const std::string& name) const;  // -1 when absent
};

// The built-in action tables for every supported (task type, modality)
// combination, in catalog order.
const std::vector<ActionSpec>& default_action_table();

// Per-task-kind catalogs. User extensions are append-only: a catalog can
// grow through the extension file but never silently shrink.
class ActionRegistry {
public:
    ActionRegistry();  // built-in catalogs

    // Extension file: JSON list of
    // {name, description, task_kind, modality, behavior, agent_role}.
    void load_extensions(const std::filesystem::path& file);
    void add(ActionSpec spec);

    ActionCatalog catalog_for(const TaskKind& kind) const;  // throws UnsupportedKind

    std::vector<ActionSpec> all() const;

private:
    std::vector<ActionSpec> actions_;
};

// One line per unused action, "name: description", in catalog order. Empty
// string when every action has been used.
std::string render_candidates(const ActionCatalog& catalog, const std::set<std::string>& exclude);

}  // namespace magus
