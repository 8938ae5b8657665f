#pragma once

#include <functional>
#include <string>
#include <vector>

#include "magus/action_registry.hpp"
#include "magus/agent_roles.hpp"
#include "magus/backend.hpp"
#include "magus/core.hpp"
#include "magus/scoring.hpp"
#include "magus/trace.hpp"

namespace magus {

enum class TerminationReason { ThresholdMet, DepthExhausted, NoValidActions };

std::string to_string(TerminationReason reason);

struct SearchOutcome {
    SearchNode best;
    TerminationReason terminated_by = TerminationReason::DepthExhausted;
    int explored_count = 0;
    std::vector<TraceEvent> trace;  // this search's slice of the run trace
};

struct SelectedAction {
    ActionSpec action;
    bool fallback_used = false;
};

// The growth-aware search is parameterized over how actions are applied and
// selected, so scripted landscapes can drive it without any backend.
struct ExpansionHooks {
    // Returns the scored child (content + score); the engine assigns id,
    // action history, and parent. Throws on expansion failure.
    std::function<SearchNode(const SearchNode& parent, const ActionSpec& action)> apply;
    // SelectorGuided only: pick one of the unused actions for this node.
    std::function<SelectedAction(const SearchNode& node, const std::vector<ActionSpec>& unused)>
        select;
};

// Beam search over action subsets. The root must already be scored. Children
// are created only for unvisited action sets, scored on creation, and the
// first child reaching the threshold ends the search immediately. The next
// frontier keeps the top-B children (or parents plus children when
// config.frontier_pool is set), with fully deterministic tie-breaking: score
// descending, catalog index of the last applied action, creation order.
SearchOutcome run_search(const SearchNode& root, const SearchConfig& config,
                         const ActionCatalog& catalog, const ExpansionHooks& hooks,
                         TraceLog& trace);

// ---------------------------------------------------------------------------
// Pipeline wiring: real expansions backed by agents and model backends
// ---------------------------------------------------------------------------

class GasPipeline {
public:
    GasPipeline(BackendSession& session, const RoleRegistry& roles);

    // Seeds for media generation when requests leave them unset; wire the
    // run-level generator here to keep runs replayable.
    void set_seed_source(std::function<std::uint64_t()> next_seed);

    // Expert advice or generative augmentation, then summarizer re-answer and
    // confidence scoring.
    SearchNode apply_reasoning_action(const SearchNode& node, const ActionSpec& action) const;

    // Prompt refinement from the parent judgement, regeneration, and the
    // judger->scorer cascade.
    SearchNode apply_generation_action(const SearchNode& node, const ActionSpec& action) const;

    // Selector choice over the unused actions, with one format-reminder retry
    // and a deterministic first-unused fallback.
    SelectedAction select_action(const SearchNode& node, const std::vector<ActionSpec>& unused,
                                 const TaskKind& kind) const;

    ExpansionHooks hooks_for(const TaskKind& kind) const;

private:
    std::optional<std::uint64_t> draw_seed() const;

    BackendSession& session_;
    const RoleRegistry& roles_;
    std::function<std::uint64_t()> next_seed_;
};

}  // namespace magus
