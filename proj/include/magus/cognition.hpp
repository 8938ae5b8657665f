#pragma once

#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "magus/agent_roles.hpp"
#include "magus/backend.hpp"
#include "magus/core.hpp"

namespace magus {

struct ReflectionVerdict {
    bool approved = false;
    std::string notes;  // revision guidance, non-empty when not approved
};

// Perceiver -> Planner -> Reflector dialogue. The planner emits the plan as
// JSON ({"intent": ..., "steps": [{"kind", "modality", "prompt"}]}); on
// rejection it re-plans with the reflector's notes appended, up to max_rounds
// revisions. A plan that never gets sign-off is returned flagged unapproved.
// Throws PlanParseError when the planner output stays unparseable after a
// format-reminder retry.
TaskPlan cognize(BackendSession& session, const RoleRegistry& roles,
                 const std::string& instruction, const std::vector<MediaRef>& media,
                 int max_rounds = 3);

// Union of step modalities, plus Text when the speaker's final response is
// part of the output.
std::set<Modality> plan_modalities(const TaskPlan& plan, bool include_speaker_text = true);

nlohmann::json plan_to_json(const TaskPlan& plan);
// Accepts the same schema the planner emits; attaches `media` as inputs of
// every understand step. Throws PlanParseError on schema violations.
TaskPlan plan_from_json(const nlohmann::json& doc, const std::vector<MediaRef>& media = {});

}  // namespace magus
