#include "magus/cognition.hpp"

#include "magus/errors.hpp"

namespace magus {

namespace {

TaskKind step_kind(const std::string& kind, const std::string& modality) {
    const Modality m = modality_from_string(modality);
    if (kind == "generate") return TaskKind::generation(m);
    if (kind == "understand") return TaskKind::reasoning(m);
    throw PlanParseError("step kind must be 'generate' or 'understand', got '" + kind + "'");
}

TaskPlan parse_plan_text(const std::string& text, const std::vector<MediaRef>& media) {
    const auto doc = first_json_object_with_key(text, "steps");
    if (doc.is_null()) throw PlanParseError("planner output contains no JSON plan");
    return plan_from_json(doc, media);
}

ReflectionVerdict parse_verdict(const std::string& text) {
    const auto doc = first_json_object_with_key(text, "approved");
    if (doc.is_null() || !doc["approved"].is_boolean()) {
        throw ParseError("reflector output contains no approval verdict");
    }
    ReflectionVerdict verdict;
    verdict.approved = doc["approved"].get<bool>();
    verdict.notes = doc.value("notes", std::string{});
    if (!verdict.approved && verdict.notes.empty()) verdict.notes = "revise the plan";
    return verdict;
}

}  // namespace

TaskPlan plan_from_json(const nlohmann::json& doc, const std::vector<MediaRef>& media) {
    if (!doc.is_object()) throw PlanParseError("plan must be a JSON object");
    TaskPlan plan;
    plan.intent = doc.value("intent", std::string{});
    if (!doc.contains("steps") || !doc["steps"].is_array() || doc["steps"].empty()) {
        throw PlanParseError("plan needs a non-empty steps array");
    }
    for (const auto& raw : doc["steps"]) {
        if (!raw.is_object()) throw PlanParseError("plan step must be an object");
        PlanStep step;
        try {
            step.kind = step_kind(raw.at("kind").get<std::string>(),
                                  raw.at("modality").get<std::string>());
        } catch (const nlohmann::json::exception&) {
            throw PlanParseError("plan step needs string 'kind' and 'modality'");
        } catch (const Error& e) {
            throw PlanParseError(e.what());
        }
        step.prompt = raw.value("prompt", std::string{});
        if (step.prompt.empty()) throw PlanParseError("plan step prompt is empty");
        if (step.kind.is_reasoning()) step.inputs = media;
        plan.steps.push_back(std::move(step));
    }
    plan.revision_count = doc.value("revision_count", 0);
    plan.approved = doc.value("approved", true);
    return plan;
}

nlohmann::json plan_to_json(const TaskPlan& plan) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& step : plan.steps) {
        nlohmann::json inputs = nlohmann::json::array();
        for (const auto& media : step.inputs) inputs.push_back(media.id);
        steps.push_back({
            {"kind", step.kind.is_generation() ? "generate" : "understand"},
            {"modality", to_string(step.kind.modality)},
            {"prompt", step.prompt},
            {"inputs", inputs},
        });
    }
    return {
        {"intent", plan.intent},
        {"steps", steps},
        {"revision_count", plan.revision_count},
        {"approved", plan.approved},
    };
}

std::set<Modality> plan_modalities(const TaskPlan& plan, bool include_speaker_text) {
    std::set<Modality> out;
    for (const auto& step : plan.steps) out.insert(step.kind.modality);
    if (include_speaker_text) out.insert(Modality::Text);
    return out;
}

TaskPlan cognize(BackendSession& session, const RoleRegistry& roles,
                 const std::string& instruction, const std::vector<MediaRef>& media,
                 int max_rounds) {
    if (instruction.empty()) throw Error("instruction must be non-empty");
    if (max_rounds < 0) throw ConfigError("cognition max_rounds must be >= 0");

    auto role_request = [&](const char* name) {
        const auto& role = roles.role(name);
        ChatRequest request;
        request.role_name = role.name;
        request.system_prompt = role.system_prompt;
        return request;
    };

    // Perceiver: semantic summary of the task.
    ChatRequest perceive = role_request(roles::kPerceiver);
    std::vector<MessagePart> parts;
    for (const auto& m : media) parts.emplace_back(m);
    parts.emplace_back("Instruction: " + instruction);
    perceive.messages = {ChatMessage::user(std::move(parts))};
    const std::string summary = session.chat(perceive).text;

    std::string notes;
    TaskPlan plan;
    for (int round = 0;; ++round) {
        std::string planner_input = "Instruction: " + instruction + "\nTask summary: " + summary;
        if (!notes.empty()) planner_input += "\nReviewer notes on the previous plan: " + notes;

        ChatRequest plan_request = role_request(roles::kPlanner);
        plan_request.messages = {ChatMessage::user({planner_input})};
        std::string plan_text = session.chat(plan_request).text;
        try {
            plan = parse_plan_text(plan_text, media);
        } catch (const PlanParseError&) {
            // One retry with an explicit schema reminder.
            ChatRequest retry = plan_request;
            retry.messages.push_back(ChatMessage::user(
                {"Your previous reply was not a valid plan. Output JSON only: {\"intent\": "
                 "\"...\", \"steps\": [{\"kind\": \"generate\"|\"understand\", \"modality\": "
                 "\"image\"|\"video\"|\"audio\"|\"text\", \"prompt\": \"...\"}]}"}));
            plan_text = session.chat(retry).text;
            plan = parse_plan_text(plan_text, media);
        }
        plan.revision_count = round;

        ChatRequest reflect = role_request(roles::kReflector);
        reflect.messages = {ChatMessage::user(
            {"Instruction: " + instruction + "\nTask summary: " + summary +
             "\nCandidate plan:\n" + plan_to_json(plan).dump()})};
        ReflectionVerdict verdict;
        try {
            verdict = parse_verdict(session.chat(reflect).text);
        } catch (const ParseError&) {
            ChatRequest retry = reflect;
            retry.messages.push_back(ChatMessage::user(
                {"Your previous reply was invalid. Output JSON only: {\"approved\": true | "
                 "false, \"notes\": \"...\"}"}));
            try {
                verdict = parse_verdict(session.chat(retry).text);
            } catch (const ParseError&) {
                // An unreviewable plan still moves the run forward.
                verdict = {true, ""};
            }
        }

        if (verdict.approved) {
            plan.approved = true;
            return plan;
        }
        if (round >= max_rounds) {
            plan.approved = false;
            return plan;
        }
        notes = verdict.notes;
    }
}

}  // namespace magus
