#include "magus/orchestrator.hpp"

#include <chrono>
#include <fstream>
#include <future>
#include <sstream>

#include "magus/errors.hpp"
#include "magus/scoring.hpp"

namespace fs = std::filesystem;

namespace magus {

std::string to_string(StepOutcome::Status status) {
    switch (status) {
        case StepOutcome::Status::Ok: return "ok";
        case StepOutcome::Status::SpeakerOnly: return "speaker_only";
        case StepOutcome::Status::Failed: return "failed";
    }
    return "ok";
}

OrchestratorOptions::OrchestratorOptions() {
    reasoning_search.threshold = ScoreValue(0.7);
    generation_search.threshold = ScoreValue(0.6);
}

namespace {

nlohmann::json media_to_json(const MediaRef& media) {
    return {{"id", media.id},
            {"modality", to_string(media.modality)},
            {"uri", media.uri},
            {"meta", media.meta}};
}

nlohmann::json node_to_json(const SearchNode& node) {
    nlohmann::json j = {
        {"id", node.id},
        {"score", node.score.value()},
        {"actions", node.actions},
        {"depth", node.depth()},
    };
    if (const auto* reasoning = std::get_if<ReasoningNodeContent>(&node.content)) {
        j["answer"] = reasoning->node_answer;
    } else {
        const auto& generation = std::get<GenerationNodeContent>(node.content);
        j["prompt"] = generation.node_prompt;
        j["artifact"] = generation.node_answer.id;
    }
    return j;
}

nlohmann::json outcome_to_json(const SearchOutcome& outcome) {
    return {
        {"best", node_to_json(outcome.best)},
        {"terminated_by", to_string(outcome.terminated_by)},
        {"explored_count", outcome.explored_count},
    };
}

}  // namespace

nlohmann::json run_record_to_json(const RunRecord& record) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& outcome : record.step_outcomes) {
        nlohmann::json j = {{"status", to_string(outcome.status)}};
        if (!outcome.error.empty()) j["error"] = outcome.error;
        if (outcome.search) j["outcome"] = outcome_to_json(*outcome.search);
        steps.push_back(std::move(j));
    }
    nlohmann::json artifacts = nlohmann::json::array();
    for (const auto& media : record.artifacts) artifacts.push_back(media_to_json(media));
    return {
        {"run_id", record.run_id},
        {"instruction", record.instruction},
        {"plan", plan_to_json(record.plan)},
        {"step_outcomes", steps},
        {"final_response", record.final_response},
        {"artifacts", artifacts},
    };
}

Orchestrator::Orchestrator(BackendSession& session, const RoleRegistry& roles,
                           const ActionRegistry& actions, ArtifactStore& store, TraceLog& trace,
                           OrchestratorOptions options)
    : session_(session),
      roles_(roles),
      actions_(actions),
      store_(store),
      trace_(trace),
      options_(std::move(options)),
      pipeline_(session, roles),
      rng_(options_.seed) {
    options_.reasoning_search.validate();
    options_.generation_search.validate();
    pipeline_.set_seed_source([this] { return next_seed(); });
}

std::uint64_t Orchestrator::next_seed() {
    std::lock_guard lock(rng_mu_);
    return rng_();
}

std::string Orchestrator::make_run_id(const std::string& instruction) {
    if (options_.deterministic) {
        return "run-" + hex64(fnv1a64(instruction, options_.seed ^ 0x9e3779b97f4a7c15ull));
    }
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
    return "run-" + std::to_string(ms) + "-" + hex64(next_seed()).substr(8);
}

SearchNode Orchestrator::init_generation_root(const std::string& prompt, Modality modality,
                                              const std::string& node_id) {
    if (modality == Modality::Text) {
        throw UnsupportedKind("generation:text is produced by the speaker, not searched");
    }
    std::string node_prompt = prompt;
    if (options_.extend_prompt) {
        const auto& extender = roles_.role(roles::prompt_extender(modality));
        ChatRequest request;
        request.role_name = extender.name;
        request.system_prompt = extender.system_prompt;
        request.messages = {ChatMessage::user({prompt})};
        const std::string extended = session_.chat(request).text;
        if (!extended.empty()) node_prompt = extended;
    }

    MediaGenRequest gen;
    gen.prompt = node_prompt;
    gen.modality = modality;
    gen.seed = next_seed();
    const MediaGenResponse generated =
        session_.generate_media(gen, roles::prompt_extender(modality));

    const GenerationVerdict verdict =
        score_generation(session_, roles_, generated.artifact, prompt);

    SearchNode root;
    root.id = node_id;
    root.content = GenerationNodeContent{prompt, node_prompt, generated.artifact,
                                         verdict.judgement.raw};
    root.score = verdict.score;
    return root;
}

SearchNode Orchestrator::init_reasoning_root(const std::string& question,
                                             const std::vector<MediaRef>& media,
                                             const std::string& node_id) {
    const auto& answerer = roles_.role(roles::kGeneralAnswer);
    ChatRequest request;
    request.role_name = answerer.name;
    request.system_prompt = answerer.system_prompt;
    request.want_token_probs = true;
    std::vector<MessagePart> parts;
    for (const auto& m : media) parts.emplace_back(m);
    parts.emplace_back(question);
    request.messages = {ChatMessage::user(std::move(parts))};
    const ChatResponse answer = session_.chat(request);

    SearchNode root;
    root.id = node_id;
    root.content = ReasoningNodeContent{media, question, {}, answer.text};
    root.score = score_reasoning_answer(answer, session_.fallback(),
                                        make_reasoning_cascade(session_, roles_, question));
    return root;
}

SearchOutcome Orchestrator::run_reasoning(const std::string& question,
                                          const std::vector<MediaRef>& media, Modality modality,
                                          const std::string& root_id) {
    const TaskKind kind = TaskKind::reasoning(modality);
    const ActionCatalog catalog = actions_.catalog_for(kind);
    const SearchNode root = init_reasoning_root(question, media, root_id);
    return run_search(root, options_.reasoning_search, catalog, pipeline_.hooks_for(kind),
                      trace_);
}

SearchOutcome Orchestrator::run_generation(const std::string& prompt, Modality modality,
                                           const std::string& root_id) {
    const TaskKind kind = TaskKind::generation(modality);
    const ActionCatalog catalog = actions_.catalog_for(kind);
    const SearchNode root = init_generation_root(prompt, modality, root_id);
    return run_search(root, options_.generation_search, catalog, pipeline_.hooks_for(kind),
                      trace_);
}

StepOutcome Orchestrator::execute_step(const PlanStep& step, int index) {
    StepOutcome outcome;
    if (step.kind == TaskKind::generation(Modality::Text)) {
        // Text output is the speaker's job; the step still shows up in the
        // outcome list so indices line up with the plan.
        outcome.status = StepOutcome::Status::SpeakerOnly;
        return outcome;
    }
    const std::string root_id = "s" + std::to_string(index) + ".n0";
    try {
        if (step.kind.is_reasoning()) {
            outcome.search =
                run_reasoning(step.prompt, step.inputs, step.kind.modality, root_id);
        } else {
            outcome.search = run_generation(step.prompt, step.kind.modality, root_id);
        }
        outcome.status = StepOutcome::Status::Ok;
    } catch (const Error& e) {
        outcome.status = StepOutcome::Status::Failed;
        outcome.error = e.what();
    }
    return outcome;
}

std::string Orchestrator::speak(const RunRecord& record) {
    std::ostringstream results;
    for (std::size_t i = 0; i < record.plan.steps.size(); ++i) {
        const auto& step = record.plan.steps[i];
        const auto& outcome = record.step_outcomes[i];
        results << "Step " << (i + 1) << " ("
                << (step.kind.is_generation() ? "generate " : "understand ")
                << to_string(step.kind.modality) << "): " << step.prompt << "\n";
        switch (outcome.status) {
            case StepOutcome::Status::Ok: {
                const auto& best = outcome.search->best;
                if (step.kind.is_reasoning()) {
                    results << "  answer: " << best.reasoning().node_answer;
                } else {
                    results << "  artifact: " << best.generation().node_answer.id;
                }
                results << " (confidence " << render_score(best.score.value()) << ")\n";
                break;
            }
            case StepOutcome::Status::SpeakerOnly:
                results << "  to be answered directly in the final response\n";
                break;
            case StepOutcome::Status::Failed:
                results << "  failed: " << outcome.error << "\n";
                break;
        }
    }

    const auto& speaker = roles_.role(roles::kSpeaker);
    ChatRequest request;
    request.role_name = speaker.name;
    request.system_prompt = speaker.system_prompt;
    request.messages = {ChatMessage::user({"Instruction: " + record.instruction +
                                           "\nIntent: " + record.plan.intent +
                                           "\nStep results:\n" + results.str()})};
    return session_.chat(request).text;
}

std::string Orchestrator::begin_run(const std::string& instruction) {
    const std::string run_id = make_run_id(instruction);
    trace_.set_header({{"run_id", run_id},
                       {"seed", options_.seed},
                       {"deterministic", options_.deterministic}});
    trace_.append(TraceKind::RunStarted,
                  {{"run_id", run_id}, {"seed", options_.seed}, {"instruction", instruction}});
    return run_id;
}

RunRecord Orchestrator::run(const std::string& instruction, const std::vector<MediaRef>& media) {
    const std::string run_id = begin_run(instruction);

    // Cognition failure aborts the run; per-step failures do not.
    TaskPlan plan = cognize(session_, roles_, instruction, media, options_.cognition_max_rounds);

    RunRecord record = execute(instruction, std::move(plan));
    record.run_id = run_id;
    persist(record);
    return record;
}

RunRecord Orchestrator::run_with_plan(const std::string& instruction, TaskPlan plan) {
    const std::string run_id = begin_run(instruction);
    RunRecord record = execute(instruction, std::move(plan));
    record.run_id = run_id;
    persist(record);
    return record;
}

RunRecord Orchestrator::execute(const std::string& instruction, TaskPlan plan) {
    RunRecord record;
    record.instruction = instruction;
    record.plan = std::move(plan);
    record.step_outcomes.resize(record.plan.steps.size());

    const bool concurrent = options_.concurrent_steps && !options_.deterministic;
    if (concurrent) {
        // Generation steps share no state beyond the store and trace, both of
        // which serialize internally; reasoning steps stay sequential.
        std::vector<std::pair<int, std::future<StepOutcome>>> pending;
        for (std::size_t i = 0; i < record.plan.steps.size(); ++i) {
            const auto& step = record.plan.steps[i];
            if (step.kind.is_generation() && step.kind.modality != Modality::Text) {
                pending.emplace_back(static_cast<int>(i),
                                     std::async(std::launch::async, [this, &step, i] {
                                         return execute_step(step, static_cast<int>(i));
                                     }));
            } else {
                record.step_outcomes[i] = execute_step(step, static_cast<int>(i));
            }
        }
        for (auto& [index, future] : pending) record.step_outcomes[index] = future.get();
    } else {
        for (std::size_t i = 0; i < record.plan.steps.size(); ++i) {
            record.step_outcomes[i] = execute_step(record.plan.steps[i], static_cast<int>(i));
        }
    }

    for (const auto& outcome : record.step_outcomes) {
        if (outcome.status != StepOutcome::Status::Ok || !outcome.search) continue;
        const auto& best = outcome.search->best;
        if (const auto* generation = std::get_if<GenerationNodeContent>(&best.content)) {
            record.artifacts.push_back(generation->node_answer);
        }
    }

    record.final_response = speak(record);
    return record;
}

void Orchestrator::persist(const RunRecord& record) const {
    const fs::path dir = store_.run_dir();
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "plan.json", std::ios::binary | std::ios::trunc);
        out << plan_to_json(record.plan).dump(2) << "\n";
    }
    {
        std::ofstream out(dir / "run.json", std::ios::binary | std::ios::trunc);
        out << run_record_to_json(record).dump(2) << "\n";
    }
    trace_.write_jsonl(dir / "trace.jsonl");
}

}  // namespace magus
