#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "magus/action_registry.hpp"
#include "magus/agent_roles.hpp"
#include "magus/artifact_store.hpp"
#include "magus/backend.hpp"
#include "magus/cognition.hpp"
#include "magus/core.hpp"
#include "magus/gas.hpp"
#include "magus/trace.hpp"

namespace magus {

struct StepOutcome {
    enum class Status { Ok, SpeakerOnly, Failed };
    Status status = Status::Ok;
    std::string error;                    // non-empty iff Failed
    std::optional<SearchOutcome> search;  // present iff Ok
};

std::string to_string(StepOutcome::Status status);

struct RunRecord {
    std::string run_id;
    std::string instruction;
    TaskPlan plan;
    std::vector<StepOutcome> step_outcomes;  // aligned with plan.steps
    std::string final_response;
    std::vector<MediaRef> artifacts;
};

nlohmann::json run_record_to_json(const RunRecord& record);

struct OrchestratorOptions {
    SearchConfig reasoning_search;   // threshold default set in constructor
    SearchConfig generation_search;
    int cognition_max_rounds = 3;
    bool extend_prompt = true;       // LLM-extended prompt before the first generation
    bool concurrent_steps = false;   // opt-in: generation steps in parallel
    bool deterministic = false;      // forces sequential steps, stable run ids
    std::uint64_t seed = 0;          // run-level generator seed

    OrchestratorOptions();
};

// End-to-end run coordinator: cognition, per-step search dispatch, speaker
// aggregation, and persistence of run.json / plan.json / trace.jsonl under
// the run directory.
class Orchestrator {
public:
    Orchestrator(BackendSession& session, const RoleRegistry& roles,
                 const ActionRegistry& actions, ArtifactStore& store, TraceLog& trace,
                 OrchestratorOptions options);

    // Prompt extension, first generation, and the judger->scorer cascade.
    SearchNode init_generation_root(const std::string& prompt, Modality modality,
                                    const std::string& node_id = "n0");

    // General-answer response scored by mean token probability (or fallback).
    SearchNode init_reasoning_root(const std::string& question,
                                   const std::vector<MediaRef>& media,
                                   const std::string& node_id = "n0");

    SearchOutcome run_reasoning(const std::string& question, const std::vector<MediaRef>& media,
                                Modality modality, const std::string& root_id = "n0");
    SearchOutcome run_generation(const std::string& prompt, Modality modality,
                                 const std::string& root_id = "n0");

    // Stamps the trace header and the RunStarted event; returns the run id.
    std::string begin_run(const std::string& instruction);

    // Full pipeline: cognize, execute steps, speak, persist.
    RunRecord run(const std::string& instruction, const std::vector<MediaRef>& media);
    // Same, with a caller-provided plan (skips cognition).
    RunRecord run_with_plan(const std::string& instruction, TaskPlan plan);

    void persist(const RunRecord& record) const;

    TraceLog& trace() { return trace_; }
    GasPipeline& pipeline() { return pipeline_; }

private:
    std::string make_run_id(const std::string& instruction);
    std::uint64_t next_seed();
    RunRecord execute(const std::string& instruction, TaskPlan plan);
    StepOutcome execute_step(const PlanStep& step, int index);
    std::string speak(const RunRecord& record);

    BackendSession& session_;
    const RoleRegistry& roles_;
    const ActionRegistry& actions_;
    ArtifactStore& store_;
    TraceLog& trace_;
    OrchestratorOptions options_;
    GasPipeline pipeline_;

    std::mutex rng_mu_;
    std::mt19937_64 rng_;
};

}  // namespace magus
