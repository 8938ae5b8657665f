#include "magus/sweep.hpp"

#include <fstream>
#include <sstream>

#include "magus/artifact_store.hpp"
#include "magus/errors.hpp"
#include "magus/gas.hpp"
#include "magus/orchestrator.hpp"
#include "magus/scripted_backend.hpp"

namespace magus {

std::vector<SweepTask> load_sweep_tasks(const std::filesystem::path& fixtures,
                                        const std::optional<std::filesystem::path>& tasks_file) {
    std::vector<SweepTask> tasks;
    if (tasks_file) {
        std::ifstream in(*tasks_file);
        if (!in) throw Error("cannot open tasks file " + tasks_file->string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const auto j = nlohmann::json::parse(line);
            SweepTask task;
            task.question = j.at("question").get<std::string>();
            task.modality = modality_from_string(j.value("modality", "text"));
            tasks.push_back(std::move(task));
        }
    } else {
        std::ifstream in(fixtures);
        if (!in) throw Error("cannot open fixture file " + fixtures.string());
        const auto j = nlohmann::json::parse(in);
        if (!j.contains("tasks") || !j["tasks"].is_array()) {
            throw Error("fixture file has no embedded \"tasks\" array; pass --tasks");
        }
        for (const auto& item : j["tasks"]) {
            SweepTask task;
            task.question = item.at("question").get<std::string>();
            task.modality = modality_from_string(item.value("modality", "text"));
            tasks.push_back(std::move(task));
        }
    }
    if (tasks.empty()) throw Error("threshold sweep needs at least one task");
    return tasks;
}

ThresholdSweepResult run_threshold_sweep(const std::vector<double>& grid,
                                         const std::vector<SweepTask>& tasks,
                                         const std::filesystem::path& fixtures,
                                         const RoleRegistry& roles,
                                         const ActionRegistry& actions,
                                         SearchConfig base_config,
                                         ProbsFallback fallback,
                                         const std::filesystem::path& scratch_dir) {
    ThresholdSweepResult result;
    result.task_count = static_cast<int>(tasks.size());
    ArtifactStore store(scratch_dir);

    for (double tau : grid) {
        SweepRow row;
        row.tau = tau;
        double best_sum = 0.0;
        for (const auto& task : tasks) {
            // Fresh backend per run: sequence-keyed fixtures replay the same
            // response stream for every threshold.
            ScriptedBackend backend(fixtures, store);
            TraceLog trace(/*deterministic=*/true);
            BackendSession session(backend, trace, base_config.max_backend_retries, fallback);
            OrchestratorOptions options;
            options.reasoning_search = base_config;
            options.reasoning_search.threshold = ScoreValue(tau);
            options.deterministic = true;
            Orchestrator orchestrator(session, roles, actions, store, trace, options);

            const SearchOutcome outcome =
                orchestrator.run_reasoning(task.question, {}, task.modality);
            row.total_expansions += outcome.explored_count - 1;
            if (outcome.explored_count == 1 &&
                outcome.terminated_by == TerminationReason::ThresholdMet) {
                ++row.early_accepts;
            }
            best_sum += outcome.best.score.value();
        }
        row.mean_best_score = best_sum / static_cast<double>(tasks.size());
        result.rows.push_back(row);
    }
    return result;
}

std::string render_sweep_table(const ThresholdSweepResult& result) {
    std::ostringstream os;
    os << "tau    expansions  early_accepts  mean_best_score\n";
    char buf[80];
    for (const auto& row : result.rows) {
        std::snprintf(buf, sizeof(buf), "%-6.2f %-11ld %-14d %.4f\n", row.tau,
                      row.total_expansions, row.early_accepts, row.mean_best_score);
        os << buf;
    }
    return os.str();
}

}  // namespace magus
