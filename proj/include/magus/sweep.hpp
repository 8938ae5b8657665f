#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "magus/action_registry.hpp"
#include "magus/agent_roles.hpp"
#include "magus/backend.hpp"
#include "magus/core.hpp"

namespace magus {

struct SweepTask {
    std::string question;
    Modality modality = Modality::Text;
};

struct SweepRow {
    double tau = 0.0;
    long total_expansions = 0;  // nodes created beyond the roots
    int early_accepts = 0;      // tasks whose root met the threshold
    double mean_best_score = 0.0;
};

struct ThresholdSweepResult {
    std::vector<SweepRow> rows;
    int task_count = 0;
};

// Tasks for the sweep: either the file given explicitly (JSONL of
// {"question": ..., "modality": ...}) or the reserved "tasks" array embedded
// in the fixture file.
std::vector<SweepTask> load_sweep_tasks(const std::filesystem::path& fixtures,
                                        const std::optional<std::filesystem::path>& tasks_file);

// Re-runs the reasoning fixture suite once per threshold in `grid`. Each
// (threshold, task) run gets a fresh scripted backend so the per-task
// response stream is identical across thresholds; the only variable is tau.
ThresholdSweepResult run_threshold_sweep(const std::vector<double>& grid,
                                         const std::vector<SweepTask>& tasks,
                                         const std::filesystem::path& fixtures,
                                         const RoleRegistry& roles,
                                         const ActionRegistry& actions,
                                         SearchConfig base_config,
                                         ProbsFallback fallback,
                                         const std::filesystem::path& scratch_dir);

std::string render_sweep_table(const ThresholdSweepResult& result);

}  // namespace magus
