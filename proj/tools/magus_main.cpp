// Command-line entry point: wires config, backends, and subcommands onto the
// engine library.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "magus/artifact_store.hpp"
#include "magus/cognition.hpp"
#include "magus/config.hpp"
#include "magus/errors.hpp"
#include "magus/http_backend.hpp"
#include "magus/instruction_eval.hpp"
#include "magus/orchestrator.hpp"
#include "magus/scripted_backend.hpp"
#include "magus/sweep.hpp"
#include "magus/trace.hpp"

namespace fs = std::filesystem;
using namespace magus;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunError = 1;
constexpr int kExitConfigError = 2;

struct CommonOpts {
    std::string config_path;
    bool offline = false;
    std::string fixtures;
    std::string out_dir;
    bool deterministic = false;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> media;  // modality:path
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_media = false) {
    cmd->add_option("--config", opts.config_path, "Config file (TOML-style key/value)");
    cmd->add_flag("--offline", opts.offline, "Use the scripted backend; no network");
    cmd->add_option("--fixtures", opts.fixtures, "Fixture file for the scripted backend");
    cmd->add_option("--out", opts.out_dir, "Run directory (created if missing)");
    cmd->add_flag("--deterministic", opts.deterministic,
                  "Deterministic trace mode (byte-comparable outputs)");
    cmd->add_option("--seed", opts.seed, "Run-level seed");
    if (with_media) {
        cmd->add_option("--media", opts.media,
                        "Attach media as <modality>:<path> (repeatable)");
    }
}

Config resolve_config(const CommonOpts& opts) {
    Config config = opts.config_path.empty() ? Config{} : load_config(opts.config_path);
    if (opts.offline) config.backend_mode = Config::BackendMode::Offline;
    if (!opts.fixtures.empty()) config.fixtures = opts.fixtures;
    if (opts.deterministic) config.orchestrator.deterministic = true;
    if (opts.seed) config.orchestrator.seed = *opts.seed;
    config.validate();
    return config;
}

fs::path resolve_run_dir(const Config& config, const CommonOpts& opts,
                         const std::string& instruction) {
    if (!opts.out_dir.empty()) return opts.out_dir;
    std::string name;
    if (config.orchestrator.deterministic) {
        name = "run-" + hex64(fnv1a64(instruction, config.orchestrator.seed));
    } else {
        const auto now = std::chrono::system_clock::now().time_since_epoch();
        name = "run-" + std::to_string(
                            std::chrono::duration_cast<std::chrono::milliseconds>(now).count());
    }
    return config.run_root / name;
}

// Owns everything a run needs, in construction order.
struct Runtime {
    Config config;
    fs::path run_dir;
    std::unique_ptr<ArtifactStore> store;
    std::unique_ptr<Backend> backend;
    std::unique_ptr<TraceLog> trace;
    std::unique_ptr<BackendSession> session;
    RoleRegistry roles;
    ActionRegistry actions;
    std::unique_ptr<Orchestrator> orchestrator;
};

Runtime build_runtime(const CommonOpts& opts, const std::string& instruction) {
    Runtime rt;
    rt.config = resolve_config(opts);
    rt.run_dir = resolve_run_dir(rt.config, opts, instruction);
    fs::create_directories(rt.run_dir);
    rt.store = std::make_unique<ArtifactStore>(rt.run_dir);

    if (rt.config.backend_mode == Config::BackendMode::Offline) {
        rt.backend = std::make_unique<ScriptedBackend>(*rt.config.fixtures, *rt.store);
    } else {
        RemoteBackendConfig remote;
        remote.chat_endpoint = rt.config.chat_endpoint;
        remote.media_endpoint = rt.config.media_endpoint;
        remote.model = rt.config.model;
        remote.bearer_token = rt.config.bearer_token();
        remote.has_token_probs = rt.config.has_token_probs;
        rt.backend = std::make_unique<RemoteBackend>(remote, *rt.store);
    }

    rt.trace = std::make_unique<TraceLog>(rt.config.orchestrator.deterministic);
    rt.session = std::make_unique<BackendSession>(*rt.backend, *rt.trace,
                                                  rt.config.max_backend_retries,
                                                  rt.config.probs_fallback);
    rt.roles = RoleRegistry::load(rt.config.prompt_overrides);
    if (rt.config.action_extensions) rt.actions.load_extensions(*rt.config.action_extensions);
    check_role_integrity(rt.roles, rt.actions);

    rt.orchestrator = std::make_unique<Orchestrator>(*rt.session, rt.roles, rt.actions,
                                                     *rt.store, *rt.trace,
                                                     rt.config.orchestrator);
    return rt;
}

std::vector<MediaRef> import_media(Runtime& rt, const std::vector<std::string>& specs) {
    std::vector<MediaRef> media;
    for (const auto& spec : specs) {
        const auto colon = spec.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("--media expects <modality>:<path>, got '" + spec + "'");
        }
        const Modality modality = modality_from_string(spec.substr(0, colon));
        media.push_back(rt.store->import_file(spec.substr(colon + 1), modality));
    }
    return media;
}

std::vector<double> parse_grid(const std::string& grid) {
    std::vector<double> out;
    std::string token;
    std::istringstream in(grid);
    while (std::getline(in, token, ',')) {
        if (token.empty()) continue;
        out.push_back(std::stod(token));
    }
    if (out.empty()) throw ConfigError("--grid needs at least one threshold");
    return out;
}

int run_guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRunError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRunError;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"magus: two-phase multi-agent engine with growth-aware search"};
    app.require_subcommand(1);

    // run
    CommonOpts run_opts;
    std::string run_instruction;
    std::string run_plan_file;
    auto* cmd_run = app.add_subcommand("run", "Full pipeline: cognize, search, speak");
    cmd_run->add_option("--instruction", run_instruction, "User instruction")->required();
    cmd_run->add_option("--plan", run_plan_file, "Skip cognition; use this plan.json");
    add_common(cmd_run, run_opts, /*with_media=*/true);

    // cognize
    CommonOpts cog_opts;
    std::string cog_instruction;
    auto* cmd_cognize = app.add_subcommand("cognize", "Produce a task plan only");
    cmd_cognize->add_option("--instruction", cog_instruction, "User instruction")->required();
    add_common(cmd_cognize, cog_opts, /*with_media=*/true);

    // reason
    CommonOpts reason_opts;
    std::string reason_question;
    std::string reason_modality = "";
    double reason_tau = -1.0;
    auto* cmd_reason = app.add_subcommand("reason", "Growth-aware search on a question");
    cmd_reason->add_option("--question", reason_question, "Question text")->required();
    cmd_reason->add_option("--modality", reason_modality,
                           "Task modality (default: first media's, else text)");
    cmd_reason->add_option("--tau", reason_tau, "Confidence threshold override");
    add_common(cmd_reason, reason_opts, /*with_media=*/true);

    // generate
    CommonOpts gen_opts;
    std::string gen_prompt;
    std::string gen_modality;
    double gen_tau = -1.0;
    auto* cmd_generate = app.add_subcommand("generate", "Growth-aware search on a prompt");
    cmd_generate->add_option("--prompt", gen_prompt, "Generation prompt")->required();
    cmd_generate->add_option("--modality", gen_modality, "image | video | audio")->required();
    cmd_generate->add_option("--tau", gen_tau, "Confidence threshold override");
    add_common(cmd_generate, gen_opts);

    // eval-instructions
    CommonOpts eval_opts;
    std::string eval_dataset;
    std::string eval_predictions;
    std::string eval_json_out;
    auto* cmd_eval = app.add_subcommand("eval-instructions",
                                        "Strict/flexible accuracy over a dataset");
    cmd_eval->add_option("--dataset", eval_dataset, "JSONL dataset")->required();
    cmd_eval->add_option("--predictions", eval_predictions,
                         "Precomputed predictions JSONL (offline evaluation)");
    cmd_eval->add_option("--json", eval_json_out, "Also write the report as JSON");
    add_common(cmd_eval, eval_opts);

    // trace show
    std::string trace_run_dir;
    auto* cmd_trace = app.add_subcommand("trace", "Trace utilities");
    auto* cmd_trace_show = cmd_trace->add_subcommand("show", "Render a run trace");
    cmd_trace_show->add_option("run_dir", trace_run_dir, "Run directory")->required();

    // sweep-threshold
    CommonOpts sweep_opts;
    std::string sweep_grid = "0.0,0.2,0.4,0.6,0.8,1.0";
    std::string sweep_tasks_file;
    std::string sweep_json_out;
    auto* cmd_sweep = app.add_subcommand(
        "sweep-threshold", "Score-vs-threshold table over the reasoning fixture suite");
    cmd_sweep->add_option("--grid", sweep_grid, "Comma-separated thresholds");
    cmd_sweep->add_option("--tasks", sweep_tasks_file, "Tasks JSONL (else embedded in fixtures)");
    cmd_sweep->add_option("--json", sweep_json_out, "Also write rows as JSON");
    add_common(cmd_sweep, sweep_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfigError;
    }

    if (cmd_run->parsed()) {
        return run_guarded([&] {
            Runtime rt = build_runtime(run_opts, run_instruction);
            const auto media = import_media(rt, run_opts.media);
            RunRecord record;
            if (!run_plan_file.empty()) {
                std::ifstream in(run_plan_file);
                if (!in) throw ConfigError("cannot open plan file " + run_plan_file);
                record = rt.orchestrator->run_with_plan(
                    run_instruction, plan_from_json(nlohmann::json::parse(in), media));
            } else {
                record = rt.orchestrator->run(run_instruction, media);
            }
            std::cout << record.final_response << "\n";
            std::cout << "run directory: " << rt.run_dir.string() << "\n";
            return kExitOk;
        });
    }

    if (cmd_cognize->parsed()) {
        return run_guarded([&] {
            Runtime rt = build_runtime(cog_opts, cog_instruction);
            const auto media = import_media(rt, cog_opts.media);
            const TaskPlan plan =
                cognize(*rt.session, rt.roles, cog_instruction, media,
                        rt.config.orchestrator.cognition_max_rounds);
            const auto doc = plan_to_json(plan);
            std::cout << doc.dump(2) << "\n";
            std::ofstream out(rt.run_dir / "plan.json", std::ios::trunc);
            out << doc.dump(2) << "\n";
            return kExitOk;
        });
    }

    if (cmd_reason->parsed()) {
        return run_guarded([&] {
            Runtime rt = build_runtime(reason_opts, reason_question);
            if (reason_tau >= 0.0) {
                rt.orchestrator = nullptr;
                rt.config.orchestrator.reasoning_search.threshold = ScoreValue(reason_tau);
                rt.orchestrator = std::make_unique<Orchestrator>(
                    *rt.session, rt.roles, rt.actions, *rt.store, *rt.trace,
                    rt.config.orchestrator);
            }
            const auto media = import_media(rt, reason_opts.media);
            Modality modality = Modality::Text;
            if (!reason_modality.empty()) modality = modality_from_string(reason_modality);
            else if (!media.empty()) modality = media.front().modality;

            const std::string run_id = rt.orchestrator->begin_run(reason_question);
            const SearchOutcome outcome =
                rt.orchestrator->run_reasoning(reason_question, media, modality);

            TaskPlan plan;
            plan.intent = reason_question;
            plan.steps = {{TaskKind::reasoning(modality), reason_question, media}};
            RunRecord record;
            record.run_id = run_id;
            record.instruction = reason_question;
            record.plan = plan;
            record.step_outcomes = {
                {StepOutcome::Status::Ok, "", outcome}};
            record.final_response = outcome.best.reasoning().node_answer;
            rt.orchestrator->persist(record);

            std::cout << record.final_response << "\n";
            std::cout << "score: " << outcome.best.score.value()
                      << "  explored: " << outcome.explored_count
                      << "  terminated_by: " << to_string(outcome.terminated_by) << "\n";
            std::cout << "run directory: " << rt.run_dir.string() << "\n";
            return kExitOk;
        });
    }

    if (cmd_generate->parsed()) {
        return run_guarded([&] {
            Runtime rt = build_runtime(gen_opts, gen_prompt);
            if (gen_tau >= 0.0) {
                rt.orchestrator = nullptr;
                rt.config.orchestrator.generation_search.threshold = ScoreValue(gen_tau);
                rt.orchestrator = std::make_unique<Orchestrator>(
                    *rt.session, rt.roles, rt.actions, *rt.store, *rt.trace,
                    rt.config.orchestrator);
            }
            const Modality modality = modality_from_string(gen_modality);
            const std::string run_id = rt.orchestrator->begin_run(gen_prompt);
            const SearchOutcome outcome = rt.orchestrator->run_generation(gen_prompt, modality);

            TaskPlan plan;
            plan.intent = gen_prompt;
            plan.steps = {{TaskKind::generation(modality), gen_prompt, {}}};
            RunRecord record;
            record.run_id = run_id;
            record.instruction = gen_prompt;
            record.plan = plan;
            record.step_outcomes = {{StepOutcome::Status::Ok, "", outcome}};
            const auto& best = outcome.best.generation();
            record.final_response = "generated " + to_string(modality) + " " +
                                    best.node_answer.id + " (score " +
                                    render_score(outcome.best.score.value()) + ")";
            record.artifacts = {best.node_answer};
            rt.orchestrator->persist(record);

            std::cout << record.final_response << "\n";
            std::cout << "run directory: " << rt.run_dir.string() << "\n";
            return kExitOk;
        });
    }

    if (cmd_eval->parsed()) {
        return run_guarded([&] {
            const auto samples = load_dataset(eval_dataset);
            ModalityPredictor predictor;
            std::unique_ptr<Runtime> rt;
            if (!eval_predictions.empty()) {
                predictor = file_predictor(eval_predictions);
            } else {
                rt = std::make_unique<Runtime>(build_runtime(eval_opts, "eval-instructions"));
                predictor = [&rt](const std::string& instruction) {
                    const TaskPlan plan =
                        cognize(*rt->session, rt->roles, instruction, {},
                                rt->config.orchestrator.cognition_max_rounds);
                    return plan_modalities(plan);
                };
            }
            const EvalReport report = evaluate(samples, predictor);
            std::cout << render_report_table(report);
            if (!eval_json_out.empty()) {
                std::ofstream out(eval_json_out, std::ios::trunc);
                out << report_to_json(report).dump(2) << "\n";
            }
            return kExitOk;
        });
    }

    if (cmd_trace_show->parsed()) {
        return run_guarded([&] {
            const ParsedTrace parsed = read_trace_jsonl(fs::path(trace_run_dir) / "trace.jsonl");
            std::cout << "header: " << parsed.header.dump() << "\n";
            for (const auto& event : parsed.events) {
                std::cout << render_trace_line(event) << "\n";
            }
            return kExitOk;
        });
    }

    if (cmd_sweep->parsed()) {
        return run_guarded([&] {
            Config config = resolve_config(sweep_opts);
            if (!config.fixtures) throw ConfigError("sweep-threshold requires --fixtures");
            const auto grid = parse_grid(sweep_grid);
            std::optional<fs::path> tasks_file;
            if (!sweep_tasks_file.empty()) tasks_file = sweep_tasks_file;
            const auto tasks = load_sweep_tasks(*config.fixtures, tasks_file);

            const RoleRegistry roles = RoleRegistry::load(config.prompt_overrides);
            ActionRegistry actions;
            if (config.action_extensions) actions.load_extensions(*config.action_extensions);

            const fs::path scratch =
                sweep_opts.out_dir.empty() ? fs::path("runs") / "sweep-scratch"
                                           : fs::path(sweep_opts.out_dir);
            const ThresholdSweepResult result = run_threshold_sweep(
                grid, tasks, *config.fixtures, roles, actions,
                config.orchestrator.reasoning_search, config.probs_fallback, scratch);
            std::cout << render_sweep_table(result);
            if (!sweep_json_out.empty()) {
                nlohmann::json rows = nlohmann::json::array();
                for (const auto& row : result.rows) {
                    rows.push_back({{"tau", row.tau},
                                    {"expansions", row.total_expansions},
                                    {"early_accepts", row.early_accepts},
                                    {"mean_best_score", row.mean_best_score}});
                }
                std::ofstream out(sweep_json_out, std::ios::trunc);
                out << rows.dump(2) << "\n";
            }
            return kExitOk;
        });
    }

    std::cerr << app.help() << "\n";
    return kExitConfigError;
}
