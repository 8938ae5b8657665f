#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "magus/backend.hpp"
#include "magus/core.hpp"
#include "magus/orchestrator.hpp"

namespace magus {

// Engine configuration, loadable from a TOML-style key/value file:
//
//   [backend]
//   mode = "offline"            # or "remote"
//   chat_endpoint = "http://127.0.0.1:8080"
//   media_endpoint = "http://127.0.0.1:8081"
//   model = "default"
//   api_key_env = "MAGUS_API_KEY"
//   has_token_probs = true
//   probs_fallback = "judge_score"   # judge_score | constant:<v> | none
//   max_retries = 2
//
//   [prompts]   overrides = "prompts.json"
//   [actions]   extensions = "actions.json"
//
//   [search.reasoning]  threshold/max_depth/beam_width/strategy/frontier_pool
//   [search.generation] ...
//
//   [cognition] max_rounds = 3
//   [run]       dir/deterministic_trace/seed/concurrent_steps/extend_prompt
//
// Quoted strings support ${ENV_VAR} interpolation so secrets stay out of the
// file. Supported value forms: "string", integer, float, true/false.
struct Config {
    enum class BackendMode { Offline, Remote };

    BackendMode backend_mode = BackendMode::Offline;
    std::string chat_endpoint;
    std::string media_endpoint;
    std::string model = "default";
    std::string api_key_env;
    bool has_token_probs = true;
    ProbsFallback probs_fallback;
    int max_backend_retries = 2;

    std::optional<std::filesystem::path> prompt_overrides;
    std::optional<std::filesystem::path> action_extensions;
    std::optional<std::filesystem::path> fixtures;  // required in offline mode

    OrchestratorOptions orchestrator;
    std::filesystem::path run_root = "runs";

    // Resolved bearer token (from api_key_env), empty when unset.
    std::string bearer_token() const;

    void validate() const;  // throws ConfigError
};

Config load_config(const std::filesystem::path& path);
Config config_from_string(const std::string& text);  // exposed for tests

}  // namespace magus
