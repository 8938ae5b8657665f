#pragma once

// Shared helpers for the test suites: scratch directories, fixture builders,
// and a bundled scripted environment.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "magus/action_registry.hpp"
#include "magus/agent_roles.hpp"
#include "magus/artifact_store.hpp"
#include "magus/backend.hpp"
#include "magus/orchestrator.hpp"
#include "magus/scripted_backend.hpp"
#include "magus/trace.hpp"

namespace magus::testing {

inline std::filesystem::path fresh_dir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    const auto dir = std::filesystem::temp_directory_path() /
                     ("magus-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                      std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag = "t") : path(fresh_dir(tag)) {}
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline nlohmann::json chat_entry(const std::string& text,
                                 const std::vector<double>& probs = {}) {
    nlohmann::json entry = {{"text", text}};
    if (!probs.empty()) entry["token_probs"] = probs;
    return entry;
}

inline std::string wildcard(const std::string& role) { return role + "|*"; }
inline std::string seq(const std::string& role, int n) {
    return role + "|seq:" + std::to_string(n);
}

inline std::filesystem::path write_json(const std::filesystem::path& dir,
                                        const std::string& name, const nlohmann::json& doc) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::trunc);
    out << doc.dump(2);
    return path;
}

inline std::filesystem::path write_text(const std::filesystem::path& dir,
                                        const std::string& name, const std::string& text) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::trunc);
    out << text;
    return path;
}

// Everything an offline pipeline run needs, built from a fixture document.
struct ScriptedEnv {
    TempDir dir;
    ArtifactStore store;
    ScriptedBackend backend;
    TraceLog trace;
    BackendSession session;
    RoleRegistry roles;
    ActionRegistry actions;

    explicit ScriptedEnv(const nlohmann::json& fixtures, ProbsFallback fallback = {},
                         int max_retries = 2)
        : dir("env"),
          store(dir.path),
          backend(fixtures, store),
          trace(/*deterministic=*/true),
          session(backend, trace, max_retries, fallback),
          roles(RoleRegistry::defaults()) {}

    Orchestrator make_orchestrator(OrchestratorOptions options = {}) {
        options.deterministic = true;
        return Orchestrator(session, roles, actions, store, trace, options);
    }
};

inline int count_calls(const std::vector<TraceEvent>& events, const std::string& call,
                       const std::string& role) {
    int n = 0;
    for (const auto& e : events) {
        if (e.kind != TraceKind::BackendCall) continue;
        if (e.payload.value("call", "") == call && e.payload.value("role", "") == role) ++n;
    }
    return n;
}

}  // namespace magus::testing
