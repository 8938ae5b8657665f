#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "magus/artifact_store.hpp"
#include "magus/backend.hpp"

namespace magus {

// Deterministic fixture-driven backend for offline runs and tests.
//
// Fixture file: a JSON object mapping keys to responses.
//   "role|<digest>"   exact match on the canonical input digest
//   "role|seq:<n>"    the n-th call (0-based) made with that role
//   "role|*"          any call with that role
// Lookup tries exact, then seq, then wildcard. Chat entries are
// {"text": ..., "token_probs": [...]}; media entries are
// {"artifact_bytes_b64": ..., "meta": {...}}.
//
// Chat misses raise MissingFixture so tests fail loudly. Media misses fall
// back to the stub generator, which synthesizes a placeholder artifact whose
// bytes are a pure function of (prompt, params, seed).
//
// A top-level "tasks" key is reserved for the threshold-sweep harness and
// ignored here.
class ScriptedBackend : public Backend {
public:
    ScriptedBackend(nlohmann::json fixtures, ArtifactStore& store);
    ScriptedBackend(const std::filesystem::path& fixture_file, ArtifactStore& store);

    // Parses with duplicate-key detection; FixtureError on parse problems.
    static nlohmann::json parse_fixture_file(const std::filesystem::path& fixture_file);

    std::string id() const override { return "scripted"; }
    bool supports_token_probs() const override { return true; }

    ChatResponse chat(const ChatRequest& request) override;
    MediaGenResponse generate_media(const MediaGenRequest& request) override;

    // When set, media lookup misses raise MissingFixture instead of using
    // the stub generator.
    void set_strict_media(bool strict) { strict_media_ = strict; }

    std::size_t entry_count() const { return entries_.size(); }

private:
    const nlohmann::json* find(const std::string& role, const std::string& digest);

    std::map<std::string, nlohmann::json> entries_;
    ArtifactStore& store_;
    bool strict_media_ = false;

    std::mutex mu_;
    std::map<std::string, std::uint64_t> call_counts_;  // per role
};

// Placeholder bytes for offline media generation. params must already carry
// the modality defaults.
std::string stub_artifact_bytes(const MediaGenRequest& request);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);  // throws FixtureError on bad input

}  // namespace magus
