#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "magus/core.hpp"
#include "magus/trace.hpp"

namespace magus {

// ---------------------------------------------------------------------------
// Chat contract
// ---------------------------------------------------------------------------

using MessagePart = std::variant<std::string, MediaRef>;

struct ChatMessage {
    enum class Role { User, Assistant };
    Role role = Role::User;
    std::vector<MessagePart> parts;

    static ChatMessage user(std::vector<MessagePart> parts) {
        return {Role::User, std::move(parts)};
    }
};

struct ChatRequest {
    std::string role_name;      // agent role, keys fixtures and traces
    std::string system_prompt;  // the role's full system prompt
    std::vector<ChatMessage> messages;
    bool want_token_probs = false;
    double temperature = 0.0;
    std::optional<std::uint64_t> seed;
};

// Throws InvalidRequest unless there is at least one user message and media
// parts appear only on user messages.
void validate(const ChatRequest& request);

struct ChatResponse {
    std::string text;
    std::optional<std::vector<double>> token_probs;  // each in (0,1]
    std::string backend_id;
};

// Fixture/trace digest: role name, concatenated message text, media ids.
// Deliberately excludes the system prompt so prompt overrides do not
// invalidate recorded fixtures.
std::string chat_digest(const ChatRequest& request);
std::vector<std::string> media_ids_of(const ChatRequest& request);

// ---------------------------------------------------------------------------
// Media generation contract
// ---------------------------------------------------------------------------

struct MediaGenRequest {
    std::string prompt;
    Modality modality = Modality::Image;   // never Text
    nlohmann::json params;                 // flat map, defaults filled per modality
    std::optional<MediaRef> conditioning;  // image-to-image / video conditioning
    std::optional<std::uint64_t> seed;
};

struct MediaGenResponse {
    MediaRef artifact;
    std::string backend_id;
};

// Fills unset keys with the modality defaults and rejects unknown keys or
// ill-typed values. Image defaults equal video defaults with frames = 1
// (single-frame video convention).
nlohmann::json media_params_with_defaults(Modality modality, const nlohmann::json& overrides);
void validate_media_params(Modality modality, const nlohmann::json& params);
nlohmann::json default_media_params(Modality modality);

std::string media_digest(const MediaGenRequest& request);  // prompt, params, seed

// ---------------------------------------------------------------------------
// Backend interface
// ---------------------------------------------------------------------------

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string id() const = 0;
    virtual bool supports_token_probs() const = 0;
    // Single attempt; retry policy lives in BackendSession.
    virtual ChatResponse chat(const ChatRequest& request) = 0;
    virtual MediaGenResponse generate_media(const MediaGenRequest& request) = 0;
};

// What to do when token probabilities were requested but the backend cannot
// provide them. JudgeScore reuses the judger->scorer cascade on the answer
// text; Constant pins the score (0.0 always triggers the search); None makes
// the request itself an error.
struct ProbsFallback {
    enum class Mode { JudgeScore, Constant, None };
    Mode mode = Mode::JudgeScore;
    double constant = 0.0;
};

// Retry-and-trace wrapper around a Backend. Every attempt becomes one
// BackendCall event; transient transport failures are retried up to
// max_retries additional attempts.
class BackendSession {
public:
    BackendSession(Backend& backend, TraceLog& trace, int max_retries,
                   ProbsFallback fallback = {});

    Backend& backend() { return backend_; }
    TraceLog& trace() { return trace_; }
    const ProbsFallback& fallback() const { return fallback_; }

    ChatResponse chat(const ChatRequest& request);
    // requesting_role tags the trace event with the action/agent that asked
    // for the artifact.
    MediaGenResponse generate_media(const MediaGenRequest& request,
                                    const std::string& requesting_role);

private:
    Backend& backend_;
    TraceLog& trace_;
    int max_retries_;
    ProbsFallback fallback_;
};

}  // namespace magus
