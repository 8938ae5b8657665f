#pragma once

#include <atomic>
#include <cstdint>
#include <string>

#include "magus/artifact_store.hpp"
#include "magus/backend.hpp"

namespace magus {

struct RemoteBackendConfig {
    std::string chat_endpoint;    // e.g. http://127.0.0.1:8080
    std::string media_endpoint;   // may equal chat_endpoint
    std::string model = "default";
    std::string bearer_token;     // empty = no Authorization header
    bool has_token_probs = true;  // declared capability
    int timeout_s = 120;
};

// Client for the two model-service endpoints.
//
// Chat is an OpenAI-compatible completions call:
//   POST /v1/chat/completions {model, messages, logprobs, temperature, seed}
// where user message content is a part list ({type:"text"} / {type:"media"}).
// The response is read from choices[0].text (or choices[0].message.content)
// plus choices[0].logprobs: either a plain "token_probs" array or OpenAI
// "content[].logprob" entries, which get exponentiated.
//
// Media generation:
//   POST /generate {prompt, modality, params, seed[, conditioning]}
//   -> {artifact_url}; the artifact is fetched and stored locally.
class RemoteBackend : public Backend {
public:
    RemoteBackend(RemoteBackendConfig config, ArtifactStore& store);

    std::string id() const override { return "remote:" + config_.model; }
    bool supports_token_probs() const override { return config_.has_token_probs; }

    ChatResponse chat(const ChatRequest& request) override;
    MediaGenResponse generate_media(const MediaGenRequest& request) override;

    // Counts every HTTP attempt made by any RemoteBackend in this process;
    // the offline guarantee is asserted against it.
    static std::uint64_t http_attempts();

private:
    std::string post_json(const std::string& endpoint, const std::string& path,
                          const std::string& body);
    std::string get_bytes(const std::string& endpoint, const std::string& path);

    RemoteBackendConfig config_;
    ArtifactStore& store_;

    static std::atomic<std::uint64_t> http_attempts_;
};

}  // namespace magus
