#include "magus/http_backend.hpp"

#include <cmath>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "magus/errors.hpp"

namespace magus {

std::atomic<std::uint64_t> RemoteBackend::http_attempts_{0};

std::uint64_t RemoteBackend::http_attempts() { return http_attempts_.load(); }

RemoteBackend::RemoteBackend(RemoteBackendConfig config, ArtifactStore& store)
    : config_(std::move(config)), store_(store) {
    if (config_.chat_endpoint.empty()) throw ConfigError("remote backend needs a chat endpoint");
    if (config_.media_endpoint.empty()) config_.media_endpoint = config_.chat_endpoint;
}

namespace {

// Splits "http://host:port/some/path" into endpoint and path.
std::pair<std::string, std::string> split_url(const std::string& url,
                                              const std::string& default_endpoint) {
    if (url.rfind("http://", 0) != 0 && url.rfind("https://", 0) != 0) {
        return {default_endpoint, url};
    }
    const auto host_start = url.find("://") + 3;
    const auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

nlohmann::json message_to_json(const ChatMessage& msg) {
    nlohmann::json content = nlohmann::json::array();
    for (const auto& part : msg.parts) {
        if (const auto* text = std::get_if<std::string>(&part)) {
            content.push_back({{"type", "text"}, {"text", *text}});
        } else {
            const auto& media = std::get<MediaRef>(part);
            content.push_back({{"type", "media"},
                               {"modality", to_string(media.modality)},
                               {"id", media.id},
                               {"uri", media.uri}});
        }
    }
    return {{"role", msg.role == ChatMessage::Role::User ? "user" : "assistant"},
            {"content", content}};
}

std::optional<std::vector<double>> parse_token_probs(const nlohmann::json& choice) {
    if (!choice.contains("logprobs") || choice["logprobs"].is_null()) return std::nullopt;
    const auto& lp = choice["logprobs"];
    if (lp.contains("token_probs") && lp["token_probs"].is_array()) {
        return lp["token_probs"].get<std::vector<double>>();
    }
    if (lp.contains("content") && lp["content"].is_array()) {
        std::vector<double> probs;
        probs.reserve(lp["content"].size());
        for (const auto& item : lp["content"]) {
            probs.push_back(std::exp(item.at("logprob").get<double>()));
        }
        return probs;
    }
    return std::nullopt;
}

}  // namespace

std::string RemoteBackend::post_json(const std::string& endpoint, const std::string& path,
                                     const std::string& body) {
    ++http_attempts_;
    httplib::Client client(endpoint);
    client.set_connection_timeout(config_.timeout_s, 0);
    client.set_read_timeout(config_.timeout_s, 0);
    httplib::Headers headers;
    if (!config_.bearer_token.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.bearer_token);
    }
    auto result = client.Post(path, headers, body, "application/json");
    if (!result) {
        throw TransportError("POST " + endpoint + path + " failed: " +
                                 httplib::to_string(result.error()),
                             /*transient=*/true);
    }
    if (result->status >= 500) {
        throw TransportError("POST " + endpoint + path + " -> " + std::to_string(result->status),
                             /*transient=*/true);
    }
    if (result->status < 200 || result->status >= 300) {
        throw TransportError("POST " + endpoint + path + " -> " + std::to_string(result->status) +
                                 " " + result->body,
                             /*transient=*/false);
    }
    return result->body;
}

std::string RemoteBackend::get_bytes(const std::string& endpoint, const std::string& path) {
    ++http_attempts_;
    httplib::Client client(endpoint);
    client.set_connection_timeout(config_.timeout_s, 0);
    client.set_read_timeout(config_.timeout_s, 0);
    auto result = client.Get(path);
    if (!result) {
        throw TransportError("GET " + endpoint + path + " failed: " +
                                 httplib::to_string(result.error()),
                             /*transient=*/true);
    }
    if (result->status != 200) {
        throw TransportError("GET " + endpoint + path + " -> " + std::to_string(result->status),
                             result->status >= 500);
    }
    return result->body;
}

ChatResponse RemoteBackend::chat(const ChatRequest& request) {
    validate(request);
    nlohmann::json messages = nlohmann::json::array();
    messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
    for (const auto& msg : request.messages) messages.push_back(message_to_json(msg));

    nlohmann::json body = {
        {"model", config_.model},
        {"messages", messages},
        {"logprobs", request.want_token_probs && config_.has_token_probs},
        {"temperature", request.temperature},
    };
    if (request.seed) body["seed"] = *request.seed;

    const std::string raw = post_json(config_.chat_endpoint, "/v1/chat/completions", body.dump());
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("chat response is not JSON: ") + e.what(),
                             /*transient=*/false);
    }
    if (!parsed.contains("choices") || parsed["choices"].empty()) {
        throw TransportError("chat response has no choices", /*transient=*/false);
    }
    const auto& choice = parsed["choices"][0];

    ChatResponse response;
    response.backend_id = id();
    if (choice.contains("text") && choice["text"].is_string()) {
        response.text = choice["text"].get<std::string>();
    } else if (choice.contains("message")) {
        response.text = choice["message"].value("content", std::string{});
    }
    if (request.want_token_probs && config_.has_token_probs) {
        response.token_probs = parse_token_probs(choice);
    }
    return response;
}

MediaGenResponse RemoteBackend::generate_media(const MediaGenRequest& request) {
    MediaGenRequest filled = request;
    filled.params = media_params_with_defaults(request.modality, request.params);

    nlohmann::json body = {
        {"prompt", filled.prompt},
        {"modality", to_string(filled.modality)},
        {"params", filled.params},
    };
    if (filled.seed) body["seed"] = *filled.seed;
    if (filled.conditioning) {
        body["conditioning"] = {{"id", filled.conditioning->id},
                                {"uri", filled.conditioning->uri}};
    }

    const std::string raw = post_json(config_.media_endpoint, "/generate", body.dump());
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("media response is not JSON: ") + e.what(),
                             /*transient=*/false);
    }
    const std::string artifact_url = parsed.value("artifact_url", std::string{});
    if (artifact_url.empty()) {
        throw TransportError("media response lacks artifact_url", /*transient=*/false);
    }
    auto [endpoint, path] = split_url(artifact_url, config_.media_endpoint);
    const std::string bytes = get_bytes(endpoint, path);

    std::map<std::string, std::string> meta;
    for (const auto& [key, value] : filled.params.items()) {
        meta[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
    if (filled.seed) meta["seed"] = std::to_string(*filled.seed);

    MediaGenResponse response;
    response.backend_id = id();
    response.artifact = store_.put(bytes, filled.modality, std::move(meta));
    return response;
}

}  // namespace magus
