#include "magus/backend.hpp"

#include <algorithm>

#include "magus/errors.hpp"

namespace magus {

void validate(const ChatRequest& request) {
    bool has_user = false;
    for (const auto& msg : request.messages) {
        if (msg.role == ChatMessage::Role::User) has_user = true;
        if (msg.role == ChatMessage::Role::Assistant) {
            for (const auto& part : msg.parts) {
                if (std::holds_alternative<MediaRef>(part)) {
                    throw InvalidRequest("media parts are only allowed on user messages");
                }
            }
        }
    }
    if (!has_user) throw InvalidRequest("chat request needs at least one user message");
    if (request.temperature < 0.0) throw InvalidRequest("temperature must be >= 0");
}

std::string chat_digest(const ChatRequest& request) {
    // U+001E separates fields so "ab"+"c" and "a"+"bc" differ.
    constexpr char sep = '\x1e';
    std::uint64_t h = fnv1a64(request.role_name);
    h = fnv1a64(std::string(1, sep), h);
    for (const auto& msg : request.messages) {
        for (const auto& part : msg.parts) {
            if (const auto* text = std::get_if<std::string>(&part)) {
                h = fnv1a64(*text, h);
                h = fnv1a64(std::string(1, sep), h);
            }
        }
    }
    for (const auto& id : media_ids_of(request)) {
        h = fnv1a64(id, h);
        h = fnv1a64(std::string(1, sep), h);
    }
    return hex64(h);
}

std::vector<std::string> media_ids_of(const ChatRequest& request) {
    std::vector<std::string> ids;
    for (const auto& msg : request.messages) {
        for (const auto& part : msg.parts) {
            if (const auto* media = std::get_if<MediaRef>(&part)) ids.push_back(media->id);
        }
    }
    return ids;
}

nlohmann::json default_media_params(Modality modality) {
    switch (modality) {
        case Modality::Video:
            return {{"frames", 41}, {"width", 832},   {"height", 480}, {"steps", 50},
                    {"guidance", 5.0}, {"solver", "unipc"}, {"fps", 8}};
        case Modality::Image: {
            auto params = default_media_params(Modality::Video);
            params["frames"] = 1;
            return params;
        }
        case Modality::Audio:
            return {{"steps", 50},
                    {"duration_s", 10.0},
                    {"sample_rate_hz", 16000},
                    {"channels", "mono"}};
        case Modality::Text:
            break;
    }
    throw InvalidParams("no media generation params for modality text");
}

void validate_media_params(Modality modality, const nlohmann::json& params) {
    const auto schema = default_media_params(modality);
    if (!params.is_object()) throw InvalidParams("params must be a JSON object");
    for (const auto& [key, value] : params.items()) {
        if (!schema.contains(key)) {
            throw InvalidParams("unknown param '" + key + "' for modality " + to_string(modality));
        }
        const auto& def = schema[key];
        if (def.is_string() != value.is_string() ||
            (def.is_number() && !value.is_number())) {
            throw InvalidParams("param '" + key + "' has the wrong type");
        }
        if (def.is_number() && value.get<double>() <= 0.0) {
            throw InvalidParams("param '" + key + "' must be positive");
        }
    }
}

nlohmann::json media_params_with_defaults(Modality modality, const nlohmann::json& overrides) {
    auto params = default_media_params(modality);
    if (!overrides.is_null()) {
        validate_media_params(modality, overrides);
        for (const auto& [key, value] : overrides.items()) params[key] = value;
    }
    return params;
}

std::string media_digest(const MediaGenRequest& request) {
    constexpr char sep = '\x1e';
    std::uint64_t h = fnv1a64(request.prompt);
    h = fnv1a64(std::string(1, sep), h);
    h = fnv1a64(to_string(request.modality), h);
    h = fnv1a64(std::string(1, sep), h);
    // nlohmann serializes object keys sorted, so the dump is canonical.
    h = fnv1a64(request.params.dump(), h);
    h = fnv1a64(std::string(1, sep), h);
    if (request.seed) h = fnv1a64(std::to_string(*request.seed), h);
    return hex64(h);
}

BackendSession::BackendSession(Backend& backend, TraceLog& trace, int max_retries,
                               ProbsFallback fallback)
    : backend_(backend), trace_(trace), max_retries_(max_retries), fallback_(fallback) {}

ChatResponse BackendSession::chat(const ChatRequest& request) {
    validate(request);
    if (request.want_token_probs && !backend_.supports_token_probs() &&
        fallback_.mode == ProbsFallback::Mode::None) {
        throw UnsupportedCapability("backend '" + backend_.id() +
                                    "' cannot return token probabilities and no fallback is configured");
    }
    const std::string digest = chat_digest(request);
    const auto media_ids = media_ids_of(request);
    // The full text payload goes into the trace so request contents stay
    // assertable offline (e.g. that a refiner saw the parent judgement).
    std::string request_text;
    for (const auto& msg : request.messages) {
        for (const auto& part : msg.parts) {
            if (const auto* text = std::get_if<std::string>(&part)) {
                if (!request_text.empty()) request_text += "\n";
                request_text += *text;
            }
        }
    }
    for (int attempt = 1;; ++attempt) {
        nlohmann::json payload = {
            {"call", "chat"},          {"role", request.role_name},
            {"backend", backend_.id()}, {"digest", digest},
            {"media_ids", media_ids},  {"attempt", attempt},
            {"request_text", request_text},
        };
        try {
            ChatResponse response = backend_.chat(request);
            payload["ok"] = true;
            payload["response_chars"] = response.text.size();
            payload["token_probs_count"] =
                response.token_probs ? response.token_probs->size() : 0;
            trace_.append(TraceKind::BackendCall, std::move(payload));
            return response;
        } catch (const TransportError& e) {
            payload["ok"] = false;
            payload["error"] = e.what();
            const bool exhausted = !e.transient() || attempt > max_retries_;
            payload["exhausted"] = exhausted;
            trace_.append(TraceKind::BackendCall, std::move(payload));
            if (exhausted) throw;
        }
    }
}

MediaGenResponse BackendSession::generate_media(const MediaGenRequest& request,
                                                const std::string& requesting_role) {
    MediaGenRequest filled = request;
    filled.params = media_params_with_defaults(request.modality, request.params);
    const std::string digest = media_digest(filled);
    std::vector<std::string> media_ids;
    if (filled.conditioning) media_ids.push_back(filled.conditioning->id);
    for (int attempt = 1;; ++attempt) {
        nlohmann::json payload = {
            {"call", "media"},          {"role", requesting_role},
            {"backend", backend_.id()},  {"digest", digest},
            {"modality", to_string(filled.modality)},
            {"media_ids", media_ids},   {"attempt", attempt},
        };
        try {
            MediaGenResponse response = backend_.generate_media(filled);
            payload["ok"] = true;
            payload["artifact"] = response.artifact.id;
            trace_.append(TraceKind::BackendCall, std::move(payload));
            return response;
        } catch (const TransportError& e) {
            payload["ok"] = false;
            payload["error"] = e.what();
            const bool exhausted = !e.transient() || attempt > max_retries_;
            payload["exhausted"] = exhausted;
            trace_.append(TraceKind::BackendCall, std::move(payload));
            if (exhausted) throw;
        }
    }
}

}  // namespace magus
