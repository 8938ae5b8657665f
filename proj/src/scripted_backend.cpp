#include "magus/scripted_backend.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "magus/errors.hpp"

namespace magus {

namespace {

constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::map<std::string, std::string> params_to_meta(const nlohmann::json& params) {
    std::map<std::string, std::string> meta;
    for (const auto& [key, value] : params.items()) {
        meta[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
    return meta;
}

}  // namespace

std::string base64_encode(std::string_view bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 2 < bytes.size()) {
        const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                           (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                           static_cast<unsigned char>(bytes[i + 2]);
        out += kB64Alphabet[(v >> 18) & 63];
        out += kB64Alphabet[(v >> 12) & 63];
        out += kB64Alphabet[(v >> 6) & 63];
        out += kB64Alphabet[v & 63];
        i += 3;
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
        out += kB64Alphabet[(v >> 18) & 63];
        out += kB64Alphabet[(v >> 12) & 63];
        out += "==";
    } else if (rest == 2) {
        const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                           (static_cast<unsigned char>(bytes[i + 1]) << 8);
        out += kB64Alphabet[(v >> 18) & 63];
        out += kB64Alphabet[(v >> 12) & 63];
        out += kB64Alphabet[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

std::string base64_decode(std::string_view text) {
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::string out;
    int buffer = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        const int v = value_of(c);
        if (v < 0) throw FixtureError("invalid base64 character in fixture");
        buffer = (buffer << 6) | v;
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out += static_cast<char>((buffer >> bits) & 0xff);
        }
    }
    return out;
}

std::string stub_artifact_bytes(const MediaGenRequest& request) {
    std::ostringstream os;
    os << "magus-stub-artifact v1\n";
    os << "modality: " << to_string(request.modality) << "\n";
    os << "prompt: " << request.prompt << "\n";
    os << "params: " << request.params.dump() << "\n";
    os << "seed: " << (request.seed ? std::to_string(*request.seed) : "unset") << "\n";
    return os.str();
}

ScriptedBackend::ScriptedBackend(nlohmann::json fixtures, ArtifactStore& store) : store_(store) {
    if (!fixtures.is_object()) throw FixtureError("fixture root must be a JSON object");
    for (auto& [key, value] : fixtures.items()) {
        if (key == "tasks") continue;  // reserved for the sweep harness
        if (key.find('|') == std::string::npos) {
            throw FixtureError("fixture key '" + key + "' is not of the form role|digest");
        }
        entries_[key] = value;
    }
}

ScriptedBackend::ScriptedBackend(const std::filesystem::path& fixture_file, ArtifactStore& store)
    : ScriptedBackend(parse_fixture_file(fixture_file), store) {}

nlohmann::json ScriptedBackend::parse_fixture_file(const std::filesystem::path& fixture_file) {
    std::ifstream in(fixture_file, std::ios::binary);
    if (!in) throw FixtureError("cannot open fixture file " + fixture_file.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    // The DOM parser would silently keep the last of two duplicate keys, so
    // duplicates are detected during the parse callback.
    std::vector<std::set<std::string>> key_stack;
    std::string pending_key;
    auto callback = [&](int /*depth*/, nlohmann::json::parse_event_t event,
                        nlohmann::json& parsed) -> bool {
        switch (event) {
            case nlohmann::json::parse_event_t::object_start:
                key_stack.emplace_back();
                break;
            case nlohmann::json::parse_event_t::object_end:
                key_stack.pop_back();
                break;
            case nlohmann::json::parse_event_t::key: {
                const auto key = parsed.get<std::string>();
                if (key_stack.size() == 1 && !key_stack.back().insert(key).second) {
                    throw FixtureError("duplicate fixture key '" + key + "'");
                }
                break;
            }
            default:
                break;
        }
        return true;
    };

    nlohmann::json fixtures;
    try {
        fixtures = nlohmann::json::parse(text, callback);
    } catch (const FixtureError&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw FixtureError("fixture parse error in " + fixture_file.string() + ": " + e.what());
    }
    return fixtures;
}

const nlohmann::json* ScriptedBackend::find(const std::string& role, const std::string& digest) {
    std::lock_guard lock(mu_);
    const std::uint64_t call_index = call_counts_[role]++;
    if (auto it = entries_.find(role + "|" + digest); it != entries_.end()) return &it->second;
    if (auto it = entries_.find(role + "|seq:" + std::to_string(call_index));
        it != entries_.end()) {
        return &it->second;
    }
    if (auto it = entries_.find(role + "|*"); it != entries_.end()) return &it->second;
    return nullptr;
}

ChatResponse ScriptedBackend::chat(const ChatRequest& request) {
    validate(request);
    const std::string digest = chat_digest(request);
    const nlohmann::json* entry = find(request.role_name, digest);
    if (!entry) throw MissingFixture(request.role_name, digest);

    ChatResponse response;
    response.backend_id = id();
    response.text = entry->value("text", std::string{});
    if (request.want_token_probs && entry->contains("token_probs")) {
        response.token_probs = entry->at("token_probs").get<std::vector<double>>();
    }
    return response;
}

MediaGenResponse ScriptedBackend::generate_media(const MediaGenRequest& request) {
    MediaGenRequest filled = request;
    filled.params = media_params_with_defaults(request.modality, request.params);
    const std::string digest = media_digest(filled);
    const std::string role = "media:" + to_string(filled.modality);

    std::string bytes;
    auto meta = params_to_meta(filled.params);
    if (filled.seed) meta["seed"] = std::to_string(*filled.seed);

    if (const nlohmann::json* entry = find(role, digest)) {
        bytes = base64_decode(entry->value("artifact_bytes_b64", std::string{}));
        if (entry->contains("meta")) {
            for (const auto& [key, value] : entry->at("meta").items()) {
                meta[key] = value.is_string() ? value.get<std::string>() : value.dump();
            }
        }
    } else if (strict_media_) {
        throw MissingFixture(role, digest);
    } else {
        bytes = stub_artifact_bytes(filled);
    }

    MediaGenResponse response;
    response.backend_id = id();
    response.artifact = store_.put(bytes, filled.modality, std::move(meta));
    return response;
}

}  // namespace magus
