#include "magus/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace magus {

std::string to_string(Modality m) {
    switch (m) {
        case Modality::Text: return "text";
        case Modality::Image: return "image";
        case Modality::Audio: return "audio";
        case Modality::Video: return "video";
    }
    return "text";
}

Modality modality_from_string(std::string_view s) {
    if (s == "text") return Modality::Text;
    if (s == "image") return Modality::Image;
    if (s == "audio") return Modality::Audio;
    if (s == "video") return Modality::Video;
    throw Error("unknown modality '" + std::string(s) + "'");
}

std::string to_string(const TaskKind& kind) {
    return (kind.is_reasoning() ? std::string("reasoning:") : std::string("generation:")) +
           to_string(kind.modality);
}

TaskKind task_kind_from_string(std::string_view s) {
    auto sep = s.find(':');
    if (sep == std::string_view::npos) throw Error("bad task kind '" + std::string(s) + "'");
    auto type = s.substr(0, sep);
    auto modality = modality_from_string(s.substr(sep + 1));
    if (type == "reasoning") return TaskKind::reasoning(modality);
    if (type == "generation") return TaskKind::generation(modality);
    throw Error("bad task kind '" + std::string(s) + "'");
}

ScoreValue::ScoreValue(double raw) {
    if (std::isnan(raw)) {
        value_ = 0.0;
        clamped_ = true;
    } else if (raw < 0.0) {
        value_ = 0.0;
        clamped_ = true;
    } else if (raw > 1.0) {
        value_ = 1.0;
        clamped_ = true;
    } else {
        value_ = raw;
    }
}

int node_depth(const SearchNode& node) {
    return static_cast<int>(node.actions.size());
}

namespace {
// U+001F, cannot appear in an action identifier.
constexpr char kKeySeparator = '\x1f';
}  // namespace

std::string action_set_key(const std::vector<std::string>& actions) {
    std::vector<std::string> sorted = actions;
    std::sort(sorted.begin(), sorted.end());
    std::string key;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i > 0 && sorted[i] == sorted[i - 1]) throw DuplicateAction(sorted[i]);
        if (i > 0) key.push_back(kKeySeparator);
        key += sorted[i];
    }
    return key;
}

void SearchConfig::validate() const {
    if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
    if (beam_width < 1) throw ConfigError("beam_width must be >= 1");
    if (max_backend_retries < 0) throw ConfigError("max_backend_retries must be >= 0");
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

}  // namespace magus
