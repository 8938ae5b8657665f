#include "magus/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "magus/errors.hpp"

namespace magus {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string interpolate_env(const std::string& value, std::size_t line_no) {
    std::string out;
    std::size_t i = 0;
    while (i < value.size()) {
        if (value[i] == '$' && i + 1 < value.size() && value[i + 1] == '{') {
            const auto end = value.find('}', i + 2);
            if (end == std::string::npos) {
                throw ConfigError("line " + std::to_string(line_no) + ": unterminated ${...}");
            }
            const std::string name = value.substr(i + 2, end - i - 2);
            if (const char* env = std::getenv(name.c_str())) out += env;
            i = end + 1;
        } else {
            out += value[i++];
        }
    }
    return out;
}

// Flat TOML subset: [section] headers, key = value, # comments.
std::map<std::string, std::string> parse_kv(const std::string& text) {
    std::map<std::string, std::string> values;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // Strip comments outside of quotes.
        bool in_string = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_string = !in_string;
            if (line[i] == '#' && !in_string) {
                line = line.substr(0, i);
                break;
            }
        }
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        if (stripped.front() == '[') {
            if (stripped.back() != ']') {
                throw ConfigError("line " + std::to_string(line_no) + ": malformed section");
            }
            section = trim(stripped.substr(1, stripped.size() - 2));
            continue;
        }
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");
        }
        if (value.front() == '"') {
            if (value.size() < 2 || value.back() != '"') {
                throw ConfigError("line " + std::to_string(line_no) + ": unterminated string");
            }
            value = interpolate_env(value.substr(1, value.size() - 2), line_no);
        }
        values[section.empty() ? key : section + "." + key] = value;
    }
    return values;
}

class Values {
public:
    explicit Values(std::map<std::string, std::string> raw) : raw_(std::move(raw)) {}

    std::optional<std::string> get(const std::string& key) const {
        auto it = raw_.find(key);
        if (it == raw_.end()) return std::nullopt;
        return it->second;
    }
    std::string get_or(const std::string& key, const std::string& fallback) const {
        return get(key).value_or(fallback);
    }
    bool get_bool(const std::string& key, bool fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        if (*v == "true") return true;
        if (*v == "false") return false;
        throw ConfigError("'" + key + "' must be true or false");
    }
    int get_int(const std::string& key, int fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        try {
            return std::stoi(*v);
        } catch (const std::exception&) {
            throw ConfigError("'" + key + "' must be an integer");
        }
    }
    double get_double(const std::string& key, double fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        try {
            return std::stod(*v);
        } catch (const std::exception&) {
            throw ConfigError("'" + key + "' must be a number");
        }
    }

private:
    std::map<std::string, std::string> raw_;
};

void fill_search(const Values& values, const std::string& section, SearchConfig& search) {
    search.threshold = ScoreValue(values.get_double(section + ".threshold",
                                                    search.threshold.value()));
    search.max_depth = values.get_int(section + ".max_depth", search.max_depth);
    search.beam_width = values.get_int(section + ".beam_width", search.beam_width);
    search.frontier_pool = values.get_bool(section + ".frontier_pool", search.frontier_pool);
    const std::string strategy = values.get_or(section + ".strategy", "selector");
    if (strategy == "selector") search.strategy = ExpansionStrategy::SelectorGuided;
    else if (strategy == "exhaustive") search.strategy = ExpansionStrategy::Exhaustive;
    else throw ConfigError(section + ".strategy must be selector or exhaustive");
}

ProbsFallback parse_fallback(const std::string& text) {
    ProbsFallback fallback;
    if (text == "judge_score") {
        fallback.mode = ProbsFallback::Mode::JudgeScore;
    } else if (text == "none") {
        fallback.mode = ProbsFallback::Mode::None;
    } else if (text.rfind("constant", 0) == 0) {
        fallback.mode = ProbsFallback::Mode::Constant;
        const auto colon = text.find(':');
        fallback.constant = colon == std::string::npos ? 0.0 : std::stod(text.substr(colon + 1));
    } else {
        throw ConfigError("probs_fallback must be judge_score, constant:<v>, or none");
    }
    return fallback;
}

}  // namespace

std::string Config::bearer_token() const {
    if (api_key_env.empty()) return "";
    const char* value = std::getenv(api_key_env.c_str());
    return value ? value : "";
}

void Config::validate() const {
    if (backend_mode == BackendMode::Remote && chat_endpoint.empty()) {
        throw ConfigError("remote mode requires backend.chat_endpoint");
    }
    if (backend_mode == BackendMode::Offline && !fixtures) {
        throw ConfigError("offline mode requires a fixtures file");
    }
    if (max_backend_retries < 0) throw ConfigError("backend.max_retries must be >= 0");
    orchestrator.reasoning_search.validate();
    orchestrator.generation_search.validate();
}

Config config_from_string(const std::string& text) {
    const Values values(parse_kv(text));
    Config config;

    const std::string mode = values.get_or("backend.mode", "offline");
    if (mode == "offline") config.backend_mode = Config::BackendMode::Offline;
    else if (mode == "remote") config.backend_mode = Config::BackendMode::Remote;
    else throw ConfigError("backend.mode must be offline or remote");

    config.chat_endpoint = values.get_or("backend.chat_endpoint", "");
    config.media_endpoint = values.get_or("backend.media_endpoint", "");
    config.model = values.get_or("backend.model", "default");
    config.api_key_env = values.get_or("backend.api_key_env", "");
    config.has_token_probs = values.get_bool("backend.has_token_probs", true);
    config.probs_fallback = parse_fallback(values.get_or("backend.probs_fallback", "judge_score"));
    config.max_backend_retries = values.get_int("backend.max_retries", 2);

    if (auto v = values.get("backend.fixtures")) config.fixtures = *v;
    if (auto v = values.get("prompts.overrides")) config.prompt_overrides = *v;
    if (auto v = values.get("actions.extensions")) config.action_extensions = *v;

    fill_search(values, "search.reasoning", config.orchestrator.reasoning_search);
    fill_search(values, "search.generation", config.orchestrator.generation_search);
    config.orchestrator.reasoning_search.max_backend_retries = config.max_backend_retries;
    config.orchestrator.generation_search.max_backend_retries = config.max_backend_retries;

    config.orchestrator.cognition_max_rounds =
        values.get_int("cognition.max_rounds", config.orchestrator.cognition_max_rounds);
    config.run_root = values.get_or("run.dir", "runs");
    config.orchestrator.deterministic =
        values.get_bool("run.deterministic_trace", config.orchestrator.deterministic);
    config.orchestrator.seed = static_cast<std::uint64_t>(
        values.get_double("run.seed", static_cast<double>(config.orchestrator.seed)));
    config.orchestrator.concurrent_steps =
        values.get_bool("run.concurrent_steps", config.orchestrator.concurrent_steps);
    config.orchestrator.extend_prompt =
        values.get_bool("run.extend_prompt", config.orchestrator.extend_prompt);
    return config;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_string(text);
}

}  // namespace magus
