#include "magus/trace.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "magus/errors.hpp"

namespace magus {

std::string to_string(TraceKind kind) {
    switch (kind) {
        case TraceKind::RunStarted: return "RunStarted";
        case TraceKind::NodeCreated: return "NodeCreated";
        case TraceKind::ActionSelected: return "ActionSelected";
        case TraceKind::BackendCall: return "BackendCall";
        case TraceKind::NodeScored: return "NodeScored";
        case TraceKind::BeamUpdated: return "BeamUpdated";
        case TraceKind::Terminated: return "Terminated";
    }
    return "RunStarted";
}

TraceKind trace_kind_from_string(const std::string& s) {
    if (s == "RunStarted") return TraceKind::RunStarted;
    if (s == "NodeCreated") return TraceKind::NodeCreated;
    if (s == "ActionSelected") return TraceKind::ActionSelected;
    if (s == "BackendCall") return TraceKind::BackendCall;
    if (s == "NodeScored") return TraceKind::NodeScored;
    if (s == "BeamUpdated") return TraceKind::BeamUpdated;
    if (s == "Terminated") return TraceKind::Terminated;
    throw Error("unknown trace kind '" + s + "'");
}

TraceLog::TraceLog(bool deterministic) : deterministic_(deterministic) {
    header_ = {{"schema", "magus.trace.v1"}};
}

void TraceLog::set_header(nlohmann::json header) {
    std::lock_guard lock(mu_);
    header["schema"] = "magus.trace.v1";
    header_ = std::move(header);
}

std::uint64_t TraceLog::append(TraceKind kind, nlohmann::json payload) {
    std::lock_guard lock(mu_);
    TraceEvent event;
    event.seq = next_seq_++;
    event.kind = kind;
    event.payload = std::move(payload);
    if (!deterministic_) {
        event.ts_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::system_clock::now().time_since_epoch())
                          .count();
    }
    events_.push_back(event);
    return event.seq;
}

std::uint64_t TraceLog::next_seq() const {
    std::lock_guard lock(mu_);
    return next_seq_;
}

std::vector<TraceEvent> TraceLog::events() const {
    std::lock_guard lock(mu_);
    return events_;
}

std::vector<TraceEvent> TraceLog::events_from(std::uint64_t first_seq) const {
    std::lock_guard lock(mu_);
    std::vector<TraceEvent> out;
    for (const auto& e : events_) {
        if (e.seq >= first_seq) out.push_back(e);
    }
    return out;
}

nlohmann::json to_json(const TraceEvent& event, bool deterministic) {
    nlohmann::json j = {
        {"seq", event.seq},
        {"kind", to_string(event.kind)},
        {"payload", event.payload},
    };
    if (!deterministic) j["ts_ms"] = event.ts_ms;
    return j;
}

void TraceLog::write_jsonl(const std::filesystem::path& path) const {
    std::lock_guard lock(mu_);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open trace file " + path.string());
    out << header_.dump() << "\n";
    for (const auto& e : events_) out << to_json(e, deterministic_).dump() << "\n";
}

ParsedTrace read_trace_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open trace file " + path.string());
    ParsedTrace parsed;
    std::string line;
    bool first = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error("trace parse error at line " + std::to_string(line_no) + ": " + e.what());
        }
        if (first) {
            parsed.header = j;
            first = false;
            continue;
        }
        TraceEvent event;
        event.seq = j.at("seq").get<std::uint64_t>();
        event.kind = trace_kind_from_string(j.at("kind").get<std::string>());
        event.payload = j.at("payload");
        event.ts_ms = j.value("ts_ms", std::int64_t{0});
        parsed.events.push_back(std::move(event));
    }
    return parsed;
}

std::string render_trace_line(const TraceEvent& event) {
    std::ostringstream os;
    os << event.seq << "  " << to_string(event.kind);
    const auto& p = event.payload;
    auto field = [&](const char* key) {
        if (p.contains(key)) {
            os << "  " << key << "=";
            if (p[key].is_string()) os << p[key].get<std::string>();
            else os << p[key].dump();
        }
    };
    switch (event.kind) {
        case TraceKind::RunStarted:
            field("run_id");
            field("seed");
            break;
        case TraceKind::NodeCreated:
            field("node_id");
            field("actions");
            field("depth");
            break;
        case TraceKind::ActionSelected:
            field("node_id");
            field("action");
            field("strategy");
            break;
        case TraceKind::BackendCall:
            field("call");
            field("role");
            field("attempt");
            field("ok");
            break;
        case TraceKind::NodeScored:
            field("node_id");
            field("score");
            break;
        case TraceKind::BeamUpdated:
            field("depth");
            field("node_ids");
            break;
        case TraceKind::Terminated:
            field("reason");
            field("best_node");
            field("explored");
            break;
    }
    return os.str();
}

}  // namespace magus
