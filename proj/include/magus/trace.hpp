#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace magus {

enum class TraceKind {
    RunStarted,
    NodeCreated,
    ActionSelected,
    BackendCall,
    NodeScored,
    BeamUpdated,
    Terminated,
};

std::string to_string(TraceKind kind);
TraceKind trace_kind_from_string(const std::string& s);

struct TraceEvent {
    std::uint64_t seq = 0;
    TraceKind kind = TraceKind::RunStarted;
    nlohmann::json payload;
    // Wall clock, milliseconds since epoch. Zero (and omitted from the JSONL
    // form) in deterministic mode so traces byte-compare across runs.
    std::int64_t ts_ms = 0;
};

// Append-only record of every engine decision. seq is strictly increasing
// and gap-free within a run; appends are serialized so concurrent steps can
// share one log.
class TraceLog {
public:
    explicit TraceLog(bool deterministic = false);

    bool deterministic() const { return deterministic_; }

    void set_header(nlohmann::json header);
    const nlohmann::json& header() const { return header_; }

    std::uint64_t append(TraceKind kind, nlohmann::json payload);

    std::uint64_t next_seq() const;
    std::vector<TraceEvent> events() const;
    std::vector<TraceEvent> events_from(std::uint64_t first_seq) const;

    void write_jsonl(const std::filesystem::path& path) const;

private:
    mutable std::mutex mu_;
    bool deterministic_;
    nlohmann::json header_;
    std::vector<TraceEvent> events_;
    std::uint64_t next_seq_ = 0;
};

nlohmann::json to_json(const TraceEvent& event, bool deterministic);

// Reads a trace file back (header line first, then one event per line).
// Used by `trace show` and the replay checks.
struct ParsedTrace {
    nlohmann::json header;
    std::vector<TraceEvent> events;
};
ParsedTrace read_trace_jsonl(const std::filesystem::path& path);

// One human-readable line per event.
std::string render_trace_line(const TraceEvent& event);

}  // namespace magus
