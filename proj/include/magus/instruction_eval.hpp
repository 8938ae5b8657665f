#pragma once

#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "magus/core.hpp"

namespace magus {

struct InstructionSample {
    std::string instruction;
    std::set<Modality> targets;  // non-empty, deduplicated
};

// JSONL, one sample per line: {"instruction": str, "targets": ["image", ...]}.
// Unknown modality strings and empty target lists are rejected with the line
// number in the error.
std::vector<InstructionSample> load_dataset(const std::filesystem::path& path);

struct SampleResult {
    bool strict_hit = false;    // predicted == targets
    bool flexible_hit = false;  // predicted is a superset of targets
    std::set<Modality> predicted;
    std::string error;  // predictor failure; counts as both-miss
};

struct EvalReport {
    int n = 0;
    double strict_accuracy = 0.0;    // percent, one decimal
    double flexible_accuracy = 0.0;  // percent, one decimal
    std::vector<SampleResult> per_sample;
};

using ModalityPredictor = std::function<std::set<Modality>(const std::string& instruction)>;

EvalReport evaluate(const std::vector<InstructionSample>& samples,
                    const ModalityPredictor& predictor);

std::string render_report_table(const EvalReport& report);
nlohmann::json report_to_json(const EvalReport& report);

// Predictor backed by a precomputed predictions file: JSONL with
// {"instruction": str, "predicted": [...]}; lookup is by instruction text.
ModalityPredictor file_predictor(const std::filesystem::path& predictions);

}  // namespace magus
