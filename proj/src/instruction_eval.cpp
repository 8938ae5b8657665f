#include "magus/instruction_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "magus/errors.hpp"

namespace magus {

namespace {

std::set<Modality> parse_modality_set(const nlohmann::json& array, const char* key,
                                      std::size_t line_no) {
    if (!array.is_array()) {
        throw Error("line " + std::to_string(line_no) + ": '" + key + "' must be a list");
    }
    std::set<Modality> out;
    for (const auto& item : array) {
        if (!item.is_string()) {
            throw Error("line " + std::to_string(line_no) + ": modality names must be strings");
        }
        try {
            out.insert(modality_from_string(item.get<std::string>()));
        } catch (const Error&) {
            throw Error("line " + std::to_string(line_no) + ": unknown modality '" +
                        item.get<std::string>() + "'");
        }
    }
    return out;
}

double percent_one_decimal(int hits, int n) {
    return std::round(1000.0 * hits / n) / 10.0;
}

}  // namespace

std::vector<InstructionSample> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset " + path.string());
    std::vector<InstructionSample> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error("line " + std::to_string(line_no) + ": " + e.what());
        }
        InstructionSample sample;
        sample.instruction = j.value("instruction", std::string{});
        if (sample.instruction.empty()) {
            throw Error("line " + std::to_string(line_no) + ": missing instruction");
        }
        sample.targets = parse_modality_set(j.contains("targets") ? j["targets"] : nlohmann::json(),
                                            "targets", line_no);
        if (sample.targets.empty()) {
            throw Error("line " + std::to_string(line_no) + ": target set is empty");
        }
        samples.push_back(std::move(sample));
    }
    return samples;
}

EvalReport evaluate(const std::vector<InstructionSample>& samples,
                    const ModalityPredictor& predictor) {
    if (samples.empty()) throw Error("evaluate requires at least one sample");
    EvalReport report;
    report.n = static_cast<int>(samples.size());
    int strict_hits = 0;
    int flexible_hits = 0;
    for (const auto& sample : samples) {
        SampleResult result;
        try {
            result.predicted = predictor(sample.instruction);
            result.strict_hit = result.predicted == sample.targets;
            result.flexible_hit = std::includes(result.predicted.begin(), result.predicted.end(),
                                                sample.targets.begin(), sample.targets.end());
        } catch (const std::exception& e) {
            result.error = e.what();  // both-miss
        }
        strict_hits += result.strict_hit ? 1 : 0;
        flexible_hits += result.flexible_hit ? 1 : 0;
        report.per_sample.push_back(std::move(result));
    }
    report.strict_accuracy = percent_one_decimal(strict_hits, report.n);
    report.flexible_accuracy = percent_one_decimal(flexible_hits, report.n);
    return report;
}

namespace {

std::string modality_set_to_string(const std::set<Modality>& set) {
    std::string out;
    for (const auto m : set) {
        if (!out.empty()) out += ",";
        out += to_string(m);
    }
    return out.empty() ? "-" : out;
}

}  // namespace

std::string render_report_table(const EvalReport& report) {
    std::ostringstream os;
    os << "samples: " << report.n << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "strict match accuracy:      %5.1f%%\n",
                  report.strict_accuracy);
    os << buf;
    std::snprintf(buf, sizeof(buf), "flexible coverage accuracy: %5.1f%%\n",
                  report.flexible_accuracy);
    os << buf;
    os << "idx  strict  flexible  predicted\n";
    for (std::size_t i = 0; i < report.per_sample.size(); ++i) {
        const auto& r = report.per_sample[i];
        std::snprintf(buf, sizeof(buf), "%-4zu %-7s %-9s ", i, r.strict_hit ? "hit" : "miss",
                      r.flexible_hit ? "hit" : "miss");
        os << buf << (r.error.empty() ? modality_set_to_string(r.predicted) : "error: " + r.error)
           << "\n";
    }
    return os.str();
}

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json per_sample = nlohmann::json::array();
    for (const auto& r : report.per_sample) {
        nlohmann::json predicted = nlohmann::json::array();
        for (const auto m : r.predicted) predicted.push_back(to_string(m));
        nlohmann::json j = {{"strict_hit", r.strict_hit},
                            {"flexible_hit", r.flexible_hit},
                            {"predicted", predicted}};
        if (!r.error.empty()) j["error"] = r.error;
        per_sample.push_back(std::move(j));
    }
    return {{"n", report.n},
            {"strict_accuracy", report.strict_accuracy},
            {"flexible_accuracy", report.flexible_accuracy},
            {"per_sample", per_sample}};
}

ModalityPredictor file_predictor(const std::filesystem::path& predictions) {
    std::ifstream in(predictions);
    if (!in) throw Error("cannot open predictions " + predictions.string());
    auto table = std::make_shared<std::map<std::string, std::set<Modality>>>();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error("line " + std::to_string(line_no) + ": " + e.what());
        }
        (*table)[j.value("instruction", std::string{})] = parse_modality_set(
            j.contains("predicted") ? j["predicted"] : nlohmann::json(), "predicted", line_no);
    }
    return [table](const std::string& instruction) {
        auto it = table->find(instruction);
        if (it == table->end()) throw Error("no prediction for instruction: " + instruction);
        return it->second;
    };
}

}  // namespace magus
