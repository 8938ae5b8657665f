#include "magus/scoring.hpp"

#include <algorithm>
#include <vector>

#include "magus/errors.hpp"

namespace magus {

ScoreValue mean_token_probability(std::span<const double> probs) {
    if (probs.empty()) throw EmptySequence();
    std::vector<double> sorted(probs.begin(), probs.end());
    for (double p : sorted) {
        if (!(p > 0.0) || p > 1.0) throw OutOfRange(p);
    }
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (double p : sorted) sum += p;
    return ScoreValue(sum / static_cast<double>(sorted.size()));
}

ScoreValue score_reasoning_answer(const ChatResponse& answer,
                                  const ProbsFallback& fallback,
                                  const std::function<ScoreValue(const std::string&)>& cascade) {
    if (answer.token_probs) {
        return mean_token_probability(*answer.token_probs);
    }
    switch (fallback.mode) {
        case ProbsFallback::Mode::JudgeScore:
            if (!cascade) throw ConfigError("judge_score fallback configured but no cascade wired");
            return cascade(answer.text);
        case ProbsFallback::Mode::Constant:
            return ScoreValue(fallback.constant);
        case ProbsFallback::Mode::None:
            break;
    }
    throw UnsupportedCapability("answer carries no token probabilities and no fallback is configured");
}

namespace {

ScoreValue run_scorer(BackendSession& session, const AgentRole& scorer,
                      const std::string& report_text, bool* error_flag) {
    ChatRequest request;
    request.role_name = scorer.name;
    request.system_prompt = scorer.system_prompt;
    request.messages = {ChatMessage::user({report_text})};

    for (int attempt = 0; attempt < 2; ++attempt) {
        const ChatResponse response = session.chat(request);
        try {
            return parse_score(response.text);
        } catch (const NoNumberFound&) {
            // One retry with an explicit format reminder appended.
            request.messages = {
                ChatMessage::user({report_text + "\n\nOutput only the score."})};
        }
    }
    if (error_flag) *error_flag = true;
    return ScoreValue(0.0);
}

}  // namespace

std::function<ScoreValue(const std::string&)> make_reasoning_cascade(
    BackendSession& session, const RoleRegistry& roles, const std::string& question) {
    return [&session, &roles, question](const std::string& answer_text) {
        const auto& judger = roles.role(roles::judger(Modality::Text));
        ChatRequest request;
        request.role_name = judger.name;
        request.system_prompt = judger.system_prompt;
        request.messages = {
            ChatMessage::user({"Question: " + question + "\nAnswer: " + answer_text})};
        const ChatResponse judgement = session.chat(request);
        return run_scorer(session, roles.role(roles::scorer(Modality::Text)), judgement.text,
                          nullptr);
    };
}

GenerationVerdict score_generation(BackendSession& session, const RoleRegistry& roles,
                                   const MediaRef& artifact, const std::string& prompt) {
    const auto& judger = roles.role(roles::judger(artifact.modality));
    ChatRequest judge_request;
    judge_request.role_name = judger.name;
    judge_request.system_prompt = judger.system_prompt;
    judge_request.messages = {ChatMessage::user({prompt, artifact})};
    const ChatResponse judged = session.chat(judge_request);

    GenerationVerdict verdict;
    verdict.judged_artifact = artifact;
    verdict.judgement = parse_judgement(judged.text, artifact.modality);
    verdict.score = run_scorer(session, roles.role(roles::scorer(artifact.modality)),
                               judged.text, &verdict.score_error);
    return verdict;
}

}  // namespace magus
