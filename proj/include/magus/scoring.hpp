#pragma once

#include <functional>
#include <span>
#include <string>

#include "magus/agent_roles.hpp"
#include "magus/backend.hpp"
#include "magus/core.hpp"

namespace magus {

// Arithmetic mean of per-token probabilities. Elements must lie in (0,1].
// Summation happens in sorted order, so the result is independent of the
// input permutation at the bit level. Throws EmptySequence / OutOfRange.
ScoreValue mean_token_probability(std::span<const double> probs);

// Scores a reasoning answer: mean token probability when the backend
// returned probabilities, otherwise the configured fallback. `cascade`
// realizes the judge-the-answer-text fallback and is only invoked for
// ProbsFallback::Mode::JudgeScore.
ScoreValue score_reasoning_answer(const ChatResponse& answer,
                                  const ProbsFallback& fallback,
                                  const std::function<ScoreValue(const std::string&)>& cascade);

// Builds the judge-then-score cascade over a reasoning answer text. The
// judger sees the question and the answer; the scorer sees only the
// judgement text.
std::function<ScoreValue(const std::string&)> make_reasoning_cascade(
    BackendSession& session, const RoleRegistry& roles, const std::string& question);

struct GenerationVerdict {
    JudgementReport judgement;
    ScoreValue score;
    MediaRef judged_artifact;
    // Set when the scorer produced no parseable number after one retry; the
    // score is pinned to 0.0 so the search keeps going.
    bool score_error = false;
};

// Judger -> Scorer cascade over a generated artifact. The judger receives
// the prompt and the artifact; the scorer receives only the judgement text,
// never the artifact.
GenerationVerdict score_generation(BackendSession& session, const RoleRegistry& roles,
                                   const MediaRef& artifact, const std::string& prompt);

}  // namespace magus
