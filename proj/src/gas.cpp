#include "magus/gas.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "magus/errors.hpp"

namespace magus {

std::string to_string(TerminationReason reason) {
    switch (reason) {
        case TerminationReason::ThresholdMet: return "threshold_met";
        case TerminationReason::DepthExhausted: return "depth_exhausted";
        case TerminationReason::NoValidActions: return "no_valid_actions";
    }
    return "depth_exhausted";
}

namespace {

nlohmann::json node_created_payload(const SearchNode& node) {
    return {
        {"node_id", node.id},
        {"parent", node.parent ? nlohmann::json(*node.parent) : nlohmann::json()},
        {"actions", node.actions},
        {"action_set_key", action_set_key(node.actions)},
        {"depth", node.depth()},
    };
}

nlohmann::json node_scored_payload(const SearchNode& node) {
    return {
        {"node_id", node.id},
        {"score", node.score.value()},
        {"clamped", node.score.clamped()},
    };
}

}  // namespace

SearchOutcome run_search(const SearchNode& root, const SearchConfig& config,
                         const ActionCatalog& catalog, const ExpansionHooks& hooks,
                         TraceLog& trace) {
    config.validate();
    if (catalog.entries.empty()) throw UnsupportedKind("empty action catalog");
    if (!hooks.apply) throw ConfigError("search needs an apply hook");
    if (config.strategy == ExpansionStrategy::SelectorGuided && !hooks.select) {
        throw ConfigError("selector-guided search needs a select hook");
    }

    const std::uint64_t trace_start = trace.next_seq();
    const double threshold = config.threshold.value();

    trace.append(TraceKind::NodeCreated, node_created_payload(root));
    trace.append(TraceKind::NodeScored, node_scored_payload(root));

    std::set<std::string> visited{action_set_key(root.actions)};
    std::map<std::string, std::uint64_t> creation_order;
    std::uint64_t next_creation = 0;
    creation_order[root.id] = next_creation++;

    SearchNode best = root;
    int explored = 1;

    auto finish = [&](TerminationReason reason) {
        trace.append(TraceKind::Terminated, {{"reason", to_string(reason)},
                                             {"best_node", best.id},
                                             {"best_score", best.score.value()},
                                             {"explored", explored}});
        SearchOutcome outcome;
        outcome.best = best;
        outcome.terminated_by = reason;
        outcome.explored_count = explored;
        outcome.trace = trace.events_from(trace_start);
        return outcome;
    };

    if (root.score.value() >= threshold) return finish(TerminationReason::ThresholdMet);

    auto last_action_index = [&](const SearchNode& node) {
        return node.actions.empty() ? -1 : catalog.index_of(node.actions.back());
    };

    std::vector<SearchNode> frontier{root};

    for (int depth = 1; depth <= config.max_depth; ++depth) {
        std::vector<SearchNode> new_nodes;
        int attempted = 0;
        int failed = 0;
        std::string last_error;

        for (const auto& node : frontier) {
            auto unused = catalog.unused(node.actions);
            if (unused.empty()) continue;

            std::vector<std::pair<ActionSpec, bool>> chosen;  // action, via fallback
            if (config.strategy == ExpansionStrategy::Exhaustive) {
                for (auto& action : unused) chosen.emplace_back(std::move(action), false);
            } else {
                SelectedAction selected = hooks.select(node, unused);
                chosen.emplace_back(std::move(selected.action), selected.fallback_used);
            }

            for (const auto& [action, fallback_used] : chosen) {
                auto child_actions = node.actions;
                child_actions.push_back(action.name);
                const std::string key = action_set_key(child_actions);
                const bool fresh = visited.count(key) == 0;
                trace.append(TraceKind::ActionSelected,
                             {{"node_id", node.id},
                              {"action", action.name},
                              {"strategy",
                               config.strategy == ExpansionStrategy::Exhaustive ? "exhaustive"
                                                                                : "selector"},
                              {"fallback", fallback_used},
                              {"deduplicated", !fresh}});
                if (!fresh) continue;  // action combo already visited

                ++attempted;
                SearchNode child;
                try {
                    child = hooks.apply(node, action);
                } catch (const Error& e) {
                    // Failure details live in the BackendCall events; skip
                    // this expansion and keep searching.
                    ++failed;
                    last_error = e.what();
                    continue;
                }
                child.id = root.id + "." + std::to_string(next_creation);
                child.actions = child_actions;
                child.parent = node.id;

                visited.insert(key);
                creation_order[child.id] = next_creation++;
                ++explored;
                trace.append(TraceKind::NodeCreated, node_created_payload(child));
                trace.append(TraceKind::NodeScored, node_scored_payload(child));

                if (child.score.value() > best.score.value()) best = child;
                if (child.score.value() >= threshold) {
                    best = child;
                    return finish(TerminationReason::ThresholdMet);
                }
                new_nodes.push_back(std::move(child));
            }
        }

        if (new_nodes.empty()) {
            if (attempted > 0 && failed == attempted) {
                throw SearchError("every expansion at depth " + std::to_string(depth) +
                                  " failed; last error: " + last_error);
            }
            return finish(TerminationReason::NoValidActions);
        }

        std::vector<SearchNode> pool;
        if (config.frontier_pool) pool = frontier;
        pool.insert(pool.end(), new_nodes.begin(), new_nodes.end());
        std::sort(pool.begin(), pool.end(), [&](const SearchNode& a, const SearchNode& b) {
            if (a.score.value() != b.score.value()) return a.score.value() > b.score.value();
            const int ia = last_action_index(a);
            const int ib = last_action_index(b);
            if (ia != ib) return ia < ib;
            return creation_order.at(a.id) < creation_order.at(b.id);
        });
        if (pool.size() > static_cast<std::size_t>(config.beam_width)) {
            pool.resize(static_cast<std::size_t>(config.beam_width));
        }
        frontier = std::move(pool);

        nlohmann::json beam_ids = nlohmann::json::array();
        nlohmann::json beam_scores = nlohmann::json::array();
        for (const auto& node : frontier) {
            beam_ids.push_back(node.id);
            beam_scores.push_back(node.score.value());
        }
        trace.append(TraceKind::BeamUpdated,
                     {{"depth", depth}, {"node_ids", beam_ids}, {"scores", beam_scores}});
    }

    return finish(TerminationReason::DepthExhausted);
}

// ---------------------------------------------------------------------------
// Pipeline wiring
// ---------------------------------------------------------------------------

GasPipeline::GasPipeline(BackendSession& session, const RoleRegistry& roles)
    : session_(session), roles_(roles) {}

void GasPipeline::set_seed_source(std::function<std::uint64_t()> next_seed) {
    next_seed_ = std::move(next_seed);
}

std::optional<std::uint64_t> GasPipeline::draw_seed() const {
    if (!next_seed_) return std::nullopt;
    return next_seed_();
}

namespace {

std::string auxiliary_block(const ReasoningNodeContent& content) {
    std::ostringstream os;
    for (const auto& item : content.auxiliary_items) {
        os << "- [" << item.source_action << "] ";
        if (item.is_text()) {
            os << item.text();
        } else {
            os << "auxiliary " << to_string(item.media().modality) << " artifact "
               << item.media().id;
        }
        os << "\n";
    }
    return os.str();
}

ChatRequest role_request(const AgentRole& role) {
    ChatRequest request;
    request.role_name = role.name;
    request.system_prompt = role.system_prompt;
    return request;
}

}  // namespace

SearchNode GasPipeline::apply_reasoning_action(const SearchNode& node,
                                               const ActionSpec& action) const {
    ReasoningNodeContent content = node.reasoning();

    if (action.behavior == ActionBehavior::ExpertAdvice) {
        ChatRequest request = role_request(roles_.role(action.agent_role));
        std::vector<MessagePart> parts;
        for (const auto& media : content.input_media) parts.emplace_back(media);
        parts.emplace_back("Question: " + content.question +
                           "\nCurrent answer: " + content.node_answer);
        request.messages = {ChatMessage::user(std::move(parts))};
        const ChatResponse advice = session_.chat(request);
        content.auxiliary_items.push_back({action.name, advice.text});
    } else if (action.behavior == ActionBehavior::GenerativeAugment) {
        const Modality target = action.task_kind.modality;
        MediaGenRequest gen;
        gen.modality = target;
        gen.seed = draw_seed();
        if (target == Modality::Image) {
            // Image augmentation conditions the generator on the original
            // image directly; no prompt-crafting chat happens.
            gen.prompt = content.question;
            for (const auto& media : content.input_media) {
                if (media.modality == Modality::Image) {
                    gen.conditioning = media;
                    break;
                }
            }
        } else {
            ChatRequest request = role_request(roles_.role(action.agent_role));
            std::vector<MessagePart> parts;
            for (const auto& media : content.input_media) parts.emplace_back(media);
            parts.emplace_back("Question: " + content.question);
            request.messages = {ChatMessage::user(std::move(parts))};
            const ChatResponse crafted = session_.chat(request);
            gen.prompt = crafted.text;
        }
        const MediaGenResponse generated = session_.generate_media(gen, action.name);
        content.auxiliary_items.push_back({action.name, generated.artifact});
    } else {
        throw Error("action '" + action.name + "' is not a reasoning action");
    }

    // Summarizer re-answers over the enriched content; its token-level
    // confidence becomes the node score.
    const auto& summarizer = roles_.role(roles::kSummarizer);
    ChatRequest request = role_request(summarizer);
    request.want_token_probs = true;
    std::vector<MessagePart> parts;
    for (const auto& media : content.input_media) parts.emplace_back(media);
    parts.emplace_back("Question (Q): " + content.question + "\n\nExpert outputs (H):\n" +
                       auxiliary_block(content));
    for (const auto& item : content.auxiliary_items) {
        if (!item.is_text()) parts.emplace_back(item.media());
    }
    request.messages = {ChatMessage::user(std::move(parts))};
    const ChatResponse summarized = session_.chat(request);

    content.node_answer = summarized.text;
    SearchNode child;
    child.score = score_reasoning_answer(
        summarized, session_.fallback(),
        make_reasoning_cascade(session_, roles_, content.question));
    child.content = std::move(content);
    return child;
}

SearchNode GasPipeline::apply_generation_action(const SearchNode& node,
                                                const ActionSpec& action) const {
    if (action.behavior != ActionBehavior::PromptRefine) {
        throw Error("action '" + action.name + "' is not a generation action");
    }
    GenerationNodeContent content = node.generation();

    ChatRequest request = role_request(roles_.role(action.agent_role));
    request.messages = {ChatMessage::user(
        {"Original prompt: " + content.original_prompt +
         "\nCurrent prompt: " + content.node_prompt +
         "\nJudgement of the latest output:\n" + content.judgement})};
    const ChatResponse refined = session_.chat(request);
    const std::string refined_prompt =
        refined.text.empty() ? content.node_prompt : refined.text;

    MediaGenRequest gen;
    gen.prompt = refined_prompt;
    gen.modality = action.task_kind.modality;
    gen.seed = draw_seed();
    const MediaGenResponse generated = session_.generate_media(gen, action.name);

    const GenerationVerdict verdict =
        score_generation(session_, roles_, generated.artifact, content.original_prompt);

    content.node_prompt = refined_prompt;
    content.node_answer = generated.artifact;
    content.judgement = verdict.judgement.raw;

    SearchNode child;
    child.score = verdict.score;
    child.content = std::move(content);
    return child;
}

SelectedAction GasPipeline::select_action(const SearchNode& node,
                                          const std::vector<ActionSpec>& unused,
                                          const TaskKind& kind) const {
    if (unused.empty()) throw Error("select_action requires at least one unused action");

    std::string candidates_block;
    std::vector<std::string> candidate_names;
    for (const auto& spec : unused) {
        if (!candidates_block.empty()) candidates_block += "\n";
        candidates_block += spec.name + ": " + spec.description;
        candidate_names.push_back(spec.name);
    }

    const auto& selector = kind.is_reasoning() ? roles_.role(roles::kSelectorReasoning)
                                               : roles_.role(roles::kSelectorGeneration);
    ChatRequest request = role_request(selector);
    std::vector<MessagePart> parts;
    std::string body;
    if (kind.is_reasoning()) {
        const auto& content = node.reasoning();
        for (const auto& media : content.input_media) parts.emplace_back(media);
        body = "Question: " + content.question + "\nCurrent answer: " + content.node_answer;
        const std::string aux = auxiliary_block(content);
        if (!aux.empty()) body += "\nCollected expert outputs:\n" + aux;
    } else {
        const auto& content = node.generation();
        body = "Original prompt: " + content.original_prompt +
               "\nCurrent prompt: " + content.node_prompt +
               "\nJudgement of the generated data:\n" + content.judgement;
    }
    body += "\n\nAvailable experts:\n" + candidates_block;
    parts.emplace_back(std::move(body));
    request.messages = {ChatMessage::user(std::move(parts))};

    for (int attempt = 0; attempt < 2; ++attempt) {
        const ChatResponse response = session_.chat(request);
        try {
            const SelectorChoice choice = parse_selector(response.text, candidate_names);
            for (const auto& spec : unused) {
                if (spec.name == choice.expert) return {spec, false};
            }
        } catch (const ParseError&) {
            // Ask once more with an explicit format reminder.
            ChatRequest retry = request;
            retry.messages.push_back(ChatMessage::user(
                {"Your previous reply was invalid. The output format must be in JSON only: "
                 "{\"selected_experts\": [\"expert_name\"]}. Choose exactly one expert from "
                 "the list."}));
            request = std::move(retry);
        }
    }
    // Deterministic fallback: first unused action in catalog order.
    return {unused.front(), true};
}

ExpansionHooks GasPipeline::hooks_for(const TaskKind& kind) const {
    ExpansionHooks hooks;
    if (kind.is_reasoning()) {
        hooks.apply = [this](const SearchNode& node, const ActionSpec& action) {
            return apply_reasoning_action(node, action);
        };
    } else {
        hooks.apply = [this](const SearchNode& node, const ActionSpec& action) {
            return apply_generation_action(node, action);
        };
    }
    hooks.select = [this, kind](const SearchNode& node, const std::vector<ActionSpec>& unused) {
        return select_action(node, unused, kind);
    };
    return hooks;
}

}  // namespace magus
