#include <doctest.h>

#include <fstream>

#include "magus/errors.hpp"
#include "magus/scripted_backend.hpp"
#include "support.hpp"

using namespace magus;
using namespace magus::testing;

namespace {

ChatRequest simple_chat(const std::string& role, const std::string& text,
                        bool want_probs = false) {
    ChatRequest request;
    request.role_name = role;
    request.system_prompt = "system prompt for " + role;
    request.messages = {ChatMessage::user({text})};
    request.want_token_probs = want_probs;
    return request;
}

}  // namespace

TEST_CASE("chat digest covers role, text, and media ids but not the system prompt") {
    ChatRequest a = simple_chat("summarizer", "hello");
    ChatRequest b = a;
    b.system_prompt = "a completely different prompt";
    CHECK(chat_digest(a) == chat_digest(b));

    ChatRequest c = a;
    c.messages = {ChatMessage::user({std::string("hello there")})};
    CHECK(chat_digest(a) != chat_digest(c));

    ChatRequest d = a;
    MediaRef media{"art-1", Modality::Image, "artifacts/art-1.png", {}};
    d.messages = {ChatMessage::user({std::string("hello"), media})};
    CHECK(chat_digest(a) != chat_digest(d));

    ChatRequest e = a;
    e.role_name = "selector_reasoning";
    CHECK(chat_digest(a) != chat_digest(e));
}

TEST_CASE("chat request validation") {
    ChatRequest request;
    request.role_name = "r";
    CHECK_THROWS_AS(validate(request), InvalidRequest);  // no user message

    request.messages = {ChatMessage{ChatMessage::Role::Assistant,
                                    {MediaRef{"a", Modality::Image, "u", {}}}},
                        ChatMessage::user({std::string("q")})};
    CHECK_THROWS_AS(validate(request), InvalidRequest);  // media on assistant turn

    request.messages = {ChatMessage::user({std::string("q")})};
    CHECK_NOTHROW(validate(request));
}

TEST_CASE("media generation params carry the configured model defaults") {
    const auto video = default_media_params(Modality::Video);
    CHECK(video["frames"] == 41);
    CHECK(video["width"] == 832);
    CHECK(video["height"] == 480);
    CHECK(video["steps"] == 50);
    CHECK(video["guidance"] == 5.0);
    CHECK(video["solver"] == "unipc");
    CHECK(video["fps"] == 8);

    // Image generation is single-frame video.
    const auto image = default_media_params(Modality::Image);
    CHECK(image["frames"] == 1);
    CHECK(image["width"] == 832);
    CHECK(image["solver"] == "unipc");

    const auto audio = default_media_params(Modality::Audio);
    CHECK(audio["steps"] == 50);
    CHECK(audio["duration_s"] == 10.0);
    CHECK(audio["sample_rate_hz"] == 16000);
    CHECK(audio["channels"] == "mono");

    CHECK_THROWS_AS(default_media_params(Modality::Text), InvalidParams);
}

TEST_CASE("media param validation rejects unknown keys and bad values") {
    CHECK_THROWS_AS(validate_media_params(Modality::Video, {{"sharpness", 3}}), InvalidParams);
    CHECK_THROWS_AS(validate_media_params(Modality::Video, {{"frames", "many"}}), InvalidParams);
    CHECK_THROWS_AS(validate_media_params(Modality::Video, {{"frames", -2}}), InvalidParams);
    CHECK_NOTHROW(validate_media_params(Modality::Video, {{"frames", 9}}));

    const auto merged = media_params_with_defaults(Modality::Video, {{"frames", 9}});
    CHECK(merged["frames"] == 9);
    CHECK(merged["solver"] == "unipc");
}

TEST_CASE("scripted backend echoes fixtures keyed by role and digest") {
    TempDir dir;
    ArtifactStore store(dir.path);

    ChatRequest request = simple_chat("summarizer", "What is in the image?", true);
    const std::string digest = chat_digest(request);

    nlohmann::json fixtures;
    fixtures["summarizer|" + digest] = chat_entry("A red fox.", {0.9, 0.8});
    ScriptedBackend backend(fixtures, store);

    const ChatResponse response = backend.chat(request);
    CHECK(response.text == "A red fox.");
    REQUIRE(response.token_probs.has_value());
    CHECK(*response.token_probs == std::vector<double>{0.9, 0.8});
    CHECK(response.backend_id == "scripted");
}

TEST_CASE("scripted backend misses fail loudly with role and digest") {
    TempDir dir;
    ArtifactStore store(dir.path);
    ScriptedBackend backend(nlohmann::json::object(), store);

    ChatRequest request = simple_chat("selector_reasoning", "pick one");
    try {
        backend.chat(request);
        FAIL("expected MissingFixture");
    } catch (const MissingFixture& e) {
        CHECK(e.role() == "selector_reasoning");
        CHECK(e.digest() == chat_digest(request));
    }
}

TEST_CASE("scripted backend supports sequence and wildcard keys") {
    TempDir dir;
    ArtifactStore store(dir.path);
    nlohmann::json fixtures;
    fixtures[seq("reflector", 0)] = chat_entry("first");
    fixtures[seq("reflector", 1)] = chat_entry("second");
    fixtures[wildcard("reflector")] = chat_entry("later");
    ScriptedBackend backend(fixtures, store);

    const auto request = simple_chat("reflector", "same text each time");
    CHECK(backend.chat(request).text == "first");
    CHECK(backend.chat(request).text == "second");
    CHECK(backend.chat(request).text == "later");
    CHECK(backend.chat(request).text == "later");
}

TEST_CASE("scripted backend responses are deterministic across loads") {
    TempDir dir;
    ArtifactStore store(dir.path);
    nlohmann::json fixtures;
    fixtures[wildcard("speaker")] = chat_entry("the final answer");
    const auto path = write_json(dir.path, "fixtures.json", fixtures);

    ScriptedBackend first(path, store);
    ScriptedBackend second(path, store);
    const auto request = simple_chat("speaker", "summarize");
    CHECK(first.chat(request).text == second.chat(request).text);
}

TEST_CASE("duplicate fixture keys are rejected at load time") {
    TempDir dir;
    const auto path = write_text(dir.path, "dup.json",
                                 R"({"speaker|*": {"text": "a"}, "speaker|*": {"text": "b"}})");
    ArtifactStore store(dir.path);
    CHECK_THROWS_AS(ScriptedBackend(path, store), FixtureError);
}

TEST_CASE("fixture keys must look like role|digest") {
    TempDir dir;
    ArtifactStore store(dir.path);
    CHECK_THROWS_AS(ScriptedBackend(nlohmann::json{{"speaker", {{"text", "a"}}}}, store),
                    FixtureError);
    // The reserved tasks key is allowed and ignored.
    CHECK_NOTHROW(ScriptedBackend(nlohmann::json{{"tasks", nlohmann::json::array()}}, store));
}

TEST_CASE("stub media artifacts are content-addressed and tagged with params") {
    TempDir dir;
    ArtifactStore store(dir.path);
    ScriptedBackend backend(nlohmann::json::object(), store);

    MediaGenRequest video;
    video.prompt = "a storm over the sea";
    video.modality = Modality::Video;
    const auto video_ref = backend.generate_media(video).artifact;
    CHECK(video_ref.modality == Modality::Video);
    CHECK(video_ref.meta.at("frames") == "41");
    CHECK(video_ref.meta.at("width") == "832");
    CHECK(video_ref.meta.at("height") == "480");
    CHECK(video_ref.meta.at("steps") == "50");
    CHECK(video_ref.meta.at("guidance") == "5.0");
    CHECK(video_ref.meta.at("solver") == "unipc");
    CHECK(video_ref.meta.at("fps") == "8");
    CHECK(store.exists(video_ref));

    MediaGenRequest audio;
    audio.prompt = "rain on a tin roof";
    audio.modality = Modality::Audio;
    const auto audio_ref = backend.generate_media(audio).artifact;
    CHECK(audio_ref.meta.at("steps") == "50");
    CHECK(audio_ref.meta.at("duration_s") == "10.0");
    CHECK(audio_ref.meta.at("sample_rate_hz") == "16000");
    CHECK(audio_ref.meta.at("channels") == "mono");

    MediaGenRequest image;
    image.prompt = "a storm over the sea";
    image.modality = Modality::Image;
    const auto image_ref = backend.generate_media(image).artifact;
    CHECK(image_ref.meta.at("frames") == "1");
    CHECK(image_ref.meta.at("width") == "832");

    // Identical (prompt, params, seed) map to the identical artifact uri.
    const auto video_again = backend.generate_media(video).artifact;
    CHECK(video_again.uri == video_ref.uri);
    CHECK(video_again.id == video_ref.id);

    MediaGenRequest seeded = video;
    seeded.seed = 7;
    CHECK(backend.generate_media(seeded).artifact.uri != video_ref.uri);
}

TEST_CASE("media fixtures override the stub and strict mode fails loudly") {
    TempDir dir;
    ArtifactStore store(dir.path);

    MediaGenRequest request;
    request.prompt = "a blue dog";
    request.modality = Modality::Image;
    MediaGenRequest filled = request;
    filled.params = media_params_with_defaults(request.modality, request.params);

    nlohmann::json fixtures;
    fixtures["media:image|" + media_digest(filled)] = {
        {"artifact_bytes_b64", base64_encode("png-bytes-here")},
        {"meta", {{"width", "64"}}},
    };
    ScriptedBackend backend(fixtures, store);
    const auto ref = backend.generate_media(request).artifact;
    std::ifstream in(store.resolve(ref), std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(bytes == "png-bytes-here");
    CHECK(ref.meta.at("width") == "64");

    ScriptedBackend strict(nlohmann::json::object(), store);
    strict.set_strict_media(true);
    CHECK_THROWS_AS(strict.generate_media(request), MissingFixture);
}

TEST_CASE("base64 round-trips") {
    for (std::string sample : {"", "a", "ab", "abc", "abcd", "\xff\x10 binary"}) {
        sample.push_back('\0');  // embedded NUL survives the round trip
        CHECK(base64_decode(base64_encode(sample)) == sample);
    }
    CHECK_THROWS_AS(base64_decode("not base64!!"), FixtureError);
}

namespace {

// Fails transiently n times, then succeeds.
class FlakyBackend : public Backend {
public:
    FlakyBackend(int failures, bool transient) : failures_(failures), transient_(transient) {}
    std::string id() const override { return "flaky"; }
    bool supports_token_probs() const override { return probs_supported_; }
    ChatResponse chat(const ChatRequest&) override {
        if (failures_-- > 0) throw TransportError("boom", transient_);
        return {"ok", std::nullopt, id()};
    }
    MediaGenResponse generate_media(const MediaGenRequest&) override {
        throw TransportError("no media", false);
    }
    bool probs_supported_ = true;

private:
    int failures_;
    bool transient_;
};

}  // namespace

TEST_CASE("session retries transient failures and traces every attempt") {
    FlakyBackend backend(1, /*transient=*/true);
    TraceLog trace(true);
    BackendSession session(backend, trace, /*max_retries=*/2);
    const auto response = session.chat(simple_chat("speaker", "hello"));
    CHECK(response.text == "ok");

    const auto events = trace.events();
    REQUIRE(events.size() == 2);  // failed attempt + success
    CHECK(events[0].payload["ok"] == false);
    CHECK(events[0].payload["exhausted"] == false);
    CHECK(events[0].payload["attempt"] == 1);
    CHECK(events[1].payload["ok"] == true);
    CHECK(events[1].payload["attempt"] == 2);
}

TEST_CASE("session gives up after max retries and on non-transient errors") {
    FlakyBackend backend(5, /*transient=*/true);
    TraceLog trace(true);
    BackendSession session(backend, trace, /*max_retries=*/1);
    CHECK_THROWS_AS(session.chat(simple_chat("speaker", "hello")), TransportError);
    CHECK(trace.events().size() == 2);  // two attempts, both traced
    CHECK(trace.events().back().payload["exhausted"] == true);

    FlakyBackend fatal(5, /*transient=*/false);
    TraceLog trace2(true);
    BackendSession session2(fatal, trace2, /*max_retries=*/3);
    CHECK_THROWS_AS(session2.chat(simple_chat("speaker", "hello")), TransportError);
    CHECK(trace2.events().size() == 1);  // no retry for non-transient
}

TEST_CASE("token probabilities requested from a backend that lacks them") {
    FlakyBackend backend(0, true);
    backend.probs_supported_ = false;
    TraceLog trace(true);

    // No fallback configured: the request itself is an error.
    BackendSession strict(backend, trace, 0, ProbsFallback{ProbsFallback::Mode::None, 0.0});
    CHECK_THROWS_AS(strict.chat(simple_chat("summarizer", "q", true)), UnsupportedCapability);

    // With a fallback the response simply carries no probabilities.
    BackendSession lenient(backend, trace, 0, ProbsFallback{});
    const auto response = lenient.chat(simple_chat("summarizer", "q", true));
    CHECK_FALSE(response.token_probs.has_value());
}
