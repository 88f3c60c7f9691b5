#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "emocue/embed.hpp"
#include "emocue/kernels.hpp"
#include "json.hpp"

using namespace emocue;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
    auto dir = fs::temp_directory_path() /
               ("emocue_embed_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("deterministic embedder returns unit vectors") {
    DeterministicEmbedder emb(64);
    auto v = emb.embed("soft tone");
    CHECK(v.dim() == 64);
    CHECK(std::sqrt(kernels::sum_squares(v.values)) ==
          doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("deterministic embedder: equal texts map to identical vectors") {
    DeterministicEmbedder emb(64);
    CHECK(emb.embed("soft tone") == emb.embed("soft tone"));
    // normalization-equal texts too
    CHECK(emb.embed("  Soft   TONE ") == emb.embed("soft tone"));
}

TEST_CASE("deterministic embedder: distinct texts are nearly orthogonal") {
    DeterministicEmbedder emb(256);
    std::vector<std::string> texts = {
        "slight smile", "frowning brows", "soft tone", "raised voice",
        "appears sad",  "tight jaw",      "long pauses"};
    for (size_t i = 0; i < texts.size(); ++i)
        for (size_t j = i + 1; j < texts.size(); ++j)
            CHECK(std::abs(cosine(emb.embed(texts[i]), emb.embed(texts[j]))) <=
                  0.3);
}

TEST_CASE("embed_cue_set matches individual embed calls") {
    DeterministicEmbedder emb(64);
    auto cues = CueSet::make({"slight smile", "tight jaw"}, {"soft tone"}, {});
    auto result = embed_cue_set(cues, emb);
    REQUIRE(result.size() == 3);
    for (const auto& [text, vec] : result) CHECK(vec == emb.embed(text));
    CHECK(embed_cue_set(CueSet{}, emb).empty());
}

TEST_CASE("embedding cache round trip and persistence") {
    auto path = temp_file("emb.cache");
    std::string sha = sha256_hex("soft tone");
    {
        EmbeddingCache cache(path);
        CHECK_FALSE(cache.lookup("m1", sha).has_value());
        cache.store("m1", sha, {0.6f, 0.8f});
        auto hit = cache.lookup("m1", sha);
        REQUIRE(hit.has_value());
        CHECK((*hit)[0] == 0.6f);
    }
    // reopened cache rebuilds the index from the binary file
    EmbeddingCache cache(path);
    CHECK(cache.size() == 1);
    auto hit = cache.lookup("m1", sha);
    REQUIRE(hit.has_value());
    CHECK((*hit)[1] == 0.8f);
    CHECK_FALSE(cache.lookup("m2", sha).has_value());
    fs::remove_all(path.parent_path());
}

TEST_CASE("remote embedder caches and returns identical vectors") {
    auto path = temp_file("emb.cache");
    auto cache = std::make_shared<EmbeddingCache>(path);
    int calls = 0;
    EmbedTransport stub = [&](const std::string& body) {
        ++calls;
        auto req = nlohmann::json::parse(body);
        CHECK(req.at("model") == "stub-model");
        return nlohmann::json{
            {"data", {{{"embedding", {3.0, 4.0}}}}}}.dump();
    };
    EmbedderSpec spec{EmbedderSpec::Kind::remote, "stub-model", 2};
    RemoteEmbedder emb(spec, stub, cache);

    auto v1 = emb.embed("soft tone");
    CHECK_FALSE(emb.last_was_cached());
    CHECK(v1.values[0] == doctest::Approx(0.6).epsilon(1e-7));
    auto v2 = emb.embed("soft tone");
    CHECK(emb.last_was_cached());
    CHECK(calls == 1);
    CHECK(v1 == v2);  // byte-identical via f32 canonical form
    fs::remove_all(path.parent_path());
}

TEST_CASE("remote embedder rejects dimension mismatch") {
    auto path = temp_file("emb.cache");
    auto cache = std::make_shared<EmbeddingCache>(path);
    EmbedTransport stub = [](const std::string&) {
        return nlohmann::json{{"data", {{{"embedding", {1.0, 2.0, 3.0}}}}}}
            .dump();
    };
    EmbedderSpec spec{EmbedderSpec::Kind::remote, "stub-model", 2};
    RemoteEmbedder emb(spec, stub, cache);
    CHECK_THROWS_AS(emb.embed("text"), DataError);
    fs::remove_all(path.parent_path());
}

TEST_CASE("remote embedder retries transport failures") {
    auto path = temp_file("emb.cache");
    auto cache = std::make_shared<EmbeddingCache>(path);
    int calls = 0;
    EmbedTransport flaky = [&](const std::string&) -> std::string {
        if (++calls < 3) throw RemoteError("transient");
        return nlohmann::json{{"data", {{{"embedding", {1.0, 0.0}}}}}}.dump();
    };
    EmbedderSpec spec{EmbedderSpec::Kind::remote, "m", 2};
    RemoteEmbedder emb(spec, flaky, cache);
    auto v = emb.embed("text");
    CHECK(calls == 3);
    CHECK(v.values[0] == doctest::Approx(1.0));
    fs::remove_all(path.parent_path());
}
