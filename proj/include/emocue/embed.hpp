#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "emocue/core.hpp"

namespace emocue {

struct EmbedderSpec {
    enum class Kind { remote, deterministic_test };
    Kind kind = Kind::deterministic_test;
    std::string model_id;
    size_t dim = 0;
};

// Text -> unit-norm vector. Implementations guarantee identical
// (model_id, normalized text) pairs return byte-identical vectors.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual EmbeddingVector embed(const std::string& text) = 0;
    virtual const EmbedderSpec& spec() const = 0;
};

// Per-cue embedding of a whole CueSet, keyed by normalized cue text.
std::map<std::string, EmbeddingVector> embed_cue_set(const CueSet& cues,
                                                     Embedder& embedder);

// Offline test embedder. The vector for a text is drawn from a gaussian
// stream seeded by SHA-256 of the normalized text, then unit-normalized and
// rounded to f32 precision. Identical texts map to identical vectors;
// distinct texts land nearly orthogonal at the default dim (256), so exact
// cue-text equality is recoverable from the vectors.
class DeterministicEmbedder : public Embedder {
public:
    explicit DeterministicEmbedder(size_t dim = 256);
    EmbeddingVector embed(const std::string& text) override;
    const EmbedderSpec& spec() const override { return spec_; }

private:
    EmbedderSpec spec_;
    std::mutex mu_;
    std::unordered_map<std::string, EmbeddingVector> memo_;
};

// Test utility: fixed text -> vector table. Throws on unknown text.
class FixtureEmbedder : public Embedder {
public:
    FixtureEmbedder(std::map<std::string, EmbeddingVector> table, size_t dim);
    EmbeddingVector embed(const std::string& text) override;
    const EmbedderSpec& spec() const override { return spec_; }

private:
    EmbedderSpec spec_;
    std::map<std::string, EmbeddingVector> table_;
};

// Append-only binary vector store with a JSON sidecar index. Record layout
// (little-endian): u32 model_id length, model_id bytes, 64-byte hex sha256,
// u32 dim, dim * f32. Missing or stale sidecar is rebuilt by scanning.
class EmbeddingCache {
public:
    explicit EmbeddingCache(std::filesystem::path path);

    std::optional<std::vector<float>> lookup(const std::string& model_id,
                                             const std::string& text_sha) const;
    void store(const std::string& model_id, const std::string& text_sha,
               const std::vector<float>& values);
    size_t size() const;

private:
    std::filesystem::path path_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, std::vector<float>> index_;

    void load();
};

// Transport hook for the remote embedder: POSTs a JSON body, returns the
// response body. Production uses HTTP; tests stub this.
using EmbedTransport =
    std::function<std::string(const std::string& request_body)>;

// Remote embedding endpoint client with mandatory cache. Requests follow
// the common embeddings API shape: {"model": ..., "input": [text]} ->
// {"data": [{"embedding": [...]}]}.
class RemoteEmbedder : public Embedder {
public:
    RemoteEmbedder(EmbedderSpec spec, EmbedTransport transport,
                   std::shared_ptr<EmbeddingCache> cache, int max_retries = 3);

    EmbeddingVector embed(const std::string& text) override;
    const EmbedderSpec& spec() const override { return spec_; }
    bool last_was_cached() const { return last_was_cached_; }

    // HTTP transport against `base_url` (e.g. "http://host:port"), path
    // "/v1/embeddings", bearer token from EMOCUE_EMBED_API_KEY.
    static EmbedTransport http_transport(const std::string& base_url);

private:
    EmbedderSpec spec_;
    EmbedTransport transport_;
    std::shared_ptr<EmbeddingCache> cache_;
    int max_retries_;
    bool last_was_cached_ = false;
};

}  // namespace emocue
