#include "emocue/embed.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <thread>

#include "emocue/errors.hpp"
#include "httplib.h"
#include "json.hpp"

namespace emocue {

using nlohmann::json;

std::map<std::string, EmbeddingVector> embed_cue_set(const CueSet& cues,
                                                     Embedder& embedder) {
    std::map<std::string, EmbeddingVector> out;
    for (Dimension d : kDimensions) {
        for (const auto& cue : cues.dim(d)) {
            if (!out.count(cue.text)) out.emplace(cue.text, embedder.embed(cue.text));
        }
    }
    return out;
}

namespace {

// f32 rounding makes fresh and cache-loaded vectors byte-identical.
std::vector<double> quantize_f32(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (size_t i = 0; i < v.size(); ++i)
        out[i] = static_cast<double>(static_cast<float>(v[i]));
    return out;
}

}  // namespace

DeterministicEmbedder::DeterministicEmbedder(size_t dim) {
    if (dim == 0) throw DataError("embedder dim must be positive");
    spec_ = {EmbedderSpec::Kind::deterministic_test, "det-test", dim};
}

EmbeddingVector DeterministicEmbedder::embed(const std::string& text) {
    std::string norm = normalize_text(text);
    if (norm.empty()) throw DataError("embed: empty text");
    {
        std::lock_guard lock(mu_);
        auto it = memo_.find(norm);
        if (it != memo_.end()) return it->second;
    }
    std::string sha = sha256_hex(norm);
    uint64_t seed = 0;
    for (int i = 0; i < 16; ++i) {
        char c = sha[i];
        seed = seed * 16 + (c <= '9' ? c - '0' : c - 'a' + 10);
    }
    std::mt19937_64 rng(seed);
    std::vector<double> v(spec_.dim);
    // Box-Muller on raw 53-bit uniforms: stable across standard libraries,
    // unlike std::normal_distribution.
    auto uniform = [&rng]() {
        return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
    };
    for (size_t i = 0; i < v.size(); i += 2) {
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        v[i] = r * std::cos(2.0 * M_PI * u2);
        if (i + 1 < v.size()) v[i + 1] = r * std::sin(2.0 * M_PI * u2);
    }
    auto vec = EmbeddingVector::normalized(quantize_f32(
        EmbeddingVector::normalized(std::move(v)).values));
    std::lock_guard lock(mu_);
    return memo_.emplace(norm, std::move(vec)).first->second;
}

FixtureEmbedder::FixtureEmbedder(std::map<std::string, EmbeddingVector> table,
                                 size_t dim)
    : table_(std::move(table)) {
    spec_ = {EmbedderSpec::Kind::deterministic_test, "fixture", dim};
}

EmbeddingVector FixtureEmbedder::embed(const std::string& text) {
    auto it = table_.find(normalize_text(text));
    if (it == table_.end())
        throw DataError("fixture embedder: unknown text '" + text + "'");
    return it->second;
}

namespace {

constexpr size_t kShaHexLen = 64;

std::string cache_key(const std::string& model_id, const std::string& sha) {
    return model_id + "\x1f" + sha;
}

}  // namespace

EmbeddingCache::EmbeddingCache(std::filesystem::path path)
    : path_(std::move(path)) {
    load();
}

void EmbeddingCache::load() {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;  // fresh cache
    while (true) {
        uint32_t model_len = 0;
        in.read(reinterpret_cast<char*>(&model_len), 4);
        if (!in) break;
        std::string model(model_len, '\0');
        in.read(model.data(), model_len);
        std::string sha(kShaHexLen, '\0');
        in.read(sha.data(), kShaHexLen);
        uint32_t dim = 0;
        in.read(reinterpret_cast<char*>(&dim), 4);
        std::vector<float> vals(dim);
        in.read(reinterpret_cast<char*>(vals.data()),
                static_cast<std::streamsize>(dim) * 4);
        if (!in) break;  // truncated tail record is ignored
        index_[cache_key(model, sha)] = std::move(vals);
    }
    // Sidecar index is advisory; the binary file is authoritative, so a
    // missing or stale sidecar costs only the scan above.
    std::ofstream side(path_.string() + ".index.json", std::ios::binary);
    if (side) {
        json j = json::object();
        for (const auto& [k, v] : index_) j[k] = v.size();
        side << j.dump() << "\n";
    }
}

std::optional<std::vector<float>> EmbeddingCache::lookup(
    const std::string& model_id, const std::string& text_sha) const {
    std::lock_guard lock(mu_);
    auto it = index_.find(cache_key(model_id, text_sha));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void EmbeddingCache::store(const std::string& model_id,
                           const std::string& text_sha,
                           const std::vector<float>& values) {
    if (text_sha.size() != kShaHexLen)
        throw DataError("embedding cache: bad sha length");
    std::lock_guard lock(mu_);
    std::string key = cache_key(model_id, text_sha);
    if (index_.count(key)) return;
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out)
        throw DataError("cannot append to embedding cache: " + path_.string());
    uint32_t model_len = static_cast<uint32_t>(model_id.size());
    out.write(reinterpret_cast<const char*>(&model_len), 4);
    out.write(model_id.data(), model_len);
    out.write(text_sha.data(), kShaHexLen);
    uint32_t dim = static_cast<uint32_t>(values.size());
    out.write(reinterpret_cast<const char*>(&dim), 4);
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(dim) * 4);
    index_[key] = values;
}

size_t EmbeddingCache::size() const {
    std::lock_guard lock(mu_);
    return index_.size();
}

RemoteEmbedder::RemoteEmbedder(EmbedderSpec spec, EmbedTransport transport,
                               std::shared_ptr<EmbeddingCache> cache,
                               int max_retries)
    : spec_(std::move(spec)),
      transport_(std::move(transport)),
      cache_(std::move(cache)),
      max_retries_(max_retries) {
    if (spec_.model_id.empty())
        throw DataError("remote embedder requires a model id");
    if (spec_.dim == 0) throw DataError("embedder dim must be positive");
    if (!cache_) throw DataError("remote embedder requires a cache");
}

EmbeddingVector RemoteEmbedder::embed(const std::string& text) {
    std::string norm = normalize_text(text);
    if (norm.empty()) throw DataError("embed: empty text");
    std::string sha = sha256_hex(norm);
    if (auto hit = cache_->lookup(spec_.model_id, sha)) {
        last_was_cached_ = true;
        if (hit->size() != spec_.dim)
            throw DataError("cached embedding dim mismatch for '" + text + "'");
        std::vector<double> vals(hit->begin(), hit->end());
        return EmbeddingVector{std::move(vals)};
    }
    last_was_cached_ = false;

    json req{{"model", spec_.model_id}, {"input", json::array({norm})}};
    std::string body;
    std::string last_err;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(
                std::chrono::milliseconds(100 << (attempt - 1)));
        try {
            body = transport_(req.dump());
            last_err.clear();
            break;
        } catch (const RemoteError& e) {
            if (!e.retryable()) throw;
            last_err = e.what();
        }
    }
    if (!last_err.empty())
        throw RemoteError("embedding request failed after retries: " + last_err,
                          false);

    std::vector<double> vals;
    try {
        json resp = json::parse(body);
        for (const auto& x : resp.at("data").at(0).at("embedding"))
            vals.push_back(x.get<double>());
    } catch (const json::exception& e) {
        throw RemoteError(std::string("bad embedding response: ") + e.what(),
                          false);
    }
    if (vals.size() != spec_.dim)
        throw DataError("embedding dim mismatch: endpoint returned " +
                        std::to_string(vals.size()) + ", configured dim is " +
                        std::to_string(spec_.dim));
    auto vec = EmbeddingVector::normalized(std::move(vals));
    std::vector<float> f32(vec.values.begin(), vec.values.end());
    cache_->store(spec_.model_id, sha, f32);
    // Return the f32-rounded form so fresh and cached reads are identical.
    std::vector<double> canonical(f32.begin(), f32.end());
    return EmbeddingVector{std::move(canonical)};
}

EmbedTransport RemoteEmbedder::http_transport(const std::string& base_url) {
    return [base_url](const std::string& body) -> std::string {
        httplib::Client client(base_url);
        client.set_read_timeout(60, 0);
        httplib::Headers headers;
        if (const char* key = std::getenv("EMOCUE_EMBED_API_KEY"))
            headers.emplace("Authorization", std::string("Bearer ") + key);
        auto res = client.Post("/v1/embeddings", headers, body,
                               "application/json");
        if (!res)
            throw RemoteError("embedding endpoint unreachable: " + base_url);
        if (res->status >= 500)
            throw RemoteError("embedding endpoint error " +
                              std::to_string(res->status));
        if (res->status != 200)
            throw RemoteError("embedding endpoint rejected request (" +
                                  std::to_string(res->status) + "): " + res->body,
                              false);
        return res->body;
    };
}

}  // namespace emocue
