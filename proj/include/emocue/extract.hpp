#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "emocue/core.hpp"

namespace emocue {

// Prompt template with exactly one {description} placeholder.
struct PromptTemplate {
    std::string id;
    std::string body;

    static PromptTemplate make(std::string id, std::string body);
    // File name (without extension) becomes the template id.
    static PromptTemplate load(const std::filesystem::path& path);
    std::string render(const std::string& description) const;
};

// All *.txt files in a directory, sorted by id. Throws if none found.
std::vector<PromptTemplate> load_template_dir(
    const std::filesystem::path& dir);

struct ExtractionResult {
    CueSet cues;
    std::string template_id;
    std::string raw_model_output;
    bool cached = false;
};

// Chat-completion client. Production speaks HTTP; tests stub this.
class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string complete(const std::string& prompt) = 0;
    virtual std::string model_id() const = 0;
};

// OpenAI-style /v1/chat/completions client, temperature 0, JSON response
// requested, bearer token from EMOCUE_LLM_API_KEY. Bounded retries with
// exponential backoff on retryable failures.
class HttpChatClient : public ChatClient {
public:
    HttpChatClient(std::string base_url, std::string model_id,
                   int max_retries = 3);
    std::string complete(const std::string& prompt) override;
    std::string model_id() const override { return model_id_; }

private:
    std::string base_url_;
    std::string model_id_;
    int max_retries_;
};

// JSONL cache of extraction results keyed by
// (model, template_id, sha256(normalized description)).
class ExtractionCache {
public:
    explicit ExtractionCache(std::filesystem::path path);

    std::optional<CueSet> lookup(const std::string& model_id,
                                 const std::string& template_id,
                                 const std::string& text_sha) const;
    void store(const std::string& model_id, const std::string& template_id,
               const std::string& text_sha, const CueSet& cues);

private:
    std::filesystem::path path_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, CueSet> index_;
};

// Parse the mandated model response format:
// {"visual": [str], "audio": [str], "global": [str]}.
// Tolerates surrounding prose / code fences by locating the outermost JSON
// object. Throws DataError carrying the raw output when unparseable.
CueSet parse_cue_response(const std::string& raw);

ExtractionResult extract_llm(const std::string& description,
                             const PromptTemplate& tmpl, ChatClient& client,
                             ExtractionCache* cache = nullptr);

// Deterministic fallback: parse `[VISUAL] a; b [AUDIO] c [GLOBAL] d`
// labeled sections (any order, each optional, but at least one marker must
// be present of the three; all missing is an error).
CueSet extract_structured(const std::string& annotated_text);

// Uniform extractor signature used by the sweep harness.
using Extractor =
    std::function<CueSet(const std::string& description,
                         const PromptTemplate& tmpl)>;

// Template-independent extractor backed by extract_structured.
Extractor structured_extractor();
// Template-sensitive extractor backed by a chat client (+ optional cache).
Extractor llm_extractor(std::shared_ptr<ChatClient> client,
                        std::shared_ptr<ExtractionCache> cache = nullptr);

}  // namespace emocue
