#include "emocue/extract.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "emocue/errors.hpp"
#include "httplib.h"
#include "json.hpp"

namespace emocue {

using nlohmann::json;

namespace {

constexpr std::string_view kPlaceholder = "{description}";

size_t count_placeholders(const std::string& body) {
    size_t n = 0;
    for (size_t pos = body.find(kPlaceholder); pos != std::string::npos;
         pos = body.find(kPlaceholder, pos + 1))
        ++n;
    return n;
}

}  // namespace

PromptTemplate PromptTemplate::make(std::string id, std::string body) {
    if (count_placeholders(body) != 1)
        throw DataError("template '" + id +
                        "' must contain exactly one {description} placeholder");
    return PromptTemplate{std::move(id), std::move(body)};
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open template file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return make(path.stem().string(), ss.str());
}

std::string PromptTemplate::render(const std::string& description) const {
    std::string out = body;
    out.replace(out.find(kPlaceholder), kPlaceholder.size(), description);
    return out;
}

std::vector<PromptTemplate> load_template_dir(
    const std::filesystem::path& dir) {
    std::vector<PromptTemplate> out;
    if (!std::filesystem::is_directory(dir))
        throw DataError("template directory not found: " + dir.string());
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".txt")
            out.push_back(PromptTemplate::load(e.path()));
    if (out.empty())
        throw DataError("no *.txt templates in " + dir.string());
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    return out;
}

HttpChatClient::HttpChatClient(std::string base_url, std::string model_id,
                               int max_retries)
    : base_url_(std::move(base_url)),
      model_id_(std::move(model_id)),
      max_retries_(max_retries) {}

std::string HttpChatClient::complete(const std::string& prompt) {
    json req{{"model", model_id_},
             {"temperature", 0},
             {"response_format", {{"type", "json_object"}}},
             {"messages",
              json::array({{{"role", "user"}, {"content", prompt}}})}};
    std::string last_err;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(
                std::chrono::milliseconds(200 << (attempt - 1)));
        httplib::Client client(base_url_);
        client.set_read_timeout(120, 0);
        httplib::Headers headers;
        if (const char* key = std::getenv("EMOCUE_LLM_API_KEY"))
            headers.emplace("Authorization", std::string("Bearer ") + key);
        auto res = client.Post("/v1/chat/completions", headers, req.dump(),
                               "application/json");
        if (!res) {
            last_err = "endpoint unreachable: " + base_url_;
            continue;
        }
        if (res->status >= 500) {
            last_err = "endpoint error " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw RemoteError("chat endpoint rejected request (" +
                                  std::to_string(res->status) +
                                  "): " + res->body,
                              false);
        try {
            json resp = json::parse(res->body);
            return resp.at("choices").at(0).at("message").at("content")
                .get<std::string>();
        } catch (const json::exception& e) {
            throw RemoteError(std::string("bad chat response: ") + e.what(),
                              false);
        }
    }
    throw RemoteError("chat request failed after retries: " + last_err, false);
}

namespace {

std::string extraction_key(const std::string& model_id,
                           const std::string& template_id,
                           const std::string& sha) {
    return model_id + "\x1f" + template_id + "\x1f" + sha;
}

}  // namespace

ExtractionCache::ExtractionCache(std::filesystem::path path)
    : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) continue;  // skip torn tail writes
        auto grab = [&](const char* key) {
            std::vector<std::string> out;
            for (const auto& e : j.at("cues").at(key))
                out.push_back(e.get<std::string>());
            return out;
        };
        try {
            CueSet cues = CueSet::make(grab("visual"), grab("audio"),
                                       grab("global"));
            index_[extraction_key(j.at("model").get<std::string>(),
                                  j.at("template_id").get<std::string>(),
                                  j.at("text_sha256").get<std::string>())] =
                std::move(cues);
        } catch (const json::exception&) {
            continue;
        }
    }
}

std::optional<CueSet> ExtractionCache::lookup(
    const std::string& model_id, const std::string& template_id,
    const std::string& text_sha) const {
    std::lock_guard lock(mu_);
    auto it = index_.find(extraction_key(model_id, template_id, text_sha));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void ExtractionCache::store(const std::string& model_id,
                            const std::string& template_id,
                            const std::string& text_sha, const CueSet& cues) {
    std::lock_guard lock(mu_);
    std::string key = extraction_key(model_id, template_id, text_sha);
    if (index_.count(key)) return;
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out)
        throw DataError("cannot append to extraction cache: " + path_.string());
    auto dim = [&](const std::vector<AtomicCue>& v) {
        json arr = json::array();
        for (const auto& c : v) arr.push_back(c.text);
        return arr;
    };
    json j{{"model", model_id},
           {"template_id", template_id},
           {"text_sha256", text_sha},
           {"cues",
            {{"visual", dim(cues.visual)},
             {"audio", dim(cues.audio)},
             {"global", dim(cues.global)}}}};
    out << j.dump() << "\n";
    index_[key] = cues;
}

CueSet parse_cue_response(const std::string& raw) {
    size_t start = raw.find('{');
    size_t end = raw.rfind('}');
    if (start == std::string::npos || end == std::string::npos || end < start)
        throw DataError("unparseable extractor output (no JSON object): " + raw);
    json j = json::parse(raw.substr(start, end - start + 1), nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw DataError("unparseable extractor output: " + raw);
    auto grab = [&](const char* key) {
        std::vector<std::string> out;
        if (!j.contains(key)) return out;
        if (!j.at(key).is_array())
            throw DataError("extractor output field '" + std::string(key) +
                            "' is not an array: " + raw);
        for (const auto& e : j.at(key)) {
            if (!e.is_string())
                throw DataError("extractor output contains a non-string cue: " +
                                raw);
            out.push_back(e.get<std::string>());
        }
        return out;
    };
    if (!j.contains("visual") && !j.contains("audio") && !j.contains("global"))
        throw DataError("extractor output lacks all cue fields: " + raw);
    return CueSet::make(grab("visual"), grab("audio"), grab("global"));
}

ExtractionResult extract_llm(const std::string& description,
                             const PromptTemplate& tmpl, ChatClient& client,
                             ExtractionCache* cache) {
    std::string norm = normalize_text(description);
    if (norm.empty()) throw DataError("extract_llm: empty description");
    std::string sha = sha256_hex(norm);
    if (cache) {
        if (auto hit = cache->lookup(client.model_id(), tmpl.id, sha))
            return ExtractionResult{*hit, tmpl.id, "", true};
    }
    std::string raw = client.complete(tmpl.render(description));
    CueSet cues = parse_cue_response(raw);
    if (cache) cache->store(client.model_id(), tmpl.id, sha, cues);
    return ExtractionResult{std::move(cues), tmpl.id, std::move(raw), false};
}

CueSet extract_structured(const std::string& annotated_text) {
    struct Marker {
        const char* tag;
        Dimension dim;
        size_t pos;
    };
    std::vector<Marker> markers = {{"[VISUAL]", Dimension::visual, 0},
                                   {"[AUDIO]", Dimension::audio, 0},
                                   {"[GLOBAL]", Dimension::global, 0}};
    std::vector<Marker> found;
    for (auto& m : markers) {
        size_t pos = annotated_text.find(m.tag);
        if (pos != std::string::npos) {
            m.pos = pos;
            found.push_back(m);
        }
    }
    if (found.empty())
        throw DataError(
            "structured extraction: no [VISUAL]/[AUDIO]/[GLOBAL] marker found");
    std::sort(found.begin(), found.end(),
              [](const Marker& a, const Marker& b) { return a.pos < b.pos; });

    std::vector<std::string> per_dim[3];
    for (size_t i = 0; i < found.size(); ++i) {
        size_t body_start = found[i].pos + std::strlen(found[i].tag);
        size_t body_end = (i + 1 < found.size()) ? found[i + 1].pos
                                                 : annotated_text.size();
        std::string section =
            annotated_text.substr(body_start, body_end - body_start);
        std::vector<std::string> cues;
        std::stringstream ss(section);
        std::string piece;
        while (std::getline(ss, piece, ';')) cues.push_back(piece);
        per_dim[static_cast<int>(found[i].dim)] = std::move(cues);
    }
    return CueSet::make(std::move(per_dim[0]), std::move(per_dim[1]),
                        std::move(per_dim[2]));
}

Extractor structured_extractor() {
    return [](const std::string& description, const PromptTemplate&) {
        return extract_structured(description);
    };
}

Extractor llm_extractor(std::shared_ptr<ChatClient> client,
                        std::shared_ptr<ExtractionCache> cache) {
    return [client, cache](const std::string& description,
                           const PromptTemplate& tmpl) {
        return extract_llm(description, tmpl, *client, cache.get()).cues;
    };
}

}  // namespace emocue
