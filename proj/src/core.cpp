#include "emocue/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <openssl/evp.h>

#include "emocue/kernels.hpp"
#include "json.hpp"

namespace emocue {

using nlohmann::json;

std::string normalize_text(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (unsigned char c : raw) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

double round_half_even(double x, int decimals) {
    double scale = std::pow(10.0, decimals);
    double y = x * scale;
    double r = std::nearbyint(y);  // default FP mode: round-to-nearest-even
    // Guard against scaling noise at exact halves.
    if (std::abs(y - std::trunc(y)) == 0.5) {
        double lo = std::floor(y), hi = std::ceil(y);
        r = (std::fmod(lo, 2.0) == 0.0) ? lo : hi;
    }
    return r / scale;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

const char* to_string(Dimension d) {
    switch (d) {
        case Dimension::visual: return "visual";
        case Dimension::audio: return "audio";
        case Dimension::global: return "global";
    }
    return "?";
}

std::optional<Dimension> dimension_from_string(std::string_view s) {
    if (s == "visual") return Dimension::visual;
    if (s == "audio") return Dimension::audio;
    if (s == "global") return Dimension::global;
    return std::nullopt;
}

AtomicCue AtomicCue::make(std::string_view raw) {
    std::string norm = normalize_text(raw);
    if (norm.empty()) throw DataError("atomic cue is empty after normalization");
    return AtomicCue{std::move(norm)};
}

namespace {

std::vector<AtomicCue> normalize_dim(std::vector<std::string> raw) {
    std::vector<AtomicCue> out;
    std::unordered_set<std::string> seen;
    for (auto& r : raw) {
        std::string norm = normalize_text(r);
        if (norm.empty()) continue;  // blank entries are dropped, not an error
        if (seen.insert(norm).second) out.push_back(AtomicCue{std::move(norm)});
    }
    return out;
}

}  // namespace

CueSet CueSet::make(std::vector<std::string> visual,
                    std::vector<std::string> audio,
                    std::vector<std::string> global) {
    CueSet cs;
    cs.visual = normalize_dim(std::move(visual));
    cs.audio = normalize_dim(std::move(audio));
    cs.global = normalize_dim(std::move(global));
    return cs;
}

const std::vector<AtomicCue>& CueSet::dim(Dimension d) const {
    switch (d) {
        case Dimension::visual: return visual;
        case Dimension::audio: return audio;
        case Dimension::global: return global;
    }
    throw Error("bad dimension");
}

std::vector<AtomicCue>& CueSet::dim(Dimension d) {
    return const_cast<std::vector<AtomicCue>&>(
        static_cast<const CueSet*>(this)->dim(d));
}

bool CueSet::empty() const {
    return visual.empty() && audio.empty() && global.empty();
}

size_t CueSet::size() const {
    return visual.size() + audio.size() + global.size();
}

namespace {

CueSet cue_set_from_json(const json& j, const std::string& ctx) {
    if (!j.is_object())
        throw DataError(ctx + ": cue block must be a JSON object");
    auto grab = [&](const char* key) {
        std::vector<std::string> out;
        if (j.contains(key)) {
            if (!j.at(key).is_array())
                throw DataError(ctx + ": cue list '" + key +
                                "' must be an array of strings");
            for (const auto& e : j.at(key)) out.push_back(e.get<std::string>());
        }
        return out;
    };
    return CueSet::make(grab("visual"), grab("audio"), grab("global"));
}

json cue_set_to_json(const CueSet& cs) {
    auto dim = [&](const std::vector<AtomicCue>& v) {
        json arr = json::array();
        for (const auto& c : v) arr.push_back(c.text);
        return arr;
    };
    return json{{"visual", dim(cs.visual)},
                {"audio", dim(cs.audio)},
                {"global", dim(cs.global)}};
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, CorpusSchema schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path.string());
    Corpus corpus;
    std::unordered_set<std::string> ids;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": malformed JSON: " + e.what());
        }
        std::string ctx = path.string() + ":" + std::to_string(lineno);
        try {
            EvalSample s;
            s.id = j.at("id").get<std::string>();
            if (!ids.insert(s.id).second)
                throw DataError(ctx + ": duplicate sample id '" + s.id + "'");
            s.reference_text = j.value("reference_text", std::string{});
            if (schema == CorpusSchema::candidate_reference) {
                s.candidate_text = j.at("candidate_text").get<std::string>();
            } else {
                s.candidate_text = j.value("candidate_text", std::string{});
            }
            if (!j.contains("supported_dimensions"))
                throw DataError(ctx + ": missing supported_dimensions");
            for (const auto& d : j.at("supported_dimensions")) {
                auto dim = dimension_from_string(d.get<std::string>());
                if (!dim)
                    throw DataError(ctx + ": unknown dimension '" +
                                    d.get<std::string>() + "'");
                s.supported_dimensions.insert(*dim);
            }
            if (s.supported_dimensions.empty())
                throw DataError(ctx + ": supported_dimensions must be non-empty");
            if (j.contains("candidate_cues") && !j.at("candidate_cues").is_null())
                s.candidate_cues = cue_set_from_json(j.at("candidate_cues"), ctx);
            if (j.contains("reference_cues") && !j.at("reference_cues").is_null())
                s.reference_cues = cue_set_from_json(j.at("reference_cues"), ctx);
            corpus.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw DataError(ctx + ": " + e.what());
        }
    }
    return corpus;
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write corpus file: " + path.string());
    for (const auto& s : corpus) {
        json dims = json::array();
        for (Dimension d : kDimensions)
            if (s.supported_dimensions.count(d)) dims.push_back(to_string(d));
        json j{{"id", s.id},
               {"supported_dimensions", dims},
               {"candidate_text", s.candidate_text},
               {"reference_text", s.reference_text},
               {"candidate_cues",
                s.candidate_cues ? cue_set_to_json(*s.candidate_cues)
                                 : json(nullptr)},
               {"reference_cues",
                s.reference_cues ? cue_set_to_json(*s.reference_cues)
                                 : json(nullptr)}};
        out << j.dump() << "\n";
    }
}

EmbeddingVector EmbeddingVector::normalized(std::vector<double> values) {
    if (values.empty()) throw DataError("embedding vector is empty");
    for (double v : values)
        if (!std::isfinite(v))
            throw DataError("embedding vector has non-finite entries");
    double norm = std::sqrt(kernels::sum_squares(values));
    if (norm == 0.0) throw DataError("embedding vector has zero norm");
    for (double& v : values) v /= norm;
    return EmbeddingVector{std::move(values)};
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim())
        throw DataError("cosine: dimension mismatch (" +
                        std::to_string(a.dim()) + " vs " +
                        std::to_string(b.dim()) + ")");
    double na = std::sqrt(kernels::sum_squares(a.values));
    double nb = std::sqrt(kernels::sum_squares(b.values));
    if (na == 0.0 || nb == 0.0) throw DataError("cosine: zero vector");
    double c = kernels::dot(a.values, b.values) / (na * nb);
    return std::clamp(c, -1.0, 1.0);
}

std::pair<double, double> population_std_and_range(
    std::span<const double> xs) {
    if (xs.empty())
        throw DataError("population_std_and_range: empty input");
    double mean = kernels::sum(xs) / static_cast<double>(xs.size());
    double var = 0.0;
    double lo = xs[0], hi = xs[0];
    for (double x : xs) {
        var += (x - mean) * (x - mean);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    var /= static_cast<double>(xs.size());
    return {std::sqrt(var), hi - lo};
}

}  // namespace emocue
