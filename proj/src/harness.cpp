#include "emocue/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <fstream>
#include <numeric>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "emocue/emocue360.hpp"
#include "emocue/textmetrics.hpp"
#include "json.hpp"

namespace emocue {

using nlohmann::json;

namespace {

// Bounded parallel map over [0, n); rethrows the first captured exception.
void parallel_for(size_t n, size_t jobs,
                  const std::function<void(size_t)>& body) {
    jobs = std::max<size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> threads;
    for (size_t t = 0; t < jobs; ++t) {
        threads.emplace_back([&] {
            while (true) {
                size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mu);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : threads) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

SweepResult run_template_sweep(const Corpus& corpus,
                               std::span<const PromptTemplate> templates,
                               const Extractor& extractor, Embedder& embedder,
                               size_t jobs) {
    if (templates.size() != 5)
        throw DataError("template sweep requires exactly 5 templates, got " +
                        std::to_string(templates.size()));
    if (corpus.empty()) throw DataError("template sweep: empty corpus");

    std::vector<const PromptTemplate*> order;
    for (const auto& t : templates) order.push_back(&t);
    std::sort(order.begin(), order.end(),
              [](const auto* a, const auto* b) { return a->id < b->id; });

    SweepResult result;
    for (const PromptTemplate* tmpl : order) {
        std::vector<EvalSample> extracted(corpus.size());
        parallel_for(corpus.size(), jobs, [&](size_t i) {
            EvalSample s = corpus[i];
            try {
                s.candidate_cues = extractor(s.candidate_text, *tmpl);
                s.reference_cues = extractor(s.reference_text, *tmpl);
            } catch (const Error& e) {
                throw DataError("sweep: extraction failed for sample '" +
                                s.id + "' under template '" + tmpl->id +
                                "': " + e.what());
            }
            extracted[i] = std::move(s);
        });

        std::map<std::string, SampleScores> per_sample;
        for (const auto& s : extracted) {
            CueEmbeddings emb = embed_cue_set(*s.candidate_cues, embedder);
            auto ref_emb = embed_cue_set(*s.reference_cues, embedder);
            emb.insert(ref_emb.begin(), ref_emb.end());
            per_sample[s.id] = score_sample(s, emb);
        }
        MetricReport report = aggregate(per_sample);
        for (Dimension d : kDimensions) {
            auto it = report.corpus.find(d);
            if (it != report.corpus.end() && it->second)
                result.per_template[tmpl->id][d] = *it->second;
        }
    }

    // Dispersion only for dimensions populated under every template.
    for (Dimension d : kDimensions) {
        std::vector<double> ps, rs, fs;
        for (const auto& [tid, dims] : result.per_template) {
            auto it = dims.find(d);
            if (it == dims.end()) break;
            ps.push_back(it->second.precision);
            rs.push_back(it->second.recall);
            fs.push_back(it->second.f1);
        }
        if (ps.size() != result.per_template.size() || ps.empty()) continue;
        DispersionStats stats;
        std::tie(stats.p_std, stats.p_range) = population_std_and_range(ps);
        std::tie(stats.r_std, stats.r_range) = population_std_and_range(rs);
        std::tie(stats.f1_std, stats.f1_range) = population_std_and_range(fs);
        result.dispersion[d] = stats;
    }
    return result;
}

namespace {

json dimension_score_json(const DimensionScore& s) {
    return json{{"precision", s.precision},
                {"recall", s.recall},
                {"f1", s.f1},
                {"candidate_count", s.candidate_count},
                {"reference_count", s.reference_count},
                {"vacuous", s.vacuous}};
}

}  // namespace

void write_sweep_json(std::ostream& out, const SweepResult& result) {
    json per_template = json::object();
    for (const auto& [tid, dims] : result.per_template) {
        json d = json::object();
        for (const auto& [dim, score] : dims)
            d[to_string(dim)] = dimension_score_json(score);
        per_template[tid] = d;
    }
    json dispersion = json::object();
    for (const auto& [dim, stats] : result.dispersion) {
        dispersion[to_string(dim)] = json{
            {"p_std", stats.p_std},     {"r_std", stats.r_std},
            {"f1_std", stats.f1_std},   {"p_range", stats.p_range},
            {"r_range", stats.r_range}, {"f1_range", stats.f1_range}};
    }
    out << json{{"schema_version", 1},
                {"per_template", per_template},
                {"dispersion", dispersion}}
               .dump(2)
        << "\n";
}

void write_sweep_table(std::ostream& out, const SweepResult& result) {
    // Values scaled by 10^3 at the rendering boundary only.
    out << "Dispersion across templates (values x 10^-3)\n";
    out << std::left << std::setw(8) << "Dim" << std::right;
    for (const char* h :
         {"P-Std", "P-Rg", "R-Std", "R-Rg", "F1-Std", "F1-Rg"})
        out << std::setw(10) << h;
    out << "\n";
    for (const auto& [dim, s] : result.dispersion) {
        out << std::left << std::setw(8) << to_string(dim) << std::right
            << std::fixed << std::setprecision(3);
        for (double v : {s.p_std, s.p_range, s.r_std, s.r_range, s.f1_std,
                         s.f1_range})
            out << std::setw(10) << v * 1000.0;
        out << "\n";
    }
}

namespace {

constexpr std::array<std::pair<const char*, Dimension>, 3> kPlaceholders = {{
    {"{visual}", Dimension::visual},
    {"{audio}", Dimension::audio},
    {"{global}", Dimension::global},
}};

bool has_placeholder(const std::string& body) {
    for (const auto& [ph, dim] : kPlaceholders)
        if (body.find(ph) != std::string::npos) return true;
    return false;
}

// Deterministic uniform draw in [0, k); avoids std::uniform_int_distribution
// whose output is implementation-defined.
size_t draw(std::mt19937_64& rng, size_t k) { return rng() % k; }

std::vector<AtomicCue> shuffled(std::vector<AtomicCue> v,
                                std::mt19937_64& rng) {
    for (size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[draw(rng, i)]);
    return v;
}

std::string join_cues(const std::vector<AtomicCue>& cues) {
    std::string out;
    for (size_t i = 0; i < cues.size(); ++i) {
        if (i) out += "; ";
        out += cues[i].text;
    }
    return out;
}

std::string render_style(const StyleTemplate& tmpl, const CueSet& cues) {
    std::string out = tmpl.body;
    for (const auto& [ph, dim] : kPlaceholders) {
        std::string text = join_cues(cues.dim(dim));
        for (size_t pos = out.find(ph); pos != std::string::npos;
             pos = out.find(ph, pos + text.size()))
            out.replace(pos, std::strlen(ph), text);
    }
    return out;
}

// Random subset of a dimension, order preserved from the pool.
std::vector<AtomicCue> draw_subset(const std::vector<AtomicCue>& pool,
                                   std::mt19937_64& rng) {
    if (pool.empty()) return {};
    size_t count = 1 + draw(rng, pool.size());
    std::vector<size_t> idx(pool.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (size_t i = 0; i < count; ++i)
        std::swap(idx[i], idx[i + draw(rng, idx.size() - i)]);
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    std::vector<AtomicCue> out;
    for (size_t i : idx) out.push_back(pool[i]);
    return out;
}

CueSet intersect(const CueSet& a, const CueSet& b) {
    CueSet out;
    for (Dimension d : kDimensions)
        for (const auto& cue : a.dim(d))
            if (std::find(b.dim(d).begin(), b.dim(d).end(), cue) !=
                b.dim(d).end())
                out.dim(d).push_back(cue);
    return out;
}

}  // namespace

std::vector<StyleTemplate> load_style_templates(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open style templates: " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_array())
        throw DataError("style templates must be a JSON array: " +
                        path.string());
    std::vector<StyleTemplate> out;
    for (const auto& e : j)
        out.push_back({e.at("id").get<std::string>(),
                       e.at("body").get<std::string>()});
    return out;
}

std::vector<StylePair> synthesize_style_pairs(
    const CueSet& cue_pool, std::span<const StyleTemplate> style_templates,
    const SynthOptions& options) {
    if (cue_pool.empty())
        throw DataError("style pair synthesis: empty cue pool");
    if (style_templates.size() < 2)
        throw DataError("style pair synthesis requires >= 2 style templates");
    if (options.n_pairs < 1)
        throw DataError("style pair synthesis: n_pairs must be >= 1");
    for (const auto& t : style_templates)
        if (!has_placeholder(t.body))
            throw DataError("style template '" + t.id +
                            "' lacks an insertion placeholder");

    std::mt19937_64 master(options.seed);
    std::vector<StylePair> pairs;
    for (int p = 0; p < options.n_pairs; ++p) {
        uint64_t pair_seed = master();
        std::mt19937_64 rng(pair_seed);

        CueSet subset;
        do {
            for (Dimension d : kDimensions) {
                subset.dim(d).clear();
                if (!cue_pool.dim(d).empty() && draw(rng, 4) != 0)
                    subset.dim(d) = draw_subset(cue_pool.dim(d), rng);
            }
        } while (subset.empty());

        CueSet subset_b = subset;
        if (!options.identical_subsets) {
            // Drop one cue from the larger side so the subsets overlap but
            // differ; the planted set becomes the intersection.
            for (Dimension d : kDimensions) {
                auto& cues = subset_b.dim(d);
                if (cues.size() > 1) {
                    cues.erase(cues.begin() +
                               static_cast<long>(draw(rng, cues.size())));
                    break;
                }
            }
        }

        size_t ia = draw(rng, style_templates.size());
        size_t ib =
            (ia + 1 + draw(rng, style_templates.size() - 1)) %
            style_templates.size();

        CueSet render_a = subset;
        CueSet render_b = subset_b;
        for (Dimension d : kDimensions) {
            // Guarantee a visible order change whenever one is possible, so
            // the two renderings differ in wording order as well as framing.
            auto& cues = render_b.dim(d);
            if (cues.size() < 2) continue;
            auto before = cues;
            do {
                cues = shuffled(cues, rng);
            } while (cues == before);
        }

        StylePair pair;
        pair.text_a = render_style(style_templates[ia], render_a);
        pair.text_b = render_style(style_templates[ib], render_b);
        pair.planted_cues =
            options.identical_subsets ? subset : intersect(subset, subset_b);
        pair.seed = pair_seed;
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

namespace {

json cues_json(const CueSet& cs) {
    auto dim = [](const std::vector<AtomicCue>& v) {
        json arr = json::array();
        for (const auto& c : v) arr.push_back(c.text);
        return arr;
    };
    return json{{"visual", dim(cs.visual)},
                {"audio", dim(cs.audio)},
                {"global", dim(cs.global)}};
}

}  // namespace

void write_pairs_jsonl(std::ostream& out, std::span<const StylePair> pairs) {
    for (const auto& p : pairs) {
        json j{{"text_a", p.text_a},
               {"text_b", p.text_b},
               {"planted_cues", cues_json(p.planted_cues)},
               {"seed", p.seed}};
        out << j.dump() << "\n";
    }
}

std::vector<StylePair> read_pairs_jsonl(std::istream& in) {
    std::vector<StylePair> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw DataError("pairs file: malformed JSON at line " +
                            std::to_string(lineno));
        auto grab = [&](const char* key) {
            std::vector<std::string> cues;
            for (const auto& e : j.at("planted_cues").at(key))
                cues.push_back(e.get<std::string>());
            return cues;
        };
        StylePair p;
        p.text_a = j.at("text_a").get<std::string>();
        p.text_b = j.at("text_b").get<std::string>();
        p.planted_cues =
            CueSet::make(grab("visual"), grab("audio"), grab("global"));
        p.seed = j.at("seed").get<uint64_t>();
        out.push_back(std::move(p));
    }
    return out;
}

ComparisonTable compare_metrics_on_pairs(std::span<const StylePair> pairs,
                                         const Extractor& extractor,
                                         Embedder& embedder) {
    if (pairs.empty()) throw DataError("compare: empty pair list");
    static const PromptTemplate kDummy =
        PromptTemplate::make("pair-compare", "{description}");

    std::vector<std::vector<TokenSequence>> refs_per_doc;
    for (const auto& p : pairs)
        refs_per_doc.push_back({tokenize(p.text_b)});
    DocFreq stats = build_doc_freq(refs_per_doc);

    ComparisonTable table;
    for (const auto& p : pairs) {
        TokenSequence cand = tokenize(p.text_a);
        std::vector<TokenSequence> refs = {tokenize(p.text_b)};
        PairComparison row;
        row.bleu1 = bleu(cand, refs, 1).score;
        row.bleu4 = bleu(cand, refs, 4).score;
        row.cider = cider(cand, refs, stats);

        CueSet cues_a = extractor(p.text_a, kDummy);
        CueSet cues_b = extractor(p.text_b, kDummy);
        CueEmbeddings emb = embed_cue_set(cues_a, embedder);
        auto emb_b = embed_cue_set(cues_b, embedder);
        emb.insert(emb_b.begin(), emb_b.end());

        EvalSample sample;
        sample.id = "pair";
        sample.candidate_cues = cues_a;
        sample.reference_cues = cues_b;
        sample.supported_dimensions = {Dimension::visual, Dimension::audio,
                                       Dimension::global};
        SampleScores scores = score_sample(sample, emb);
        std::vector<double> ps, rs;
        for (const auto& [d, s] : scores) {
            if (!s || s->vacuous) continue;
            ps.push_back(s->precision);
            rs.push_back(s->recall);
        }
        if (ps.empty()) {
            row.emocue_f1 = 1.0;  // both sides agree nothing is there
        } else {
            double mp = std::accumulate(ps.begin(), ps.end(), 0.0) /
                        static_cast<double>(ps.size());
            double mr = std::accumulate(rs.begin(), rs.end(), 0.0) /
                        static_cast<double>(rs.size());
            row.emocue_f1 = f1(mp, mr);
        }
        table.rows.push_back(row);

        table.mean.bleu1 += row.bleu1;
        table.mean.bleu4 += row.bleu4;
        table.mean.cider += row.cider;
        table.mean.emocue_f1 += row.emocue_f1;
    }
    double inv = 1.0 / static_cast<double>(table.rows.size());
    table.mean.bleu1 *= inv;
    table.mean.bleu4 *= inv;
    table.mean.cider *= inv;
    table.mean.emocue_f1 *= inv;
    return table;
}

void write_comparison_json(std::ostream& out, const ComparisonTable& table) {
    json rows = json::array();
    for (const auto& r : table.rows)
        rows.push_back(json{{"bleu1", r.bleu1},
                            {"bleu4", r.bleu4},
                            {"cider", r.cider},
                            {"emocue_f1", r.emocue_f1}});
    out << json{{"schema_version", 1},
                {"pairs", rows},
                {"mean",
                 {{"bleu1", table.mean.bleu1},
                  {"bleu4", table.mean.bleu4},
                  {"cider", table.mean.cider},
                  {"emocue_f1", table.mean.emocue_f1}}}}
               .dump(2)
        << "\n";
}

}  // namespace emocue
