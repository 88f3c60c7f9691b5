#include "emocue/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "emocue/emocue360.hpp"
#include "emocue/objectives.hpp"
#include "json.hpp"

namespace emocue {

using nlohmann::json;

namespace {

void ensure_out_dir(const RunConfig& config) {
    std::filesystem::create_directories(config.out_dir);
}

void check_overwrite(const RunConfig& config,
                     const std::filesystem::path& file) {
    if (!config.force && std::filesystem::exists(file))
        throw UsageError("refusing to overwrite " + file.string() +
                         " (pass --force)");
}

std::ofstream open_out(const RunConfig& config,
                       const std::filesystem::path& file) {
    check_overwrite(config, file);
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write " + file.string());
    return out;
}

// Fill in missing cue blocks using the configured extractor. Uses the
// first prompt template when the extractor is template-sensitive.
Corpus extract_missing(const RunConfig& config, Corpus corpus) {
    bool any_missing = false;
    for (const auto& s : corpus)
        if (!s.candidate_cues || !s.reference_cues) any_missing = true;
    if (!any_missing) return corpus;

    Extractor extractor = make_extractor(config);
    PromptTemplate tmpl = PromptTemplate::make("default", "{description}");
    if (config.extractor_kind == "llm") {
        auto templates = load_template_dir(config.templates_dir);
        tmpl = templates.front();
    }
    for (auto& s : corpus) {
        if (!s.candidate_cues)
            s.candidate_cues = extractor(s.candidate_text, tmpl);
        if (!s.reference_cues)
            s.reference_cues = extractor(s.reference_text, tmpl);
    }
    return corpus;
}

CueSet load_cue_pool(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open cue pool: " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw DataError("cue pool must be a JSON object: " + path.string());
    auto grab = [&](const char* key) {
        std::vector<std::string> out;
        if (j.contains(key))
            for (const auto& e : j.at(key)) out.push_back(e.get<std::string>());
        return out;
    };
    return CueSet::make(grab("visual"), grab("audio"), grab("global"));
}

}  // namespace

std::unique_ptr<Embedder> make_embedder(const RunConfig& config) {
    if (config.embedder.kind == EmbedderSpec::Kind::deterministic_test)
        return std::make_unique<DeterministicEmbedder>(config.embedder.dim);
    if (config.embed_base_url.empty())
        throw UsageError("remote embedder requires --embed-base-url");
    if (!std::getenv("EMOCUE_EMBED_API_KEY"))
        throw UsageError("remote embedder requires EMOCUE_EMBED_API_KEY");
    auto cache_path = config.embed_cache_path.empty()
                          ? config.out_dir / "embeddings.cache"
                          : config.embed_cache_path;
    std::filesystem::create_directories(cache_path.parent_path());
    auto cache = std::make_shared<EmbeddingCache>(cache_path);
    return std::make_unique<RemoteEmbedder>(
        config.embedder, RemoteEmbedder::http_transport(config.embed_base_url),
        cache);
}

Extractor make_extractor(const RunConfig& config) {
    if (config.extractor_kind == "structured") return structured_extractor();
    if (config.extractor_kind != "llm")
        throw UsageError("unknown extractor kind '" + config.extractor_kind +
                         "' (expected structured or llm)");
    if (config.llm_base_url.empty())
        throw UsageError("llm extractor requires --llm-base-url");
    if (!std::getenv("EMOCUE_LLM_API_KEY"))
        throw UsageError("llm extractor requires EMOCUE_LLM_API_KEY");
    auto client =
        std::make_shared<HttpChatClient>(config.llm_base_url, config.llm_model);
    std::shared_ptr<ExtractionCache> cache;
    auto cache_path = config.extract_cache_path.empty()
                          ? config.out_dir / "extractions.jsonl"
                          : config.extract_cache_path;
    std::filesystem::create_directories(cache_path.parent_path());
    cache = std::make_shared<ExtractionCache>(cache_path);
    return llm_extractor(client, cache);
}

void cmd_extract(const RunConfig& config) {
    ensure_out_dir(config);
    Corpus corpus = load_corpus(config.corpus_path);
    corpus = extract_missing(config, std::move(corpus));
    auto out_path = config.out_dir / "corpus_extracted.jsonl";
    check_overwrite(config, out_path);
    save_corpus(out_path, corpus);
}

void cmd_embed_cache(const RunConfig& config) {
    ensure_out_dir(config);
    Corpus corpus = load_corpus(config.corpus_path);
    corpus = extract_missing(config, std::move(corpus));
    auto embedder = make_embedder(config);
    size_t count = 0;
    for (const auto& s : corpus) {
        count += embed_cue_set(*s.candidate_cues, *embedder).size();
        count += embed_cue_set(*s.reference_cues, *embedder).size();
    }
    std::cerr << "embedded " << count << " cue texts\n";
}

MetricReport cmd_score(const RunConfig& config) {
    ensure_out_dir(config);
    Corpus corpus = load_corpus(config.corpus_path);
    if (corpus.empty()) throw DataError("score: empty corpus");
    corpus = extract_missing(config, std::move(corpus));
    auto embedder = make_embedder(config);

    std::map<std::string, SampleScores> per_sample;
    for (const auto& s : corpus) {
        CueEmbeddings emb = embed_cue_set(*s.candidate_cues, *embedder);
        auto ref_emb = embed_cue_set(*s.reference_cues, *embedder);
        emb.insert(ref_emb.begin(), ref_emb.end());
        per_sample[s.id] = score_sample(s, emb);
    }
    MetricReport report = aggregate(per_sample);

    {
        auto out = open_out(config, config.out_dir / "report.json");
        write_report_json(out, report);
    }
    {
        auto out = open_out(config, config.out_dir / "report.txt");
        write_report_table(out, config.corpus_path.stem().string(), report);
    }
    return report;
}

SweepResult cmd_sweep(const RunConfig& config) {
    ensure_out_dir(config);
    Corpus corpus = load_corpus(config.corpus_path);
    auto templates = load_template_dir(config.templates_dir);
    Extractor extractor = make_extractor(config);
    auto embedder = make_embedder(config);
    SweepResult result = run_template_sweep(corpus, templates, extractor,
                                            *embedder, config.jobs);
    {
        auto out = open_out(config, config.out_dir / "sweep.json");
        write_sweep_json(out, result);
    }
    {
        auto out = open_out(config, config.out_dir / "sweep.txt");
        write_sweep_table(out, result);
    }
    return result;
}

std::vector<StylePair> cmd_synth(const RunConfig& config) {
    ensure_out_dir(config);
    CueSet pool = load_cue_pool(config.cue_pool_path);
    auto styles = load_style_templates(config.style_templates_path);
    SynthOptions options;
    options.n_pairs = config.n_pairs;
    options.seed = config.seed;
    options.identical_subsets = config.identical_subsets;
    auto pairs = synthesize_style_pairs(pool, styles, options);
    {
        auto out = open_out(config, config.out_dir / "pairs.jsonl");
        write_pairs_jsonl(out, pairs);
    }
    if (config.compare_pairs) {
        Extractor extractor = make_extractor(config);
        auto embedder = make_embedder(config);
        auto table = compare_metrics_on_pairs(pairs, extractor, *embedder);
        auto out = open_out(config, config.out_dir / "comparison.json");
        write_comparison_json(out, table);
    }
    return pairs;
}

double cmd_losscheck(const std::filesystem::path& fixture,
                     const std::filesystem::path& out_path, double step) {
    std::ifstream in(fixture);
    if (!in) throw DataError("cannot open loss fixture: " + fixture.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded())
        throw DataError("malformed loss fixture: " + fixture.string());

    auto matrix = [&](const char* key, size_t& rows, size_t& cols) {
        std::vector<double> flat;
        rows = j.at(key).size();
        cols = 0;
        for (const auto& row : j.at(key)) {
            if (cols == 0) cols = row.size();
            if (row.size() != cols)
                throw DataError("loss fixture: ragged matrix in " +
                                std::string(key));
            for (const auto& v : row) flat.push_back(v.get<double>());
        }
        return flat;
    };
    size_t n = 0, dim = 0, n2 = 0, dim2 = 0;
    std::vector<double> anchors = matrix("anchors", n, dim);
    std::vector<double> targets = matrix("targets", n2, dim2);
    if (n != n2 || dim != dim2)
        throw DataError("loss fixture: anchors/targets shape mismatch");
    double tau = j.at("tau").get<double>();
    AlignmentBatch batch = AlignmentBatch::make(n, dim, anchors, targets, tau);
    InfoNceResult res = infonce_loss(batch);

    // Check all parameters jointly: anchors, then targets, then tau.
    std::vector<double> x = batch.anchors;
    x.insert(x.end(), batch.targets.begin(), batch.targets.end());
    x.push_back(batch.temperature);
    std::vector<double> grad = res.grad_anchors;
    grad.insert(grad.end(), res.grad_targets.begin(), res.grad_targets.end());
    grad.push_back(res.grad_temperature);
    auto f = [n, dim](std::span<const double> v) {
        std::vector<double> a(v.begin(), v.begin() + n * dim);
        std::vector<double> t(v.begin() + n * dim, v.begin() + 2 * n * dim);
        AlignmentBatch b = AlignmentBatch::make(n, dim, std::move(a),
                                                std::move(t), v.back());
        return infonce_loss(b).loss;
    };
    GradCheckReport report = finite_difference_check(f, x, grad, step);

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw DataError("cannot write " + out_path.string());
    out << json{{"loss", res.loss},
                {"max_relative_error", report.max_relative_error},
                {"parameter_count", report.parameter_count},
                {"step", report.step}}
               .dump(2)
        << "\n";
    return report.max_relative_error;
}

void cmd_report(const std::vector<std::filesystem::path>& report_files,
                std::ostream& out) {
    if (report_files.empty()) throw UsageError("report: no input files");
    std::vector<std::pair<std::string, MetricReport>> reports;
    for (const auto& path : report_files) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open report: " + path.string());
        reports.emplace_back(path.stem().string(), read_report_json(in));
    }
    write_comparison_table(out, reports);
}

}  // namespace emocue
