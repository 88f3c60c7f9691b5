#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "emocue/embed.hpp"
#include "emocue/errors.hpp"
#include "emocue/harness.hpp"

using namespace emocue;

namespace {

std::vector<PromptTemplate> five_templates() {
    std::vector<PromptTemplate> out;
    for (int i = 1; i <= 5; ++i)
        out.push_back(PromptTemplate::make(
            "t" + std::to_string(i),
            "variant " + std::to_string(i) + ": {description}"));
    return out;
}

EvalSample sample_all_dims(std::string id) {
    EvalSample s;
    s.id = std::move(id);
    s.supported_dimensions = {Dimension::visual, Dimension::audio,
                              Dimension::global};
    return s;
}

std::vector<StyleTemplate> style_templates() {
    return {
        {"plain", "[VISUAL] {visual} [AUDIO] {audio} [GLOBAL] {global}"},
        {"chatty",
         "observed in the clip as follows. [VISUAL] {visual} [AUDIO] "
         "{audio} [GLOBAL] {global}"},
        {"terse", "cues: [VISUAL] {visual} [AUDIO] {audio} [GLOBAL] {global}"},
    };
}

CueSet small_pool() {
    return CueSet::make({"furrowed brows", "downcast eyes", "clenched jaw"},
                        {"trembling voice", "long pauses"},
                        {"overall sadness", "withdrawn mood"});
}

}  // namespace

TEST_CASE("template-independent extractor gives exactly zero dispersion") {
    Corpus corpus;
    auto s = sample_all_dims("s1");
    s.candidate_text =
        "[VISUAL] furrowed brows [AUDIO] low tone [GLOBAL] sadness";
    s.reference_text =
        "[VISUAL] raised brows; wide eyes [AUDIO] low tone [GLOBAL] sadness";
    corpus.push_back(s);
    auto s2 = sample_all_dims("s2");
    s2.candidate_text = "[VISUAL] tight lips [GLOBAL] tense mood";
    s2.reference_text = "[VISUAL] tight lips [GLOBAL] calm mood";
    corpus.push_back(s2);

    DeterministicEmbedder embedder(64);
    auto templates = five_templates();
    auto result = run_template_sweep(corpus, templates,
                                     structured_extractor(), embedder);
    REQUIRE(result.per_template.size() == 5);
    for (const auto& [dim, stats] : result.dispersion) {
        CHECK(stats.p_std == 0.0);
        CHECK(stats.r_std == 0.0);
        CHECK(stats.f1_std == 0.0);
        CHECK(stats.p_range == 0.0);
        CHECK(stats.r_range == 0.0);
        CHECK(stats.f1_range == 0.0);
    }
    CHECK(result.dispersion.count(Dimension::visual) == 1);
    CHECK(result.dispersion.count(Dimension::global) == 1);
}

TEST_CASE("engineered five-point sweep: range 0.04, std 0.01414") {
    // Template-sensitive stub extractor: the candidate cue name carries the
    // template id; the fixture embedder places cue t_k at cosine
    // 0.40 + 0.01 k from the single reference cue.
    Corpus corpus;
    auto s = sample_all_dims("only");
    s.supported_dimensions = {Dimension::visual};
    s.candidate_text = "cand-desc";
    s.reference_text = "ref-desc";
    corpus.push_back(s);

    std::map<std::string, EmbeddingVector> table;
    table["ref"] = EmbeddingVector{{1.0, 0.0}};
    for (int k = 0; k < 5; ++k) {
        double c = 0.40 + 0.01 * k;
        table["cand t" + std::to_string(k + 1)] =
            EmbeddingVector{{c, std::sqrt(1.0 - c * c)}};
    }
    FixtureEmbedder embedder(table, 2);

    Extractor stub = [](const std::string& description,
                        const PromptTemplate& tmpl) {
        if (description == "ref-desc") return CueSet::make({"ref"}, {}, {});
        return CueSet::make({"cand " + tmpl.id}, {}, {});
    };

    auto templates = five_templates();
    auto result = run_template_sweep(corpus, templates, stub, embedder);
    REQUIRE(result.per_template.size() == 5);
    for (int k = 0; k < 5; ++k) {
        const auto& score = result.per_template.at("t" + std::to_string(k + 1))
                                .at(Dimension::visual);
        CHECK(score.precision ==
              doctest::Approx(0.40 + 0.01 * k).epsilon(1e-12));
    }
    const auto& d = result.dispersion.at(Dimension::visual);
    CHECK(d.p_range == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(std::abs(d.p_std - 0.01 * std::sqrt(2.0)) < 1e-6);
    // recall mirrors precision here (one cue per side)
    CHECK(d.r_range == doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("sweep input validation and error context") {
    Corpus corpus;
    auto s = sample_all_dims("s1");
    s.candidate_text = "no markers at all";
    s.reference_text = "[VISUAL] x";
    corpus.push_back(s);
    DeterministicEmbedder embedder(32);
    auto templates = five_templates();

    std::vector<PromptTemplate> four(templates.begin(), templates.end() - 1);
    CHECK_THROWS_AS(run_template_sweep(corpus, four, structured_extractor(),
                                       embedder),
                    DataError);
    CHECK_THROWS_AS(run_template_sweep({}, templates, structured_extractor(),
                                       embedder),
                    DataError);
    // extraction failure names sample and template
    CHECK_THROWS_WITH_AS(
        run_template_sweep(corpus, templates, structured_extractor(),
                           embedder),
        doctest::Contains("'s1'"), DataError);
}

TEST_CASE("sweep is identical under parallel execution") {
    Corpus corpus;
    for (int i = 0; i < 6; ++i) {
        auto s = sample_all_dims("s" + std::to_string(i));
        s.candidate_text = "[VISUAL] brows " + std::to_string(i) +
                           " [GLOBAL] mood " + std::to_string(i % 2);
        s.reference_text = "[VISUAL] brows " + std::to_string(i) +
                           "; extra cue [GLOBAL] mood 0";
        corpus.push_back(s);
    }
    DeterministicEmbedder e1(64), e2(64);
    auto templates = five_templates();
    auto serial = run_template_sweep(corpus, templates,
                                     structured_extractor(), e1, 1);
    auto parallel = run_template_sweep(corpus, templates,
                                       structured_extractor(), e2, 4);
    std::ostringstream a, b;
    write_sweep_json(a, serial);
    write_sweep_json(b, parallel);
    CHECK(a.str() == b.str());
}

TEST_CASE("sweep table renders values scaled by 10^3") {
    SweepResult result;
    DimensionScore score;
    score.precision = 0.5;
    result.per_template["t1"][Dimension::visual] = score;
    DispersionStats stats;
    stats.p_std = 0.001414;
    stats.p_range = 0.004;
    result.dispersion[Dimension::visual] = stats;
    std::ostringstream out;
    write_sweep_table(out, result);
    CHECK(out.str().find("1.414") != std::string::npos);
    CHECK(out.str().find("4.000") != std::string::npos);
}

TEST_CASE("style pair synthesis is deterministic byte-for-byte") {
    SynthOptions options;
    options.n_pairs = 50;
    auto pool = small_pool();
    auto tmpls = style_templates();
    auto a = synthesize_style_pairs(pool, tmpls, options);
    auto b = synthesize_style_pairs(pool, tmpls, options);
    REQUIRE(a.size() == 50);
    std::ostringstream ja, jb;
    write_pairs_jsonl(ja, a);
    write_pairs_jsonl(jb, b);
    CHECK(ja.str() == jb.str());

    SynthOptions other = options;
    other.seed = 7;
    auto c = synthesize_style_pairs(pool, tmpls, other);
    std::ostringstream jc;
    write_pairs_jsonl(jc, c);
    CHECK(ja.str() != jc.str());
}

TEST_CASE("planted cues appear verbatim in both texts") {
    SynthOptions options;
    options.n_pairs = 30;
    auto pairs =
        synthesize_style_pairs(small_pool(), style_templates(), options);
    for (const auto& p : pairs) {
        CHECK(!p.planted_cues.empty());
        for (Dimension d : kDimensions)
            for (const auto& cue : p.planted_cues.dim(d)) {
                CHECK(p.text_a.find(cue.text) != std::string::npos);
                CHECK(p.text_b.find(cue.text) != std::string::npos);
            }
        CHECK(p.text_a != p.text_b);
    }
}

TEST_CASE("non-identical subsets plant only the intersection") {
    SynthOptions options;
    options.n_pairs = 40;
    options.identical_subsets = false;
    auto pairs =
        synthesize_style_pairs(small_pool(), style_templates(), options);
    DeterministicEmbedder embedder(64);
    bool saw_subset_difference = false;
    for (const auto& p : pairs) {
        CueSet a = extract_structured(p.text_a);
        CueSet b = extract_structured(p.text_b);
        if (!(a == b)) saw_subset_difference = true;
        // planted cues must sit inside both extracted sets
        for (Dimension d : kDimensions)
            for (const auto& cue : p.planted_cues.dim(d)) {
                auto contains = [&](const CueSet& cs) {
                    const auto& v = cs.dim(d);
                    return std::find(v.begin(), v.end(), cue) != v.end();
                };
                CHECK(contains(a));
                CHECK(contains(b));
            }
    }
    CHECK(saw_subset_difference);
}

TEST_CASE("pairs JSONL round trip") {
    SynthOptions options;
    options.n_pairs = 5;
    auto pairs =
        synthesize_style_pairs(small_pool(), style_templates(), options);
    std::stringstream buf;
    write_pairs_jsonl(buf, pairs);
    auto back = read_pairs_jsonl(buf);
    REQUIRE(back.size() == pairs.size());
    for (size_t i = 0; i < pairs.size(); ++i) {
        CHECK(back[i].text_a == pairs[i].text_a);
        CHECK(back[i].text_b == pairs[i].text_b);
        CHECK(back[i].planted_cues == pairs[i].planted_cues);
        CHECK(back[i].seed == pairs[i].seed);
    }
    std::stringstream bad("not json\n");
    CHECK_THROWS_WITH_AS(read_pairs_jsonl(bad), doctest::Contains("line 1"),
                         DataError);
}

TEST_CASE("synthesis input validation") {
    SynthOptions options;
    auto tmpls = style_templates();
    CHECK_THROWS_AS(synthesize_style_pairs(CueSet{}, tmpls, options),
                    DataError);
    std::vector<StyleTemplate> one = {tmpls[0]};
    CHECK_THROWS_AS(synthesize_style_pairs(small_pool(), one, options),
                    DataError);
    std::vector<StyleTemplate> no_ph = {{"a", "nothing here"},
                                        {"b", "also nothing"}};
    CHECK_THROWS_WITH_AS(synthesize_style_pairs(small_pool(), no_ph, options),
                         doctest::Contains("'a'"), DataError);
    options.n_pairs = 0;
    CHECK_THROWS_AS(synthesize_style_pairs(small_pool(), tmpls, options),
                    DataError);
}

TEST_CASE("compare_metrics_on_pairs: identity pair scores 1 everywhere") {
    StylePair p;
    p.text_a = "[VISUAL] furrowed brows [GLOBAL] sad mood";
    p.text_b = p.text_a;
    p.planted_cues = CueSet::make({"furrowed brows"}, {}, {"sad mood"});
    std::vector<StylePair> pairs = {p};
    DeterministicEmbedder embedder(64);
    auto table =
        compare_metrics_on_pairs(pairs, structured_extractor(), embedder);
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].bleu1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(table.rows[0].bleu4 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(table.rows[0].emocue_f1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(table.mean.bleu1 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("style-varied pairs keep F1 at 1 while BLEU-4 drops") {
    SynthOptions options;
    options.n_pairs = 50;
    auto pairs =
        synthesize_style_pairs(small_pool(), style_templates(), options);
    DeterministicEmbedder embedder(64);
    auto table =
        compare_metrics_on_pairs(pairs, structured_extractor(), embedder);
    for (const auto& row : table.rows)
        CHECK(std::abs(row.emocue_f1 - 1.0) < 1e-12);
    CHECK(table.mean.bleu4 < table.mean.emocue_f1);
    CHECK_THROWS_AS(compare_metrics_on_pairs({}, structured_extractor(),
                                             embedder),
                    DataError);
}

TEST_CASE("load_style_templates reads the shipped config") {
    auto path = std::filesystem::path(PROJECT_SOURCE_DIR_PATH) / "config" /
                "style_templates.json";
    auto tmpls = load_style_templates(path);
    CHECK(tmpls.size() >= 3);
    CHECK_THROWS_AS(load_style_templates("/nonexistent/styles.json"),
                    DataError);
}
