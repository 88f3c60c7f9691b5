#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "emocue/emocue360.hpp"
#include "emocue/errors.hpp"
#include "emocue/pipeline.hpp"
#include "json.hpp"

using namespace emocue;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("emocue-pipe-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

EvalSample make_sample(std::string id, CueSet cand, CueSet ref) {
    EvalSample s;
    s.id = std::move(id);
    s.supported_dimensions = {Dimension::visual, Dimension::audio,
                              Dimension::global};
    s.candidate_cues = std::move(cand);
    s.reference_cues = std::move(ref);
    return s;
}

RunConfig base_config(const TempDir& dir) {
    RunConfig config;
    config.out_dir = dir.path / "out";
    config.corpus_path = dir.path / "corpus.jsonl";
    config.embedder.dim = 64;
    return config;
}

}  // namespace

TEST_CASE("cmd_score: exact cue match yields mean 100") {
    TempDir dir;
    auto config = base_config(dir);
    Corpus corpus;
    auto cues =
        CueSet::make({"furrowed brows"}, {"shaky voice"}, {"overall sadness"});
    corpus.push_back(make_sample("s1", cues, cues));
    save_corpus(config.corpus_path, corpus);

    MetricReport report = cmd_score(config);
    CHECK(report.mean == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(fs::exists(config.out_dir / "report.json"));
    CHECK(fs::exists(config.out_dir / "report.txt"));

    std::ifstream in(config.out_dir / "report.json");
    MetricReport back = read_report_json(in);
    CHECK(back.mean == doctest::Approx(report.mean).epsilon(1e-12));
}

TEST_CASE("cmd_score runs are byte-identical") {
    TempDir dir;
    auto config = base_config(dir);
    Corpus corpus;
    corpus.push_back(make_sample(
        "s1", CueSet::make({"furrowed brows", "tight lips"}, {"low tone"}, {}),
        CueSet::make({"furrowed brows"}, {"monotone voice"},
                     {"overall tension"})));
    corpus.push_back(make_sample(
        "s2", CueSet::make({}, {"rapid speech"}, {"agitated mood"}),
        CueSet::make({"wide eyes"}, {"rapid speech"}, {"agitated mood"})));
    save_corpus(config.corpus_path, corpus);

    cmd_score(config);
    std::string json1 = slurp(config.out_dir / "report.json");
    std::string txt1 = slurp(config.out_dir / "report.txt");
    config.force = true;
    cmd_score(config);
    CHECK(slurp(config.out_dir / "report.json") == json1);
    CHECK(slurp(config.out_dir / "report.txt") == txt1);
    CHECK(!json1.empty());
}

TEST_CASE("cmd_score refuses to overwrite without force") {
    TempDir dir;
    auto config = base_config(dir);
    Corpus corpus;
    auto cues = CueSet::make({"x"}, {}, {});
    corpus.push_back(make_sample("s1", cues, cues));
    save_corpus(config.corpus_path, corpus);
    cmd_score(config);
    CHECK_THROWS_WITH_AS(cmd_score(config),
                         doctest::Contains("refusing to overwrite"),
                         UsageError);
}

TEST_CASE("cmd_score errors name the missing corpus path") {
    TempDir dir;
    auto config = base_config(dir);
    config.corpus_path = dir.path / "nope.jsonl";
    CHECK_THROWS_WITH_AS(cmd_score(config), doctest::Contains("nope.jsonl"),
                         DataError);
}

TEST_CASE("cmd_extract fills missing cues via the structured extractor") {
    TempDir dir;
    auto config = base_config(dir);
    Corpus corpus;
    EvalSample s;
    s.id = "s1";
    s.supported_dimensions = {Dimension::visual, Dimension::global};
    s.candidate_text = "[VISUAL] furrowed brows; tight lips [GLOBAL] sad mood";
    s.reference_text = "[VISUAL] furrowed brows [GLOBAL] sad mood";
    corpus.push_back(s);
    save_corpus(config.corpus_path, corpus);

    cmd_extract(config);
    Corpus out = load_corpus(config.out_dir / "corpus_extracted.jsonl");
    REQUIRE(out.size() == 1);
    REQUIRE(out[0].candidate_cues.has_value());
    CHECK(out[0].candidate_cues->visual.size() == 2);
    CHECK(out[0].candidate_cues->global.size() == 1);
    CHECK(out[0].reference_cues->visual.size() == 1);
}

TEST_CASE("cmd_synth writes deterministic pairs from the shipped config") {
    TempDir dir;
    auto config = base_config(dir);
    fs::path src = PROJECT_SOURCE_DIR_PATH;
    config.style_templates_path = src / "config" / "style_templates.json";
    config.cue_pool_path = src / "config" / "cue_pool.json";
    config.n_pairs = 10;
    config.compare_pairs = true;

    auto pairs = cmd_synth(config);
    CHECK(pairs.size() == 10);
    CHECK(fs::exists(config.out_dir / "pairs.jsonl"));
    CHECK(fs::exists(config.out_dir / "comparison.json"));
    std::string first = slurp(config.out_dir / "pairs.jsonl");

    config.force = true;
    cmd_synth(config);
    CHECK(slurp(config.out_dir / "pairs.jsonl") == first);

    auto comparison =
        nlohmann::json::parse(slurp(config.out_dir / "comparison.json"));
    CHECK(comparison.at("mean").at("emocue_f1").get<double>() ==
          doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cmd_losscheck verifies gradients on a fixture") {
    TempDir dir;
    fs::path fixture = dir.path / "loss.json";
    {
        std::ofstream out(fixture);
        out << R"({"anchors": [[0.2, -0.5, 0.8], [1.0, 0.3, -0.2]],
                   "targets": [[0.1, -0.4, 0.9], [0.7, 0.6, 0.1]],
                   "tau": 0.25})";
    }
    fs::path report = dir.path / "gradcheck.json";
    double max_err = cmd_losscheck(fixture, report, 1e-5);
    CHECK(max_err < 1e-4);
    auto j = nlohmann::json::parse(slurp(report));
    CHECK(j.at("max_relative_error").get<double>() == max_err);
    CHECK(j.at("parameter_count").get<size_t>() == 13);
    CHECK(j.at("loss").get<double>() >= 0.0);

    CHECK_THROWS_AS(cmd_losscheck(dir.path / "missing.json", report, 1e-5),
                    DataError);
    {
        std::ofstream out(fixture);
        out << R"({"anchors": [[1, 2], [3]], "targets": [[1, 2], [3, 4]],
                   "tau": 0.5})";
    }
    CHECK_THROWS_WITH_AS(cmd_losscheck(fixture, report, 1e-5),
                         doctest::Contains("ragged"), DataError);
}

TEST_CASE("cmd_report renders a comparison table from report files") {
    TempDir dir;
    auto config = base_config(dir);
    Corpus corpus;
    auto cues = CueSet::make({"a"}, {"b"}, {"c"});
    corpus.push_back(make_sample("s1", cues, cues));
    save_corpus(config.corpus_path, corpus);
    cmd_score(config);

    auto second = config.out_dir / "second.json";
    fs::copy_file(config.out_dir / "report.json", second);
    std::ostringstream out;
    cmd_report({config.out_dir / "report.json", second}, out);
    CHECK(out.str().find("report") != std::string::npos);
    CHECK(out.str().find("second") != std::string::npos);
    CHECK(out.str().find('*') != std::string::npos);

    CHECK_THROWS_AS(cmd_report({}, out), UsageError);
    CHECK_THROWS_AS(cmd_report({dir.path / "absent.json"}, out), DataError);
}

TEST_CASE("factory validation errors") {
    TempDir dir;
    auto config = base_config(dir);
    config.extractor_kind = "banana";
    CHECK_THROWS_AS(make_extractor(config), UsageError);
    config.extractor_kind = "llm";
    config.llm_base_url.clear();
    CHECK_THROWS_AS(make_extractor(config), UsageError);

    config.embedder.kind = EmbedderSpec::Kind::remote;
    config.embed_base_url.clear();
    CHECK_THROWS_AS(make_embedder(config), UsageError);
}
