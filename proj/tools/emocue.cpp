#include <iostream>

#include "CLI11.hpp"
#include "emocue/emocue360.hpp"
#include "emocue/pipeline.hpp"

using namespace emocue;

int main(int argc, char** argv) {
    CLI::App app{"EmoCue-360 cue-level evaluation toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Config file (INI/TOML)");

    RunConfig config;
    std::string embedder_kind = "test";
    size_t embed_dim = 256;
    std::string embed_model = "det-test";

    // Config precedence: CLI flags > environment variables > config file.
    app.add_option("--corpus", config.corpus_path, "Corpus JSONL path")
        ->envname("EMOCUE_CORPUS");
    app.add_option("--templates", config.templates_dir,
                   "Prompt template directory (*.txt)")
        ->envname("EMOCUE_TEMPLATES");
    app.add_option("--style-templates", config.style_templates_path,
                   "Style template JSON for pair synthesis")
        ->envname("EMOCUE_STYLE_TEMPLATES");
    app.add_option("--cue-pool", config.cue_pool_path,
                   "Cue pool JSON for pair synthesis")
        ->envname("EMOCUE_CUE_POOL");
    app.add_option("--extractor", config.extractor_kind,
                   "Extractor: structured | llm");
    app.add_option("--embedder", embedder_kind, "Embedder: remote | test");
    app.add_option("--embed-dim", embed_dim, "Embedding dimension");
    app.add_option("--embed-model", embed_model, "Remote embedding model id");
    app.add_option("--llm-base-url", config.llm_base_url,
                   "Chat-completion endpoint base URL")
        ->envname("EMOCUE_LLM_BASE_URL");
    app.add_option("--llm-model", config.llm_model, "Chat model id")
        ->envname("EMOCUE_LLM_MODEL");
    app.add_option("--embed-base-url", config.embed_base_url,
                   "Embedding endpoint base URL")
        ->envname("EMOCUE_EMBED_BASE_URL");
    app.add_option("--embed-cache", config.embed_cache_path,
                   "Embedding cache file");
    app.add_option("--extract-cache", config.extract_cache_path,
                   "Extraction cache file");
    app.add_option("--seed", config.seed, "Seed for all randomized steps")
        ->envname("EMOCUE_SEED");
    app.add_option("--jobs", config.jobs, "Concurrency bound")
        ->envname("EMOCUE_JOBS");
    app.add_option("--out", config.out_dir, "Output directory");
    app.add_flag("--force", config.force, "Overwrite existing outputs");

    auto* sc_extract =
        app.add_subcommand("extract", "Extract cues for a corpus");
    auto* sc_embed =
        app.add_subcommand("embed-cache", "Warm the embedding cache");
    auto* sc_score =
        app.add_subcommand("score", "Score a corpus with EmoCue-360");
    auto* sc_sweep =
        app.add_subcommand("sweep", "Five-template robustness sweep");
    auto* sc_synth =
        app.add_subcommand("synth", "Synthesize style-divergent pairs");
    auto* sc_losscheck =
        app.add_subcommand("losscheck", "Gradient-check a loss fixture");
    auto* sc_report =
        app.add_subcommand("report", "Render a multi-report comparison");

    // Global flags may appear after the subcommand name.
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    sc_synth->add_option("--pairs", config.n_pairs, "Number of pairs");
    bool distinct_subsets = false;
    sc_synth->add_flag("--distinct-subsets", distinct_subsets,
                       "Overlapping-but-distinct cue subsets per pair");
    sc_synth->add_flag("--compare", config.compare_pairs,
                       "Also emit the metric comparison table");

    std::string loss_fixture;
    std::string loss_out = "losscheck.json";
    double loss_step = 1e-5;
    sc_losscheck->add_option("fixture", loss_fixture, "Loss fixture JSON")
        ->required();
    sc_losscheck->add_option("--report-out", loss_out, "Report output path");
    sc_losscheck->add_option("--step", loss_step, "Finite-difference step");

    std::vector<std::string> report_inputs;
    sc_report->add_option("reports", report_inputs, "report.json files")
        ->required();

    CLI11_PARSE(app, argc, argv);

    config.embedder.kind = embedder_kind == "remote"
                               ? EmbedderSpec::Kind::remote
                               : EmbedderSpec::Kind::deterministic_test;
    config.embedder.model_id = embed_model;
    config.embedder.dim = embed_dim;
    config.identical_subsets = !distinct_subsets;
    if (embedder_kind != "remote" && embedder_kind != "test") {
        std::cerr << "error: --embedder must be remote or test\n";
        return 1;
    }

    try {
        if (sc_extract->parsed()) {
            cmd_extract(config);
        } else if (sc_embed->parsed()) {
            cmd_embed_cache(config);
        } else if (sc_score->parsed()) {
            MetricReport report = cmd_score(config);
            write_report_table(std::cout, config.corpus_path.stem().string(),
                               report);
        } else if (sc_sweep->parsed()) {
            SweepResult result = cmd_sweep(config);
            write_sweep_table(std::cout, result);
        } else if (sc_synth->parsed()) {
            auto pairs = cmd_synth(config);
            std::cerr << "wrote " << pairs.size() << " pairs\n";
        } else if (sc_losscheck->parsed()) {
            double err = cmd_losscheck(loss_fixture, loss_out, loss_step);
            std::cout << "max relative error: " << err << "\n";
        } else if (sc_report->parsed()) {
            std::vector<std::filesystem::path> paths(report_inputs.begin(),
                                                     report_inputs.end());
            cmd_report(paths, std::cout);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const RemoteError& e) {
        std::cerr << "remote service error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
