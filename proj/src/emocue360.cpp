#include "emocue/emocue360.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace emocue {

using nlohmann::json;

double sim_phi(const EmbeddingVector& cue,
               std::span<const EmbeddingVector> set) {
    if (set.empty()) throw DataError("sim_phi: empty cue set");
    double best = -1.0;
    for (const auto& member : set) best = std::max(best, cosine(cue, member));
    // Sub-orthogonal matches carry no evidential weight.
    return std::max(best, 0.0);
}

double precision(std::span<const EmbeddingVector> ca_vecs,
                 std::span<const EmbeddingVector> gt_vecs) {
    if (ca_vecs.empty() || gt_vecs.empty())
        throw DataError("precision: empty cue list");
    double acc = 0.0;
    for (const auto& cue : ca_vecs) acc += sim_phi(cue, gt_vecs);
    return acc / static_cast<double>(ca_vecs.size());
}

double recall(std::span<const EmbeddingVector> ca_vecs,
              std::span<const EmbeddingVector> gt_vecs) {
    return precision(gt_vecs, ca_vecs);
}

double f1(double p, double r) {
    if (p < 0.0 || p > 1.0 || r < 0.0 || r > 1.0)
        throw DataError("f1: inputs must be in [0,1]");
    if (p + r == 0.0) return 0.0;
    return 2.0 * p * r / (p + r);
}

namespace {

std::vector<EmbeddingVector> resolve(const std::vector<AtomicCue>& cues,
                                     const CueEmbeddings& embeddings) {
    std::vector<EmbeddingVector> out;
    out.reserve(cues.size());
    for (const auto& c : cues) {
        auto it = embeddings.find(c.text);
        if (it == embeddings.end())
            throw DataError("missing embedding for cue '" + c.text + "'");
        out.push_back(it->second);
    }
    return out;
}

}  // namespace

SampleScores score_sample(const EvalSample& sample,
                          const CueEmbeddings& embeddings) {
    if (!sample.candidate_cues || !sample.reference_cues)
        throw DataError("score_sample: sample '" + sample.id +
                        "' lacks extracted cues");
    SampleScores out;
    for (Dimension d : kDimensions) {
        if (!sample.supported_dimensions.count(d)) {
            out[d] = std::nullopt;
            continue;
        }
        const auto& ca = sample.candidate_cues->dim(d);
        const auto& gt = sample.reference_cues->dim(d);
        DimensionScore s;
        s.candidate_count = ca.size();
        s.reference_count = gt.size();
        if (ca.empty() && gt.empty()) {
            s.precision = s.recall = s.f1 = 1.0;
            s.vacuous = true;
        } else if (ca.empty() || gt.empty()) {
            s.precision = s.recall = s.f1 = 0.0;
        } else {
            auto ca_vecs = resolve(ca, embeddings);
            auto gt_vecs = resolve(gt, embeddings);
            s.precision = precision(ca_vecs, gt_vecs);
            s.recall = recall(ca_vecs, gt_vecs);
            s.f1 = f1(s.precision, s.recall);
        }
        out[d] = s;
    }
    return out;
}

MetricReport aggregate(
    const std::map<std::string, SampleScores>& per_sample) {
    if (per_sample.empty()) throw DataError("aggregate: no samples");
    MetricReport report;
    report.per_sample = per_sample;
    std::vector<double> mean_inputs;
    bool any_dim = false;
    for (Dimension d : kDimensions) {
        std::vector<double> ps, rs;
        size_t ca_count = 0, gt_count = 0;
        for (const auto& [id, scores] : per_sample) {
            auto it = scores.find(d);
            if (it == scores.end() || !it->second) continue;
            const DimensionScore& s = *it->second;
            if (s.vacuous) continue;
            ps.push_back(s.precision);
            rs.push_back(s.recall);
            ca_count += s.candidate_count;
            gt_count += s.reference_count;
        }
        if (ps.empty()) {
            report.corpus[d] = std::nullopt;
            continue;
        }
        any_dim = true;
        DimensionScore c;
        c.precision =
            std::accumulate(ps.begin(), ps.end(), 0.0) / double(ps.size());
        c.recall =
            std::accumulate(rs.begin(), rs.end(), 0.0) / double(rs.size());
        c.f1 = f1(c.precision, c.recall);
        c.candidate_count = ca_count;
        c.reference_count = gt_count;
        report.corpus[d] = c;
        mean_inputs.push_back(c.precision * 100.0);
        mean_inputs.push_back(c.recall * 100.0);
    }
    if (!any_dim)
        throw DataError("aggregate: every dimension is null or vacuous");
    report.mean = table_mean(mean_inputs);
    return report;
}

double table_mean(std::span<const double> pr_percent) {
    if (pr_percent.empty()) throw DataError("table_mean: no P/R values");
    double acc = 0.0;
    for (double v : pr_percent) acc += v;
    return acc / static_cast<double>(pr_percent.size());
}

namespace {

json score_to_json(const std::optional<DimensionScore>& s) {
    if (!s) return nullptr;
    return json{{"precision", s->precision},
                {"recall", s->recall},
                {"f1", s->f1},
                {"candidate_count", s->candidate_count},
                {"reference_count", s->reference_count},
                {"vacuous", s->vacuous}};
}

std::optional<DimensionScore> score_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    DimensionScore s;
    s.precision = j.at("precision").get<double>();
    s.recall = j.at("recall").get<double>();
    s.f1 = j.at("f1").get<double>();
    s.candidate_count = j.at("candidate_count").get<size_t>();
    s.reference_count = j.at("reference_count").get<size_t>();
    s.vacuous = j.at("vacuous").get<bool>();
    return s;
}

json scores_to_json(const SampleScores& scores) {
    json out = json::object();
    for (Dimension d : kDimensions) {
        auto it = scores.find(d);
        out[to_string(d)] =
            it == scores.end() ? json(nullptr) : score_to_json(it->second);
    }
    return out;
}

SampleScores scores_from_json(const json& j) {
    SampleScores out;
    for (Dimension d : kDimensions)
        out[d] = score_from_json(j.at(to_string(d)));
    return out;
}

// One decimal, 0-100 scale, "-" when absent.
std::string cell(const std::optional<DimensionScore>& s,
                 double DimensionScore::*field) {
    if (!s) return "-";
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(1)
       << round_half_even((*s).*field * 100.0, 1);
    return ss.str();
}

}  // namespace

void write_report_json(std::ostream& out, const MetricReport& report) {
    json per_sample = json::object();
    for (const auto& [id, scores] : report.per_sample)
        per_sample[id] = scores_to_json(scores);
    json j{{"schema_version", 1},
           {"per_sample", per_sample},
           {"corpus", scores_to_json(report.corpus)},
           {"mean", report.mean}};
    out << j.dump(2) << "\n";
}

MetricReport read_report_json(std::istream& in) {
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw DataError("malformed report JSON");
    if (!j.contains("schema_version") ||
        j.at("schema_version").get<int>() != 1)
        throw DataError("report schema version mismatch (expected 1)");
    MetricReport report;
    for (const auto& [id, scores] : j.at("per_sample").items())
        report.per_sample[id] = scores_from_json(scores);
    report.corpus = scores_from_json(j.at("corpus"));
    report.mean = j.at("mean").get<double>();
    return report;
}

void write_report_table(std::ostream& out, const std::string& name,
                        const MetricReport& report) {
    write_comparison_table(out, {{name, report}});
}

void write_comparison_table(
    std::ostream& out,
    const std::vector<std::pair<std::string, MetricReport>>& reports) {
    if (reports.empty()) throw DataError("comparison table: no reports");
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header = {"Model",  "Vis-P", "Vis-R", "Aud-P",
                                       "Aud-R",  "Glo-P", "Glo-R", "Mean"};
    // Column-wise best markers, computed on the rounded rendered values.
    size_t ncols = header.size();
    std::vector<double> best(ncols, -1.0);
    std::vector<std::vector<double>> numeric(reports.size(),
                                             std::vector<double>(ncols, -1.0));
    for (size_t r = 0; r < reports.size(); ++r) {
        const MetricReport& rep = reports[r].second;
        std::vector<std::string> row = {reports[r].first};
        size_t col = 1;
        for (Dimension d : kDimensions) {
            auto it = rep.corpus.find(d);
            std::optional<DimensionScore> s =
                it == rep.corpus.end() ? std::nullopt : it->second;
            row.push_back(cell(s, &DimensionScore::precision));
            row.push_back(cell(s, &DimensionScore::recall));
            if (s) {
                numeric[r][col] = s->precision;
                numeric[r][col + 1] = s->recall;
            }
            col += 2;
        }
        std::ostringstream ms;
        ms << std::fixed << std::setprecision(1)
           << round_half_even(rep.mean, 1);
        row.push_back(ms.str());
        numeric[r][7] = rep.mean;
        rows.push_back(std::move(row));
    }
    for (size_t c = 1; c < ncols; ++c)
        for (size_t r = 0; r < reports.size(); ++r)
            best[c] = std::max(best[c], numeric[r][c]);
    if (reports.size() > 1) {
        for (size_t r = 0; r < reports.size(); ++r)
            for (size_t c = 1; c < ncols; ++c)
                if (numeric[r][c] >= 0.0 && numeric[r][c] == best[c])
                    rows[r][c] += "*";
    }
    std::vector<size_t> width(ncols);
    for (size_t c = 0; c < ncols; ++c) {
        width[c] = header[c].size();
        for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
    }
    auto emit = [&](const std::vector<std::string>& row) {
        for (size_t c = 0; c < ncols; ++c) {
            out << std::setw(static_cast<int>(width[c])) << row[c];
            out << (c + 1 == ncols ? "\n" : "  ");
        }
    };
    emit(header);
    for (const auto& row : rows) emit(row);
}

}  // namespace emocue
