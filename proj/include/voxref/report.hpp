#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "embedding.hpp"
#include "metrics.hpp"
#include "protocols.hpp"
#include "similarity.hpp"
#include "version.hpp"

namespace voxref {

using Json = nlohmann::ordered_json;

/// Every knob a CLI run can set, with its default. Echoed into each report.
struct RunConfig {
    std::string command;
    std::vector<std::string> inputs;
    CostModel cost;
    double threshold = kDefaultThreshold;
    std::vector<std::size_t> sizes{1, 2, 5, 10, 25, 100};
    std::size_t repetitions = 10;
    std::uint64_t seed = 0;
    std::string output_dir = "voxref-out";
    std::size_t bins = kDefaultBins;
    std::size_t reference_size = 0;  // 0: full pool
    double grid_lo = 0.0;
    double grid_hi = 1.0;
    std::size_t grid_steps = 200;
    std::size_t threads = 0;  // runtime only, not part of the echoed config
};

/// Non-finite values (the +-inf ROC sentinels) become null.
inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json(const CostModel& c) {
    return Json{{"c_miss", c.c_miss},
                {"c_fa", c.c_fa},
                {"p_target", c.p_target},
                {"p_spoof", c.p_spoof},
                {"is_default", c.is_default()},
                {"defaults_are_convention_not_paper", true}};
}

inline Json to_json(const RunConfig& c) {
    return Json{{"command", c.command},
                {"inputs", c.inputs},
                {"cost_model", to_json(c.cost)},
                {"threshold", c.threshold},
                {"sizes", c.sizes},
                {"repetitions", c.repetitions},
                {"seed", c.seed},
                {"bins", c.bins},
                {"reference_size", c.reference_size},
                {"grid", Json{{"lo", c.grid_lo}, {"hi", c.grid_hi}, {"steps", c.grid_steps}}}};
}

inline Json to_json(const MetricsSummary& m) {
    Json datasets = Json::array();
    for (const auto& d : m.datasets) {
        datasets.push_back(Json{{"dataset", d.dataset},
                                {"eer", d.eer},
                                {"min_tdcf", d.min_tdcf},
                                {"auc", d.auc},
                                {"eer_threshold", number_or_null(d.eer_threshold)},
                                {"n_real", d.n_real},
                                {"n_fake", d.n_fake}});
    }
    Json aggregate{{"mean_eer", m.mean_eer}, {"mean_tdcf", m.mean_tdcf}, {"mean_auc", m.mean_auc}};
    if (m.auc_sigma) aggregate["auc_sigma"] = *m.auc_sigma;
    return Json{{"datasets", std::move(datasets)}, {"aggregate", std::move(aggregate)}};
}

inline Json to_json(const Verdict& v) {
    return Json{{"decision", std::string(to_string(v.decision))},
                {"statistic", v.statistic.value},
                {"argmax_reference", v.statistic.argmax_reference},
                {"threshold", v.threshold}};
}

inline Json to_json(const SweepResult& s) {
    Json cells = Json::array();
    for (const auto& c : s.cells)
        cells.push_back(Json{{"size", c.size}, {"mean_auc", c.mean_auc}, {"std_auc", c.std_auc}, {"aucs", c.aucs}});
    return Json{{"repetitions", s.repetitions}, {"seed", s.seed}, {"cells", std::move(cells)}};
}

inline Json to_json(const ScoreHistogram& h) {
    return Json{{"reference_size", h.reference_size},
                {"bin_edges", h.bin_edges},
                {"real_counts", h.real_counts},
                {"fake_counts", h.fake_counts},
                {"overlap", h.overlap},
                {"real_mean", h.real_mean},
                {"fake_mean", h.fake_mean}};
}

inline Json to_json(const ThresholdSweep& t) {
    Json pts = Json::array();
    for (const auto& p : t.points) pts.push_back(Json{{"threshold", p.threshold}, {"accuracy", p.accuracy}});
    return Json{{"best_threshold", t.best_threshold},
                {"best_accuracy", t.best_accuracy},
                {"fixed_threshold", t.fixed_threshold},
                {"fixed_accuracy", t.fixed_accuracy},
                {"fixed_within_2pct", t.fixed_within_tolerance},
                {"points", std::move(pts)}};
}

inline Json store_info(const EmbeddingStore& store) {
    return Json{{"model_name", store.model_name()}, {"dim", store.dim()}, {"records", store.size()}};
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Report envelope. Everything that may legitimately differ between two runs
/// with the same seed (wall clock, worker count, output location) lives under "runtime".
inline Json make_report(const RunConfig& cfg, Json result, Json store = nullptr) {
    Json r{{"engine", Json{{"name", kEngineName}, {"version", kEngineVersion}}},
           {"command", cfg.command},
           {"config", to_json(cfg)}};
    if (!store.is_null()) r["store"] = std::move(store);
    r["result"] = std::move(result);
    r["runtime"] = Json{{"generated_at", utc_timestamp()},
                        {"threads", cfg.threads == 0 ? default_threads() : cfg.threads},
                        {"output_dir", cfg.output_dir}};
    return r;
}

/// Copy of a report without the "runtime" block, for reproducibility checks.
inline Json strip_runtime(Json report) {
    report.erase("runtime");
    return report;
}

/// One JSON line per trial. Scores always print 17 significant digits.
inline std::string to_jsonl_line(const TrialScore& t) {
    char score[40];
    std::snprintf(score, sizeof(score), "%#.17g", t.score);
    std::string out = "{\"utterance_id\":";
    out += Json(t.utterance_id).dump();
    out += ",\"claimed_identity\":";
    out += Json(t.claimed_identity).dump();
    out += ",\"score\":";
    out += score;
    out += ",\"argmax_reference\":";
    out += Json(t.argmax_reference).dump();
    out += ",\"label\":\"";
    out += to_string(t.label);
    out += "\"}";
    return out;
}

inline void write_trials_jsonl(std::ostream& out, std::span<const TrialScore> trials) {
    for (const auto& t : trials) out << to_jsonl_line(t) << '\n';
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& s) {
    out << "size,mean_auc,std_auc\n";
    char line[96];
    for (const auto& c : s.cells) {
        std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g\n", c.size, c.mean_auc, c.std_auc);
        out << line;
    }
}

inline void write_threshold_csv(std::ostream& out, const ThresholdSweep& t) {
    out << "threshold,accuracy\n";
    char line[96];
    for (const auto& p : t.points) {
        std::snprintf(line, sizeof(line), "%.17g,%.17g\n", p.threshold, p.accuracy);
        out << line;
    }
}

inline void write_histogram_csv(std::ostream& out, const ScoreHistogram& h) {
    out << "bin_lo,bin_hi,real_count,fake_count\n";
    char line[128];
    for (std::size_t i = 0; i + 1 < h.bin_edges.size(); ++i) {
        std::snprintf(line, sizeof(line), "%.17g,%.17g,%zu,%zu\n", h.bin_edges[i], h.bin_edges[i + 1],
                      h.real_counts[i], h.fake_counts[i]);
        out << line;
    }
}

}  // namespace voxref
