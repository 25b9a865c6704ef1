#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "embedding.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "similarity.hpp"

namespace voxref {

struct Evaluation {
    std::vector<TrialScore> trials;  // store order
    MetricsSummary summary;
};

/// Every utterance scored against its own identity's full bona-fide pool.
inline std::vector<TrialScore> score_all(const EmbeddingStore& store, std::size_t threads = 0) {
    std::vector<Claim> claims;
    claims.reserve(store.size());
    for (const auto& r : store.records()) claims.push_back({r.utterance_id, r.identity_id});
    auto outcomes = score_trials(store, claims, threads);
    std::vector<TrialScore> trials;
    trials.reserve(outcomes.size());
    for (auto& o : outcomes) {
        if (!o.ok()) throw Error("evaluation aborted: " + o.error);
        trials.push_back(std::move(*o.trial));
    }
    return trials;
}

inline Evaluation evaluate(const EmbeddingStore& store, const CostModel& cost = {},
                           std::size_t threads = 0) {
    auto trials = score_all(store, threads);
    auto summary = summarize(group_by_dataset(trials), cost);
    return {std::move(trials), std::move(summary)};
}

/// Scores every utterance against a random subset of at most `k` references
/// from its identity's pool (the test utterance itself is never a candidate).
/// The draw for each identity is seeded from (seed, k, repetition, identity).
inline std::vector<TrialScore> score_with_reference_size(const EmbeddingStore& store, std::size_t k,
                                                         std::uint64_t seed,
                                                         std::uint64_t repetition = 0,
                                                         std::size_t threads = 0) {
    if (k == 0) throw Error("reference size must be at least 1");

    // One permutation prefix of length k+1 per identity. Taking the first k
    // entries that are not the test utterance gives a uniform k-subset of the
    // pool with the test left out.
    std::map<std::string, std::vector<const UtteranceRecord*>, std::less<>> drawn;
    for (const auto& identity : store.identities()) {
        const ReferenceSet pool = reference_set(store, identity);
        const auto order = seeded_permutation_prefix(
            pool.size(), k + 1, derive_seed(seed, static_cast<std::uint64_t>(k), repetition, identity));
        auto& members = drawn[identity];
        for (std::size_t i : order) members.push_back(pool.members[i]);
    }

    const auto records = store.records();
    std::vector<TrialScore> out(records.size());
    parallel_for(records.size(), threads, [&](std::size_t i) {
        const UtteranceRecord& test = records[i];
        const auto& candidates = drawn.find(test.identity_id)->second;
        ReferenceSet ref{test.identity_id, {}};
        ref.members.reserve(k);
        for (const UtteranceRecord* r : candidates) {
            if (ref.members.size() == k) break;
            if (r != &test) ref.members.push_back(r);
        }
        if (ref.empty())
            throw Error("leave-one-out leaves no reference for '" + test.utterance_id + "'");
        out[i] = score_record(test, ref);
    });
    return out;
}

struct SweepCell {
    std::size_t size = 0;
    std::vector<double> aucs;  // one per repetition
    double mean_auc = 0.0;
    double std_auc = 0.0;  // population
};

struct SweepResult {
    std::vector<SweepCell> cells;  // one per size, ascending
    std::size_t repetitions = 0;
    std::uint64_t seed = 0;
};

inline void validate_sizes(std::span<const std::size_t> sizes) {
    if (sizes.empty()) throw Error("size sequence is empty");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] == 0) throw Error("reference sizes must be positive");
        if (i > 0 && sizes[i] <= sizes[i - 1]) throw Error("reference sizes must be strictly increasing");
    }
}

/// Pooled AUC as a function of reference-set size, over seeded repetitions.
/// Identities whose pool is smaller than k use their whole pool.
inline SweepResult reference_sweep(const EmbeddingStore& store, std::span<const std::size_t> sizes,
                                   std::size_t repetitions, std::uint64_t seed,
                                   std::size_t threads = 0) {
    validate_sizes(sizes);
    if (repetitions == 0) throw Error("repetitions must be at least 1");
    SweepResult res{{}, repetitions, seed};
    for (std::size_t k : sizes) {
        SweepCell cell;
        cell.size = k;
        for (std::size_t r = 0; r < repetitions; ++r)
            cell.aucs.push_back(auc(score_with_reference_size(store, k, seed, r, threads)));
        const double n = static_cast<double>(repetitions);
        cell.mean_auc = std::accumulate(cell.aucs.begin(), cell.aucs.end(), 0.0) / n;
        double ss = 0.0;
        for (double a : cell.aucs) ss += (a - cell.mean_auc) * (a - cell.mean_auc);
        cell.std_auc = std::sqrt(ss / n);
        res.cells.push_back(std::move(cell));
    }
    return res;
}

inline constexpr std::size_t kDefaultBins = 50;

/// Per-class counts over uniform bins on [-1, 1]. Bins are right-open except
/// the last, which also holds 1.0.
struct ScoreHistogram {
    std::vector<double> bin_edges;  // bins + 1 values
    std::vector<std::size_t> real_counts;
    std::vector<std::size_t> fake_counts;
    std::size_t reference_size = 0;
    double overlap = 0.0;  // sum over bins of min(real share, fake share)
    double real_mean = 0.0;
    double fake_mean = 0.0;
};

inline ScoreHistogram histogram(std::span<const TrialScore> trials, std::size_t bins,
                                std::size_t reference_size) {
    if (bins == 0) throw Error("histogram needs at least one bin");
    ScoreHistogram h;
    h.reference_size = reference_size;
    h.bin_edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        h.bin_edges[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(bins);
    h.real_counts.assign(bins, 0);
    h.fake_counts.assign(bins, 0);

    std::size_t nr = 0, nf = 0;
    for (const auto& t : trials) {
        auto it = std::upper_bound(h.bin_edges.begin(), h.bin_edges.end(), t.score);
        std::size_t idx = it == h.bin_edges.begin() ? 0 : static_cast<std::size_t>(it - h.bin_edges.begin()) - 1;
        idx = std::min(idx, bins - 1);
        if (t.label == Label::BonaFide) {
            ++h.real_counts[idx];
            ++nr;
            h.real_mean += t.score;
        } else {
            ++h.fake_counts[idx];
            ++nf;
            h.fake_mean += t.score;
        }
    }
    if (nr) h.real_mean /= static_cast<double>(nr);
    if (nf) h.fake_mean /= static_cast<double>(nf);
    if (nr && nf) {
        for (std::size_t i = 0; i < bins; ++i)
            h.overlap += std::min(static_cast<double>(h.real_counts[i]) / static_cast<double>(nr),
                                  static_cast<double>(h.fake_counts[i]) / static_cast<double>(nf));
    }
    return h;
}

struct ThresholdPoint {
    double threshold;
    double accuracy;
};

struct ThresholdSweep {
    std::vector<ThresholdPoint> points;
    double best_threshold = 0.0;  // lowest grid point of maximal accuracy
    double best_accuracy = 0.0;
    double fixed_threshold = kDefaultThreshold;
    double fixed_accuracy = 0.0;
    bool fixed_within_tolerance = false;  // fixed_accuracy >= best_accuracy - 0.02
};

/// `steps + 1` evenly spaced thresholds on [lo, hi].
inline std::vector<double> uniform_grid(double lo, double hi, std::size_t steps) {
    if (steps == 0) return {lo};
    std::vector<double> g(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps);
    return g;
}

inline std::vector<double> default_threshold_grid() { return uniform_grid(0.0, 1.0, 200); }

inline ThresholdSweep threshold_sweep(std::span<const TrialScore> trials, std::span<const double> grid,
                                      double fixed_threshold = kDefaultThreshold) {
    if (grid.empty()) throw Error("threshold grid is empty");
    if (!std::is_sorted(grid.begin(), grid.end())) throw Error("threshold grid must be sorted");
    const ClassScores s = split_scores(trials);

    ThresholdSweep out;
    out.points.reserve(grid.size());
    std::size_t best = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out.points.push_back({grid[i], accuracy_at(s, grid[i])});
        if (out.points[i].accuracy > out.points[best].accuracy) best = i;
    }
    out.best_threshold = grid[best];
    out.best_accuracy = out.points[best].accuracy;
    out.fixed_threshold = fixed_threshold;
    out.fixed_accuracy = accuracy_at(s, fixed_threshold);
    out.fixed_within_tolerance = out.fixed_accuracy >= out.best_accuracy - 0.02;
    return out;
}

}  // namespace voxref
