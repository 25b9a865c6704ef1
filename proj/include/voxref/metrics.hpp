#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "similarity.hpp"

namespace voxref {

/// Scores split by ground truth. "real" is the bona-fide class.
struct ClassScores {
    std::vector<double> real;
    std::vector<double> fake;
};

inline ClassScores split_scores(std::span<const TrialScore> trials) {
    ClassScores s;
    for (const auto& t : trials) (t.label == Label::BonaFide ? s.real : s.fake).push_back(t.score);
    return s;
}

struct RocPoint {
    double threshold;
    double far;
    double frr;
    std::size_t fake_accepted;  // fake trials with score >= threshold
    std::size_t real_rejected;  // real trials with score < threshold
};

/// Operating points at -inf, every distinct score (ascending) and +inf.
struct RocCurve {
    std::vector<RocPoint> points;
    std::size_t n_real = 0;
    std::size_t n_fake = 0;
};

/// Detection-cost parameters. The defaults are the usual anti-spoofing
/// convention, not values derived from the method itself.
struct CostModel {
    double c_miss = 1.0;
    double c_fa = 10.0;
    double p_target = 0.95;
    double p_spoof = 0.05;

    double miss_weight() const noexcept { return c_miss * p_target; }
    double fa_weight() const noexcept { return c_fa * p_spoof; }
    double normalizer() const noexcept { return std::min(miss_weight(), fa_weight()); }
    bool is_default() const noexcept {
        return c_miss == 1.0 && c_fa == 10.0 && p_target == 0.95 && p_spoof == 0.05;
    }

    void validate() const {
        if (!(c_miss >= 0.0) || !(c_fa >= 0.0) || !std::isfinite(c_miss) || !std::isfinite(c_fa))
            throw Error("cost model: costs must be finite and nonnegative");
        if (!(p_target > 0.0 && p_target < 1.0) || !(p_spoof > 0.0 && p_spoof < 1.0))
            throw Error("cost model: priors must lie in (0, 1)");
        if (std::abs(p_target + p_spoof - 1.0) > 1e-9)
            throw Error("cost model: p_target + p_spoof must equal 1");
        if (!(normalizer() > 0.0)) throw Error("cost model: normalizer min(c_miss*p_target, c_fa*p_spoof) is zero");
    }
};

struct EerResult {
    double eer = 0.0;
    double threshold = 0.0;
};

struct TdcfResult {
    double min_tdcf = 0.0;
    double threshold = 0.0;
};

namespace detail {

inline void require_both_classes(const ClassScores& s) {
    if (s.real.empty() || s.fake.empty())
        throw Error("metric needs at least one real and one fake trial (got " +
                    std::to_string(s.real.size()) + " real, " + std::to_string(s.fake.size()) +
                    " fake)");
}

}  // namespace detail

inline RocCurve roc(const ClassScores& s) {
    detail::require_both_classes(s);
    std::vector<double> real = s.real, fake = s.fake;
    std::sort(real.begin(), real.end());
    std::sort(fake.begin(), fake.end());
    const std::size_t nr = real.size(), nf = fake.size();

    RocCurve c;
    c.n_real = nr;
    c.n_fake = nf;
    constexpr double inf = std::numeric_limits<double>::infinity();
    c.points.push_back({-inf, 1.0, 0.0, nf, 0});

    // Merge walk: at threshold v, real_below = #real < v, fake_below = #fake < v.
    std::size_t ir = 0, jf = 0;
    while (ir < nr || jf < nf) {
        double v;
        if (jf >= nf || (ir < nr && real[ir] <= fake[jf])) v = real[ir];
        else v = fake[jf];
        const std::size_t fake_acc = nf - jf;
        c.points.push_back({v, static_cast<double>(fake_acc) / static_cast<double>(nf),
                            static_cast<double>(ir) / static_cast<double>(nr), fake_acc, ir});
        while (ir < nr && real[ir] == v) ++ir;
        while (jf < nf && fake[jf] == v) ++jf;
    }
    c.points.push_back({inf, 0.0, 1.0, 0, nr});
    return c;
}

/// Mann-Whitney AUC by the rank method with midranks for ties. Ranks are kept
/// doubled so the whole computation stays in integers until the final divide.
inline double auc(const ClassScores& s) {
    detail::require_both_classes(s);
    struct Item {
        double score;
        bool real;
    };
    std::vector<Item> all;
    all.reserve(s.real.size() + s.fake.size());
    for (double v : s.real) all.push_back({v, true});
    for (double v : s.fake) all.push_back({v, false});
    std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.score < b.score; });

    std::uint64_t rank_sum2 = 0;  // 2 * sum of midranks of real items
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        std::uint64_t reals = 0;
        while (j < all.size() && all[j].score == all[i].score) reals += all[j++].real;
        rank_sum2 += reals * static_cast<std::uint64_t>(i + 1 + j);
        i = j;
    }
    const std::uint64_t nr = s.real.size(), nf = s.fake.size();
    const std::uint64_t u2 = rank_sum2 - nr * (nr + 1);
    return static_cast<double>(u2) / static_cast<double>(2 * nr * nf);
}

/// Equal error rate: midpoint of FAR and FRR at the threshold where they are
/// closest. The lowest such threshold is reported when several tie.
inline EerResult eer(const ClassScores& s) {
    const RocCurve c = roc(s);
    const auto nr = static_cast<std::int64_t>(c.n_real), nf = static_cast<std::int64_t>(c.n_fake);
    const RocPoint* best = nullptr;
    std::int64_t best_gap = 0;
    for (const auto& p : c.points) {
        // |FAR - FRR| scaled by nr*nf, exact in integers.
        const std::int64_t gap = std::llabs(static_cast<std::int64_t>(p.fake_accepted) * nr -
                                            static_cast<std::int64_t>(p.real_rejected) * nf);
        if (!best || gap < best_gap) {
            best = &p;
            best_gap = gap;
        }
    }
    return {(best->far + best->frr) / 2.0, best->threshold};
}

/// Normalized minimum detection cost of the countermeasure alone, minimized
/// over every distinct score and both trivial policies.
inline TdcfResult min_tdcf(const ClassScores& s, const CostModel& cost = {}) {
    cost.validate();
    const RocCurve c = roc(s);
    const double norm = cost.normalizer();
    TdcfResult best{std::numeric_limits<double>::infinity(), 0.0};
    for (const auto& p : c.points) {
        const double v = (cost.miss_weight() * p.frr + cost.fa_weight() * p.far) / norm;
        if (v < best.min_tdcf) best = {v, p.threshold};
    }
    return best;
}

/// Fraction of trials whose thresholded verdict matches the label.
inline double accuracy_at(const ClassScores& s, double threshold) {
    const std::size_t n = s.real.size() + s.fake.size();
    if (n == 0) throw Error("accuracy needs at least one trial");
    std::size_t correct = 0;
    for (double v : s.real) correct += v >= threshold;
    for (double v : s.fake) correct += v < threshold;
    return static_cast<double>(correct) / static_cast<double>(n);
}

inline RocCurve roc(std::span<const TrialScore> t) { return roc(split_scores(t)); }
inline double auc(std::span<const TrialScore> t) { return auc(split_scores(t)); }
inline EerResult eer(std::span<const TrialScore> t) { return eer(split_scores(t)); }
inline TdcfResult min_tdcf(std::span<const TrialScore> t, const CostModel& cost = {}) {
    return min_tdcf(split_scores(t), cost);
}
inline double accuracy_at(std::span<const TrialScore> t, double threshold) {
    return accuracy_at(split_scores(t), threshold);
}

struct DatasetMetrics {
    std::string dataset;
    double eer = 0.0;
    double eer_threshold = 0.0;
    double min_tdcf = 0.0;
    double auc = 0.0;
    std::size_t n_real = 0;
    std::size_t n_fake = 0;
};

struct MetricsSummary {
    std::vector<DatasetMetrics> datasets;  // sorted by name
    double mean_eer = 0.0;
    double mean_tdcf = 0.0;
    double mean_auc = 0.0;
    std::optional<double> auc_sigma;  // population sigma, only with >= 2 datasets
};

inline DatasetMetrics dataset_metrics(std::string name, const ClassScores& s, const CostModel& cost) {
    const auto e = eer(s);
    return {std::move(name), e.eer, e.threshold, min_tdcf(s, cost).min_tdcf, auc(s),
            s.real.size(), s.fake.size()};
}

/// Per-dataset metrics plus unweighted means and the spread of AUC.
inline MetricsSummary summarize(const std::map<std::string, ClassScores>& per_dataset,
                                const CostModel& cost = {}) {
    if (per_dataset.empty()) throw Error("summarize needs at least one dataset");
    MetricsSummary m;
    for (const auto& [name, scores] : per_dataset) {
        try {
            m.datasets.push_back(dataset_metrics(name, scores, cost));
        } catch (const Error& e) {
            throw Error("dataset '" + name + "': " + e.what());
        }
    }
    const double n = static_cast<double>(m.datasets.size());
    for (const auto& d : m.datasets) {
        m.mean_eer += d.eer;
        m.mean_tdcf += d.min_tdcf;
        m.mean_auc += d.auc;
    }
    m.mean_eer /= n;
    m.mean_tdcf /= n;
    m.mean_auc /= n;
    if (m.datasets.size() >= 2) {
        double ss = 0.0;
        for (const auto& d : m.datasets) ss += (d.auc - m.mean_auc) * (d.auc - m.mean_auc);
        m.auc_sigma = std::sqrt(ss / n);
    }
    return m;
}

inline std::map<std::string, ClassScores> group_by_dataset(std::span<const TrialScore> trials) {
    std::map<std::string, ClassScores> out;
    for (const auto& t : trials)
        (t.label == Label::BonaFide ? out[t.dataset_tag].real : out[t.dataset_tag].fake).push_back(t.score);
    return out;
}

}  // namespace voxref
