#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include <voxref/fixture.hpp>
#include <voxref/protocols.hpp>

#include "metric_oracles.hpp"
#include "test_util.hpp"

using namespace voxref;

namespace {

UtteranceRecord rec(std::string uid, std::string spk, Label l, std::vector<float> v, std::string ds = "d") {
    return {std::move(uid), std::move(spk), l, std::move(ds), Embedding(std::move(v))};
}

// Well separated identities: bona fide = center + small noise, spoofs sit
// halfway between the center and an unrelated direction.
EmbeddingStore two_cluster_store(std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    EmbeddingStore s;
    const std::size_t dim = 16;
    for (int id = 0; id < 4; ++id) {
        std::vector<double> center(dim, 0.0), off(dim, 0.0);
        center[id] = 1.0;
        off[8 + id] = 1.0;
        const std::string spk = "spk" + std::to_string(id);
        for (int i = 0; i < 20; ++i) {
            std::vector<float> v(dim);
            for (std::size_t k = 0; k < dim; ++k) v[k] = float(center[k] + 0.05 * standard_normal(gen));
            s.append(rec(spk + "-b" + std::to_string(i), spk, Label::BonaFide, v));
        }
        for (int i = 0; i < 10; ++i) {
            std::vector<float> v(dim);
            for (std::size_t k = 0; k < dim; ++k) v[k] = float(center[k] + off[k] + 0.05 * standard_normal(gen));
            s.append(rec(spk + "-s" + std::to_string(i), spk, Label::Spoof, v));
        }
    }
    return s;
}

// Exhaustive nearest-neighbour scoring with its own cosine.
ClassScores oracle_scores(const EmbeddingStore& s) {
    ClassScores out;
    for (const auto& t : s.records()) {
        double best = -2;
        for (const auto& r : s.records()) {
            if (r.identity_id != t.identity_id || r.label != Label::BonaFide || &r == &t) continue;
            double ab = 0, aa = 0, bb = 0;
            for (std::size_t k = 0; k < s.dim(); ++k) {
                ab += double(t.embedding.values()[k]) * r.embedding.values()[k];
                aa += double(t.embedding.values()[k]) * t.embedding.values()[k];
                bb += double(r.embedding.values()[k]) * r.embedding.values()[k];
            }
            best = std::max(best, ab / std::sqrt(aa * bb));
        }
        (t.label == Label::BonaFide ? out.real : out.fake).push_back(best);
    }
    return out;
}

std::vector<TrialScore> trials_from(std::vector<double> real, std::vector<double> fake) {
    std::vector<TrialScore> t;
    for (double v : real) t.push_back({"r", "x", v, "", Label::BonaFide, "d", 1});
    for (double v : fake) t.push_back({"f", "x", v, "", Label::Spoof, "d", 1});
    return t;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j < idx.size() && v[idx[j]] == v[idx[i]]) ++j;
            for (std::size_t k = i; k < j; ++k) r[idx[k]] = (double(i) + double(j) + 1) / 2.0;
            i = j;
        }
        return r;
    };
    const auto rx = ranks(x), ry = ranks(y);
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

FixtureConfig small_fixture(std::uint64_t seed = 3) {
    FixtureConfig c;
    c.identities = 8;
    c.bonafide_per_identity = 60;
    c.spoof_per_identity = 20;
    c.dim = 64;
    c.seed = seed;
    return c;
}

}  // namespace

TEST(Evaluate, TwoClusterFixtureSeparates) {
    const auto store = two_cluster_store(1);
    const auto oracle = oracle_scores(store);
    ASSERT_EQ(oracle::auc_pairwise(oracle.real, oracle.fake), 1.0);

    const auto ev = evaluate(store, CostModel{}, 2);
    ASSERT_EQ(ev.summary.datasets.size(), 1u);
    EXPECT_GT(ev.summary.mean_auc, 0.99);
    EXPECT_EQ(ev.summary.mean_auc, oracle::auc_pairwise(oracle.real, oracle.fake));
    EXPECT_EQ(ev.summary.datasets[0].n_real, 80u);
    EXPECT_EQ(ev.summary.datasets[0].n_fake, 40u);
    const auto mine = split_scores(ev.trials);
    for (std::size_t i = 0; i < mine.real.size(); ++i) EXPECT_NEAR(mine.real[i], oracle.real[i], 1e-12);
    for (std::size_t i = 0; i < mine.fake.size(); ++i) EXPECT_NEAR(mine.fake[i], oracle.fake[i], 1e-12);
}

TEST(Evaluate, SingleBonaFideSelfTrialFails) {
    EmbeddingStore s;
    s.append(rec("only", "x", Label::BonaFide, {1, 0}));
    s.append(rec("fake", "x", Label::Spoof, {0, 1}));
    try {
        evaluate(s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("leave-one-out"), std::string::npos);
    }
}

TEST(Evaluate, IdenticalEmbeddingsGiveChanceAuc) {
    EmbeddingStore s;
    for (int i = 0; i < 6; ++i) s.append(rec("b" + std::to_string(i), "x", Label::BonaFide, {1, 2, 3}));
    for (int i = 0; i < 4; ++i) s.append(rec("s" + std::to_string(i), "x", Label::Spoof, {1, 2, 3}));
    EXPECT_EQ(evaluate(s).summary.mean_auc, 0.5);
}

TEST(Evaluate, InvariantToRecordOrder) {
    const auto store = make_fixture(small_fixture());
    std::vector<UtteranceRecord> recs(store.records().begin(), store.records().end());
    std::mt19937_64 gen(5);
    std::shuffle(recs.begin(), recs.end(), gen);
    EmbeddingStore shuffled(store.model_name());
    for (auto& r : recs) shuffled.append(r);
    const auto a = evaluate(store), b = evaluate(shuffled);
    EXPECT_EQ(a.summary.mean_auc, b.summary.mean_auc);
    EXPECT_EQ(a.summary.mean_eer, b.summary.mean_eer);
    EXPECT_EQ(a.summary.mean_tdcf, b.summary.mean_tdcf);
}

TEST(Evaluate, GroupsByDatasetTag) {
    auto cfg = small_fixture();
    cfg.datasets = 3;
    const auto ev = evaluate(make_fixture(cfg));
    ASSERT_EQ(ev.summary.datasets.size(), 3u);
    EXPECT_TRUE(ev.summary.auc_sigma.has_value());
}

TEST(ScoreWithReferenceSize, LeavesSelfOutAndCapsAtPool) {
    const auto store = make_fixture(small_fixture());
    for (std::size_t k : {1u, 5u, 59u, 60u, 500u}) {
        const auto trials = score_with_reference_size(store, k, 11, 0, 2);
        ASSERT_EQ(trials.size(), store.size());
        for (const auto& t : trials) {
            if (t.label == Label::BonaFide) {
                EXPECT_NE(t.argmax_reference, t.utterance_id);
                EXPECT_EQ(t.reference_size, std::min<std::size_t>(k, 59));
            } else {
                EXPECT_EQ(t.reference_size, std::min<std::size_t>(k, 60));
            }
        }
    }
    EXPECT_THROW(score_with_reference_size(store, 0, 1), Error);
}

TEST(ScoreWithReferenceSize, IndependentOfThreads) {
    const auto store = make_fixture(small_fixture());
    const auto a = score_with_reference_size(store, 5, 9, 2, 1);
    const auto b = score_with_reference_size(store, 5, 9, 2, 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].score, b[i].score);
        EXPECT_EQ(a[i].argmax_reference, b[i].argmax_reference);
    }
}

TEST(ReferenceSweep, FullSizeMatchesEvaluate) {
    const auto store = make_fixture(small_fixture());
    const std::vector<std::size_t> sizes{60};
    const auto sw = reference_sweep(store, sizes, 3, 17);
    ASSERT_EQ(sw.cells.size(), 1u);
    EXPECT_EQ(sw.cells[0].mean_auc, evaluate(store).summary.mean_auc);
    EXPECT_EQ(sw.cells[0].std_auc, 0.0);
}

TEST(ReferenceSweep, DeterministicAndValidated) {
    const auto store = make_fixture(small_fixture());
    const std::vector<std::size_t> sizes{1, 3};
    const auto a = reference_sweep(store, sizes, 3, 5, 1);
    const auto b = reference_sweep(store, sizes, 3, 5, 3);
    for (std::size_t i = 0; i < a.cells.size(); ++i) EXPECT_EQ(a.cells[i].aucs, b.cells[i].aucs);
    const auto c = reference_sweep(store, sizes, 3, 6, 1);
    EXPECT_NE(a.cells[0].aucs, c.cells[0].aucs);

    const std::vector<std::size_t> empty, decreasing{5, 2}, zero{0, 1};
    EXPECT_THROW(reference_sweep(store, empty, 1, 0), Error);
    EXPECT_THROW(reference_sweep(store, decreasing, 1, 0), Error);
    EXPECT_THROW(reference_sweep(store, zero, 1, 0), Error);
    EXPECT_THROW(reference_sweep(store, sizes, 0, 0), Error);
}

TEST(ReferenceSweep, AucGrowsWithReferenceSize) {
    const auto store = make_fixture(small_fixture(8));
    const std::vector<std::size_t> sizes{1, 5, 25};
    const auto sw = reference_sweep(store, sizes, 10, 1);
    std::vector<double> x, y;
    for (const auto& c : sw.cells)
        for (double a : c.aucs) {
            x.push_back(double(c.size));
            y.push_back(a);
        }
    EXPECT_GE(spearman(x, y), 0.0);
    EXPECT_LE(sw.cells[0].mean_auc, sw.cells[2].mean_auc);
}

TEST(Histogram, HandExamples) {
    const auto h = histogram(trials_from({0.99, 0.99, 0.99}, {0.01, 0.01}), 10, 5);
    EXPECT_EQ(std::count_if(h.real_counts.begin(), h.real_counts.end(), [](auto c) { return c > 0; }), 1);
    EXPECT_EQ(std::count_if(h.fake_counts.begin(), h.fake_counts.end(), [](auto c) { return c > 0; }), 1);
    EXPECT_EQ(h.real_counts[9], 3u);
    EXPECT_EQ(h.fake_counts[5], 2u);
    EXPECT_EQ(h.overlap, 0.0);
    EXPECT_EQ(h.reference_size, 5u);

    const auto same = histogram(trials_from({0.3, -0.2, 0.9}, {0.9, 0.3, -0.2}), 7, 1);
    EXPECT_DOUBLE_EQ(same.overlap, 1.0);
    EXPECT_THROW(histogram(trials_from({0.1}, {0.2}), 0, 1), Error);
}

TEST(Histogram, EdgesAndPartition) {
    const auto h = histogram(trials_from({-1.0, 1.0, 0.0, 0.5}, {-0.5}), 4, 1);
    ASSERT_EQ(h.bin_edges.size(), 5u);
    EXPECT_EQ(h.bin_edges.front(), -1.0);
    EXPECT_EQ(h.bin_edges.back(), 1.0);
    EXPECT_EQ(h.real_counts, (std::vector<std::size_t>{1, 0, 1, 2}));  // 0.5 opens the last bin, 1.0 closes it
    EXPECT_EQ(h.fake_counts, (std::vector<std::size_t>{0, 1, 0, 0}));

    std::mt19937_64 gen(2);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> r, f;
        for (int j = 0; j < 30; ++j) r.push_back(std::clamp(standard_normal(gen) * 0.6, -1.0, 1.0));
        for (int j = 0; j < 20; ++j) f.push_back(std::clamp(standard_normal(gen) * 0.6, -1.0, 1.0));
        const auto hh = histogram(trials_from(r, f), 1 + uniform_below(gen, 80), 1);
        EXPECT_EQ(std::accumulate(hh.real_counts.begin(), hh.real_counts.end(), std::size_t{0}), 30u);
        EXPECT_EQ(std::accumulate(hh.fake_counts.begin(), hh.fake_counts.end(), std::size_t{0}), 20u);
        EXPECT_GE(hh.overlap, 0.0);
        EXPECT_LE(hh.overlap, 1.0 + 1e-12);
    }
}

TEST(ThresholdSweep, PlateauBetweenSeparatedClasses) {
    const auto t = trials_from({0.9, 0.95}, {0.1, 0.2});
    const auto sw = threshold_sweep(t, default_threshold_grid());
    ASSERT_EQ(sw.points.size(), 201u);
    for (const auto& p : sw.points)
        if (p.threshold > 0.2 && p.threshold <= 0.9) {
            EXPECT_EQ(p.accuracy, 1.0) << p.threshold;
        }
    EXPECT_EQ(sw.best_accuracy, 1.0);
    EXPECT_NEAR(sw.best_threshold, 0.205, 1e-12);
    EXPECT_EQ(sw.fixed_accuracy, 1.0);
    EXPECT_TRUE(sw.fixed_within_tolerance);
}

TEST(ThresholdSweep, SinglePointAndExtremes) {
    const auto t = trials_from({0.5, 0.6, 0.7}, {0.55});
    const std::vector<double> one{0.58};
    const auto sw = threshold_sweep(t, one);
    ASSERT_EQ(sw.points.size(), 1u);
    EXPECT_EQ(sw.points[0].accuracy, 0.75);

    const std::vector<double> extremes{-1e9, 1e9};
    const auto ex = threshold_sweep(t, extremes);
    EXPECT_EQ(ex.points[0].accuracy, 0.75);  // everything accepted: base rate of real
    EXPECT_EQ(ex.points[1].accuracy, 0.25);  // everything rejected: base rate of fake
}

TEST(ThresholdSweep, FixedThresholdDiagnostic) {
    const auto t = trials_from({0.9, 0.8, 0.82, 0.83}, {0.5, 0.84});
    const auto sw = threshold_sweep(t, uniform_grid(0, 1, 100));
    EXPECT_DOUBLE_EQ(sw.best_accuracy, 5.0 / 6.0);
    EXPECT_EQ(sw.fixed_accuracy, 0.5);
    EXPECT_FALSE(sw.fixed_within_tolerance);
}

TEST(ThresholdSweep, RejectsBadGrids) {
    const auto t = trials_from({0.5}, {0.4});
    const std::vector<double> empty, unsorted{0.5, 0.1};
    EXPECT_THROW(threshold_sweep(t, empty), Error);
    EXPECT_THROW(threshold_sweep(t, unsorted), Error);
    EXPECT_EQ(uniform_grid(-1, 1, 200).size(), 201u);
    EXPECT_EQ(uniform_grid(-1, 1, 200).back(), 1.0);
}

TEST(Fixture, SeededAndShaped) {
    const auto cfg = small_fixture(4);
    const auto a = make_fixture(cfg), b = make_fixture(cfg);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.size(), 8u * 80u);
    EXPECT_EQ(a.dim(), 64u);
    EXPECT_EQ(a.identities().size(), 8u);
    EXPECT_FALSE(a == make_fixture(small_fixture(5)));
    auto bad = cfg;
    bad.dim = 3;
    EXPECT_THROW(make_fixture(bad), Error);
}

TEST(Fixture, SmallReferenceHistogramsAreSeparated) {
    auto cfg = small_fixture(6);
    cfg.dim = 256;
    const auto store = make_fixture(cfg);
    const auto h = histogram(score_with_reference_size(store, 5, 1), kDefaultBins, 5);
    EXPECT_LT(h.overlap, 0.1);
}
