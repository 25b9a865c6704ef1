#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "embedding.hpp"
#include "error.hpp"
#include "parallel.hpp"

namespace voxref {

/// Default decision threshold on the max-similarity statistic.
inline constexpr double kDefaultThreshold = 0.85;

/// Dot product accumulated in double, strictly left to right.
inline double dot(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw Error("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return acc;
}

/// Cosine of the angle between two embeddings, clamped to [-1, 1].
/// Symmetric bit-for-bit: both the products and the norm product commute.
inline double cosine_similarity(const Embedding& a, const Embedding& b) {
    const double c = dot(a.values(), b.values()) / (a.norm() * b.norm());
    return std::clamp(c, -1.0, 1.0);
}

struct DecisionStatistic {
    double value = -1.0;
    std::string argmax_reference;
};

enum class Decision { Real, Fake };

inline std::string_view to_string(Decision d) noexcept { return d == Decision::Real ? "real" : "fake"; }

struct Verdict {
    Decision decision = Decision::Fake;
    DecisionStatistic statistic;
    double threshold = kDefaultThreshold;
};

namespace detail {

// Max over `members`, skipping `exclude`. Ties go to the smallest utterance_id.
inline DecisionStatistic max_over(const Embedding& test,
                                  std::span<const UtteranceRecord* const> members,
                                  const UtteranceRecord* exclude = nullptr) {
    const UtteranceRecord* best = nullptr;
    double best_value = 0.0;
    for (const UtteranceRecord* r : members) {
        if (r == exclude) continue;
        const double s = cosine_similarity(test, r->embedding);
        if (!best || s > best_value || (s == best_value && r->utterance_id < best->utterance_id)) {
            best = r;
            best_value = s;
        }
    }
    if (!best) throw Error("reference set is empty");
    return {best_value, best->utterance_id};
}

}  // namespace detail

/// Largest cosine similarity between `test` and any member of `ref`.
inline DecisionStatistic max_similarity(const Embedding& test, const ReferenceSet& ref) {
    if (ref.empty()) throw Error("reference set for '" + ref.identity + "' is empty");
    return detail::max_over(test, ref.members);
}

/// Accept-at-boundary: a statistic equal to the threshold is Real.
inline Verdict decide(const DecisionStatistic& stat, double threshold) {
    if (!std::isfinite(threshold)) throw Error("threshold must be finite");
    return {stat.value >= threshold ? Decision::Real : Decision::Fake, stat, threshold};
}

/// One scored trial: a test utterance against a claimed identity.
struct TrialScore {
    std::string utterance_id;
    std::string claimed_identity;
    double score = 0.0;
    std::string argmax_reference;
    Label label = Label::BonaFide;
    std::string dataset_tag;
    std::size_t reference_size = 0;
};

struct Claim {
    std::string utterance_id;
    std::string claimed_identity;
};

/// Either a score or the reason this single trial could not be scored.
struct TrialOutcome {
    std::optional<TrialScore> trial;
    std::string error;

    bool ok() const noexcept { return trial.has_value(); }
};

/// True when `rec` must be left out of `identity`'s pool when it is the test.
inline bool is_self_trial(const UtteranceRecord& rec, std::string_view identity) noexcept {
    return rec.label == Label::BonaFide && rec.identity_id == identity;
}

/// Scores one test record against a (possibly subsampled) reference set,
/// leaving the test record out of its own pool.
inline TrialScore score_record(const UtteranceRecord& test, const ReferenceSet& ref) {
    const UtteranceRecord* exclude = nullptr;
    if (is_self_trial(test, ref.identity)) {
        auto it = std::find(ref.members.begin(), ref.members.end(), &test);
        if (it != ref.members.end()) exclude = *it;
    }
    const std::size_t used = ref.size() - (exclude ? 1 : 0);
    if (used == 0)
        throw Error("leave-one-out leaves no reference for '" + test.utterance_id +
                    "' under identity '" + ref.identity + "'");
    auto stat = detail::max_over(test.embedding, ref.members, exclude);
    return {test.utterance_id, ref.identity, stat.value, std::move(stat.argmax_reference),
            test.label, test.dataset_tag, used};
}

/// Scores each claim against the claimed identity's bona-fide pool. Output
/// order matches input order and does not depend on `threads`; a bad claim
/// yields an error entry instead of aborting the batch.
inline std::vector<TrialOutcome> score_trials(const EmbeddingStore& store,
                                              std::span<const Claim> claims,
                                              std::size_t threads = 0) {
    std::map<std::string, std::optional<ReferenceSet>, std::less<>> pools;
    std::map<std::string, std::string, std::less<>> pool_errors;
    for (const auto& c : claims) {
        if (pools.contains(c.claimed_identity)) continue;
        try {
            pools.emplace(c.claimed_identity, reference_set(store, c.claimed_identity));
        } catch (const Error& e) {
            pools.emplace(c.claimed_identity, std::nullopt);
            pool_errors.emplace(c.claimed_identity, e.what());
        }
    }

    std::vector<TrialOutcome> out(claims.size());
    parallel_for(claims.size(), threads, [&](std::size_t i) {
        const Claim& c = claims[i];
        const UtteranceRecord* test = store.find(c.utterance_id);
        if (!test) {
            out[i].error = "unknown utterance_id '" + c.utterance_id + "'";
            return;
        }
        const auto& pool = pools.find(c.claimed_identity)->second;
        if (!pool) {
            out[i].error = pool_errors.find(c.claimed_identity)->second;
            return;
        }
        try {
            out[i].trial = score_record(*test, *pool);
        } catch (const Error& e) {
            out[i].error = e.what();
        }
    });
    return out;
}

}  // namespace voxref
