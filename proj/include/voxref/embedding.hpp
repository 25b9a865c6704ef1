#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "error.hpp"
#include "random.hpp"

namespace voxref {

/// A point in a model's latent space. Always non-empty, finite and nonzero.
class Embedding {
public:
    Embedding() = default;

    explicit Embedding(std::vector<float> values) : values_(std::move(values)) {
        if (values_.empty()) throw Error("embedding has dimension 0");
        double sq = 0.0;
        for (float v : values_) {
            if (!std::isfinite(v)) throw Error("embedding contains a non-finite value");
            sq += static_cast<double>(v) * static_cast<double>(v);
        }
        if (sq == 0.0) throw Error("embedding is the zero vector");
        norm_ = std::sqrt(sq);
    }

    std::size_t dim() const noexcept { return values_.size(); }
    std::span<const float> values() const noexcept { return values_; }
    /// Euclidean norm accumulated in double, fixed left-to-right order.
    double norm() const noexcept { return norm_; }

    friend bool operator==(const Embedding& a, const Embedding& b) {
        if (a.values_.size() != b.values_.size()) return false;
        // Bitwise comparison: -0.0f and 0.0f are distinct records.
        for (std::size_t i = 0; i < a.values_.size(); ++i) {
            if (std::bit_cast<std::uint32_t>(a.values_[i]) !=
                std::bit_cast<std::uint32_t>(b.values_[i]))
                return false;
        }
        return true;
    }

private:
    std::vector<float> values_;
    double norm_ = 0.0;
};

enum class Label : std::uint8_t { BonaFide = 0, Spoof = 1 };

inline std::string_view to_string(Label l) noexcept {
    return l == Label::BonaFide ? "bonafide" : "spoof";
}

inline Label parse_label(std::string_view s) {
    if (s == "bonafide") return Label::BonaFide;
    if (s == "spoof") return Label::Spoof;
    throw Error("unknown label '" + std::string(s) + "' (expected bonafide|spoof)");
}

struct UtteranceRecord {
    std::string utterance_id;
    std::string identity_id;
    Label label = Label::BonaFide;
    std::string dataset_tag;
    Embedding embedding;

    friend bool operator==(const UtteranceRecord&, const UtteranceRecord&) = default;
};

/// Flat collection of utterance records sharing one embedding dimension.
///
/// The dimension is undefined (0) until the first record is appended. Once
/// ingestion is finished the store is treated as immutable and may be read
/// concurrently; `ReferenceSet` holds pointers into it.
class EmbeddingStore {
public:
    EmbeddingStore() = default;
    explicit EmbeddingStore(std::string model_name) : model_name_(std::move(model_name)) {}

    /// Appends a record, fixing the dimension on first use.
    void append(UtteranceRecord rec) {
        if (dim_ == 0) {
            dim_ = rec.embedding.dim();
        } else if (rec.embedding.dim() != dim_) {
            throw Error("dimension mismatch: record '" + rec.utterance_id + "' has dim " +
                        std::to_string(rec.embedding.dim()) + ", store has dim " +
                        std::to_string(dim_));
        }
        if (index_.contains(rec.utterance_id))
            throw Error("duplicate utterance_id '" + rec.utterance_id + "'");
        index_.emplace(rec.utterance_id, records_.size());
        records_.push_back(std::move(rec));
    }

    /// Fixes the dimension of an empty store (used by the binary reader).
    void set_dim(std::size_t dim) {
        if (!records_.empty() && dim != dim_) throw Error("cannot change dim of a non-empty store");
        dim_ = dim;
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const std::string& model_name() const noexcept { return model_name_; }
    void set_model_name(std::string name) { model_name_ = std::move(name); }
    std::span<const UtteranceRecord> records() const noexcept { return records_; }

    const UtteranceRecord* find(std::string_view utterance_id) const {
        auto it = index_.find(std::string(utterance_id));
        return it == index_.end() ? nullptr : &records_[it->second];
    }

    const UtteranceRecord& at(std::string_view utterance_id) const {
        if (const auto* r = find(utterance_id)) return *r;
        throw Error("unknown utterance_id '" + std::string(utterance_id) + "'");
    }

    bool has_identity(std::string_view identity) const {
        for (const auto& r : records_)
            if (r.identity_id == identity) return true;
        return false;
    }

    /// Distinct identity ids in order of first appearance.
    std::vector<std::string> identities() const {
        std::vector<std::string> out;
        std::unordered_map<std::string_view, bool> seen;
        for (const auto& r : records_) {
            if (seen.emplace(r.identity_id, true).second) out.push_back(r.identity_id);
        }
        return out;
    }

    friend bool operator==(const EmbeddingStore& a, const EmbeddingStore& b) {
        return a.dim_ == b.dim_ && a.model_name_ == b.model_name_ && a.records_ == b.records_;
    }

private:
    std::vector<UtteranceRecord> records_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t dim_ = 0;
    std::string model_name_;
};

/// Certified bona-fide records of one identity. Non-owning view into a store.
struct ReferenceSet {
    std::string identity;
    std::vector<const UtteranceRecord*> members;

    std::size_t size() const noexcept { return members.size(); }
    bool empty() const noexcept { return members.empty(); }
};

/// All bona-fide records of `identity`, in store order.
inline ReferenceSet reference_set(const EmbeddingStore& store, std::string_view identity) {
    ReferenceSet ref{std::string(identity), {}};
    bool known = false;
    for (const auto& r : store.records()) {
        if (r.identity_id != identity) continue;
        known = true;
        if (r.label == Label::BonaFide) ref.members.push_back(&r);
    }
    if (!known) throw Error("unknown identity '" + std::string(identity) + "'");
    if (ref.empty())
        throw Error("identity '" + std::string(identity) + "' has no bona-fide records");
    return ref;
}

/// Uniformly random k-subset of `ref`, a pure function of (ref, k, seed).
/// Members come back in draw order.
inline ReferenceSet subsample_reference(const ReferenceSet& ref, std::size_t k,
                                        std::uint64_t seed) {
    if (k == 0) throw Error("subsample size must be at least 1");
    if (k > ref.size())
        throw Error("subsample size " + std::to_string(k) + " exceeds reference set size " +
                    std::to_string(ref.size()));
    ReferenceSet out{ref.identity, {}};
    out.members.reserve(k);
    for (std::size_t i : seeded_permutation_prefix(ref.size(), k, seed))
        out.members.push_back(ref.members[i]);
    return out;
}

}  // namespace voxref
