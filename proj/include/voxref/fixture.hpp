#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "embedding.hpp"
#include "random.hpp"

namespace voxref {

/// Parameters of the synthetic identity-cluster generator.
///
/// Each identity owns a center direction and a low-dimensional "style"
/// subspace orthogonal to it. Bona-fide utterances sit at a fixed distance
/// from the center inside that subspace (so nearer neighbours appear as the
/// reference set grows); spoofs of the identity sit near the center but are
/// pushed off along a direction outside the style subspace.
struct FixtureConfig {
    std::size_t identities = 20;
    std::size_t bonafide_per_identity = 300;
    std::size_t spoof_per_identity = 100;
    std::size_t dim = 256;
    std::size_t style_dims = 3;
    double style_radius = 1.0;
    std::size_t style_modes = 2;  // 0: style directions uniform on the sphere
    double mode_spread = 0.4;
    double spoof_offset = 0.7;
    double spoof_offset_jitter = 0.2;
    double noise = 0.2;
    std::size_t datasets = 1;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<double> gaussian_vector(std::mt19937_64& gen, std::size_t dim) {
    std::vector<double> v(dim);
    for (auto& x : v) x = standard_normal(gen);
    return v;
}

inline double dot_d(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Random unit vector orthogonal to every vector in `basis` (assumed orthonormal).
inline std::vector<double> orthogonal_unit(std::mt19937_64& gen, std::size_t dim,
                                           const std::vector<std::vector<double>>& basis) {
    for (;;) {
        auto v = gaussian_vector(gen, dim);
        for (const auto& b : basis) {
            const double p = dot_d(v, b);
            for (std::size_t i = 0; i < dim; ++i) v[i] -= p * b[i];
        }
        const double n = std::sqrt(dot_d(v, v));
        if (n > 1e-6) {
            for (auto& x : v) x /= n;
            return v;
        }
    }
}

}  // namespace detail

inline EmbeddingStore make_fixture(const FixtureConfig& cfg) {
    if (cfg.identities == 0 || cfg.dim == 0 || cfg.datasets == 0)
        throw Error("fixture: identities, dim and datasets must be positive");
    if (cfg.style_dims + 2 > cfg.dim) throw Error("fixture: dim too small for style subspace");

    EmbeddingStore store("synthetic-fixture");
    std::mt19937_64 gen(derive_seed(cfg.seed, std::string_view("fixture")));
    const double noise_scale = cfg.noise / std::sqrt(static_cast<double>(cfg.dim));

    auto emit = [&](std::string uid, const std::string& identity, Label label,
                    const std::string& dataset, const std::vector<double>& v) {
        std::vector<float> f(v.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            f[i] = static_cast<float>(v[i] + noise_scale * standard_normal(gen));
        store.append({std::move(uid), identity, label, dataset, Embedding(std::move(f))});
    };

    for (std::size_t id = 0; id < cfg.identities; ++id) {
        char name[32];
        std::snprintf(name, sizeof(name), "spk%03zu", id);
        const std::string identity = name;
        const std::string dataset =
            cfg.datasets == 1 ? "synthetic" : "synthetic-" + std::to_string(id % cfg.datasets);

        std::vector<std::vector<double>> basis;
        basis.push_back(detail::orthogonal_unit(gen, cfg.dim, basis));
        for (std::size_t s = 0; s < cfg.style_dims; ++s)
            basis.push_back(detail::orthogonal_unit(gen, cfg.dim, basis));
        const auto& center = basis.front();
        std::vector<std::vector<double>> modes(cfg.style_modes);
        for (auto& m : modes) m = detail::gaussian_vector(gen, cfg.style_dims);

        for (std::size_t b = 0; b < cfg.bonafide_per_identity; ++b) {
            // Direction on the style sphere: a jittered mode, or uniform.
            const std::vector<double>* mode =
                modes.empty() ? nullptr : &modes[uniform_below(gen, modes.size())];
            std::vector<double> style(cfg.style_dims);
            double n2 = 0.0;
            do {
                n2 = 0.0;
                for (std::size_t s = 0; s < cfg.style_dims; ++s) {
                    const double g = standard_normal(gen);
                    style[s] = mode ? (*mode)[s] / std::sqrt(detail::dot_d(*mode, *mode)) + cfg.mode_spread * g : g;
                    n2 += style[s] * style[s];
                }
            } while (n2 == 0.0);
            const double scale = cfg.style_radius / std::sqrt(n2);
            std::vector<double> v = center;
            for (std::size_t s = 0; s < cfg.style_dims; ++s)
                for (std::size_t i = 0; i < cfg.dim; ++i) v[i] += scale * style[s] * basis[s + 1][i];
            emit(identity + "-bf" + std::to_string(b), identity, Label::BonaFide, dataset, v);
        }
        for (std::size_t k = 0; k < cfg.spoof_per_identity; ++k) {
            const auto dir = detail::orthogonal_unit(gen, cfg.dim, basis);
            const double offset = cfg.spoof_offset + cfg.spoof_offset_jitter * standard_normal(gen);
            std::vector<double> v = center;
            for (std::size_t i = 0; i < cfg.dim; ++i) v[i] += offset * dir[i];
            emit(identity + "-sp" + std::to_string(k), identity, Label::Spoof, dataset, v);
        }
    }
    return store;
}

}  // namespace voxref
