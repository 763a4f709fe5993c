#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

#include "measures.hpp"

namespace isomlab {

inline constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;

inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = kFnvOffset) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = kFnvOffset) { return fnv1a(s.data(), s.size(), h); }

namespace detail {
inline std::uint64_t hash_doubles(const double* x, std::size_t k, std::uint64_t h) {
    for (std::size_t i = 0; i < k; ++i) {
        double v = x[i] == 0.0 ? 0.0 : x[i];  // -0 and +0 hash alike
        h = fnv1a(&v, sizeof v, h);
    }
    return h;
}
inline std::uint64_t hash_element(const Isometry& g, std::uint64_t h) {
    h = hash_doubles(g.v.data(), g.v.size(), h);
    return hash_doubles(g.rot.matrix().data(), g.rot.matrix().size(), h);
}
inline std::uint64_t hash_element(const Similarity& k, std::uint64_t h) {
    h = hash_doubles(&k.lambda, 1, h);
    h = hash_doubles(k.v.data(), k.v.size(), h);
    return hash_doubles(k.rot.matrix().data(), k.rot.matrix().size(), h);
}
inline std::uint64_t hash_element(const Rotation& r, std::uint64_t h) {
    return hash_doubles(r.matrix().data(), r.matrix().size(), h);
}
}  // namespace detail

// digest of the atom list in stored order (weights, then element coordinates)
template <class T>
std::uint64_t measure_digest(const DiscreteMeasure<T>& mu) {
    std::uint64_t h = kFnvOffset;
    for (const auto& a : mu.atoms()) {
        h = detail::hash_doubles(&a.weight, 1, h);
        h = detail::hash_element(a.element, h);
    }
    return h;
}

}  // namespace isomlab
