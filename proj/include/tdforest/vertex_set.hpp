#pragma once

#include <bit>
#include <cassert>
#include <cstdint>
#include <vector>

namespace tdforest {

// Set of vertex indices in [0, 64), one bit per vertex.  Everything the
// decomposition search does (interfaces, components, bags) lives in these,
// so all set algebra is a single machine word.
struct VertexSet {
    std::uint64_t bits = 0;

    constexpr VertexSet() = default;
    constexpr explicit VertexSet(std::uint64_t raw) : bits(raw) {}

    static constexpr VertexSet single(int v) { return VertexSet(std::uint64_t{1} << v); }

    // {0, 1, ..., n-1}
    static constexpr VertexSet first_n(int n) {
        return VertexSet(n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1);
    }

    constexpr bool contains(int v) const { return (bits >> v) & 1u; }
    constexpr bool empty() const { return bits == 0; }
    constexpr int count() const { return std::popcount(bits); }

    constexpr void add(int v) { bits |= std::uint64_t{1} << v; }
    constexpr void remove(int v) { bits &= ~(std::uint64_t{1} << v); }

    constexpr bool intersects(VertexSet o) const { return (bits & o.bits) != 0; }
    constexpr bool subset_of(VertexSet o) const { return (bits & ~o.bits) == 0; }
    constexpr bool proper_subset_of(VertexSet o) const { return subset_of(o) && bits != o.bits; }

    constexpr VertexSet operator|(VertexSet o) const { return VertexSet(bits | o.bits); }
    constexpr VertexSet operator&(VertexSet o) const { return VertexSet(bits & o.bits); }
    constexpr VertexSet operator-(VertexSet o) const { return VertexSet(bits & ~o.bits); }
    constexpr VertexSet& operator|=(VertexSet o) { bits |= o.bits; return *this; }
    constexpr VertexSet& operator&=(VertexSet o) { bits &= o.bits; return *this; }

    constexpr bool operator==(const VertexSet&) const = default;

    // Lowest vertex index; only meaningful on non-empty sets.
    constexpr int lowest() const {
        assert(bits != 0);
        return std::countr_zero(bits);
    }

    // Ascending vertex indices.
    std::vector<int> indices() const {
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(count()));
        for (std::uint64_t rest = bits; rest != 0; rest &= rest - 1)
            out.push_back(std::countr_zero(rest));
        return out;
    }
};

// Calls fn(v) for each member in ascending order.
template <typename Fn>
inline void for_each_vertex(VertexSet s, Fn&& fn) {
    for (std::uint64_t rest = s.bits; rest != 0; rest &= rest - 1)
        fn(std::countr_zero(rest));
}

// All subsets of `pool` with exactly `size` members, in a fixed deterministic
// order (combinations of the ascending member list).  Used for bag-candidate
// enumeration; `size` stays tiny (<= 9).
template <typename Fn>
inline void for_each_subset_of_size(VertexSet pool, int size, Fn&& fn) {
    std::vector<int> members = pool.indices();
    const int n = static_cast<int>(members.size());
    if (size < 0 || size > n) return;
    std::vector<int> pick(static_cast<std::size_t>(size));
    // Classic combination odometer over the sorted member list.
    auto rec = [&](auto&& self, int start, int depth) -> void {
        if (depth == size) {
            VertexSet s;
            for (int v : pick) s.add(v);
            fn(s);
            return;
        }
        for (int i = start; i <= n - (size - depth); ++i) {
            pick[static_cast<std::size_t>(depth)] = members[static_cast<std::size_t>(i)];
            self(self, i + 1, depth + 1);
        }
    };
    rec(rec, 0, 0);
}

}  // namespace tdforest
