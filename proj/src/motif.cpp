#include "tdforest/motif.hpp"

#include <algorithm>
#include <array>

#include "tdforest/errors.hpp"

namespace tdforest {

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string MotifCode::hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char c : bytes) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 0xf]);
    }
    return out;
}

namespace {

// Packs q and the q*q row-major adjacency bits into bytes.
std::string pack_code(int q, const std::vector<char>& adj) {
    std::string out(1, static_cast<char>(q));
    int acc = 0, filled = 0;
    for (char bit : adj) {
        acc = (acc << 1) | bit;
        if (++filled == 8) {
            out.push_back(static_cast<char>(acc));
            acc = filled = 0;
        }
    }
    if (filled > 0) out.push_back(static_cast<char>(acc << (8 - filled)));
    return out;
}

}  // namespace

CanonicalBag canonical_bag(const Graph& g, VertexSet bag) {
    const std::vector<int> verts = bag.indices();
    const int q = static_cast<int>(verts.size());
    if (q > 5) throw Error("bag too large for motif canonicalization: " + std::to_string(q));

    CanonicalBag out;
    if (q == 0) {
        out.code.bytes = pack_code(0, {});
        return out;
    }

    // First-occurrence label per ordered vertex pair inside the bag (parallel
    // edges collapse to the earliest one, deterministically).
    std::unordered_map<std::uint64_t, const std::string*> label_at;
    auto pair_key = [](int u, int v) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
               static_cast<std::uint32_t>(v);
    };
    for (const Edge& e : g.edges) {
        if (e.src == e.dst) continue;
        if (!bag.contains(e.src) || !bag.contains(e.dst)) continue;
        label_at.emplace(pair_key(e.src, e.dst), &e.label);
    }

    std::vector<int> perm(verts.begin(), verts.end());
    std::vector<char> best_adj;
    std::vector<const std::string*> best_labels;
    std::vector<char> adj(static_cast<std::size_t>(q) * q);
    std::vector<const std::string*> labels(static_cast<std::size_t>(q) * q);
    static const std::string kEmpty;

    std::sort(perm.begin(), perm.end());
    do {
        for (int i = 0; i < q; ++i) {
            for (int j = 0; j < q; ++j) {
                const std::size_t cell = static_cast<std::size_t>(i) * q + j;
                if (i == j) {
                    adj[cell] = 0;
                    labels[cell] = &kEmpty;
                    continue;
                }
                auto it = label_at.find(
                    pair_key(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]));
                adj[cell] = it != label_at.end();
                labels[cell] = it != label_at.end() ? it->second : &kEmpty;
            }
        }
        // Structure first, labels only to break ties: the minimizing
        // adjacency is then exactly the labeled minimum's structural part.
        int cmp = 0;
        if (best_adj.empty()) {
            cmp = -1;
        } else if (adj != best_adj) {
            cmp = adj < best_adj ? -1 : 1;
        } else {
            for (std::size_t i = 0; i < labels.size() && cmp == 0; ++i) {
                if (*labels[i] != *best_labels[i]) cmp = *labels[i] < *best_labels[i] ? -1 : 1;
            }
        }
        if (cmp < 0) {
            best_adj = adj;
            best_labels = labels;
            out.order = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    out.code.bytes = pack_code(q, best_adj);
    return out;
}

MotifInterner::MotifInterner() {
    MotifCode empty;
    empty.bytes = pack_code(0, {});
    by_code_.emplace(empty.bytes, 0);
    codes_.push_back(std::move(empty));
}

MotifId MotifInterner::intern(const MotifCode& code) {
    std::lock_guard<std::mutex> lock(mu_);
    auto [it, fresh] = by_code_.emplace(code.bytes, static_cast<int>(codes_.size()));
    if (fresh) codes_.push_back(code);
    return MotifId{code, it->second};
}

std::vector<MotifId> MotifInterner::entries() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<MotifId> out;
    out.reserve(codes_.size());
    for (std::size_t i = 0; i < codes_.size(); ++i)
        out.push_back(MotifId{codes_[i], static_cast<int>(i)});
    return out;
}

MotifId canonical_form(const Graph& g, VertexSet bag, MotifInterner& interner) {
    return interner.intern(canonical_bag(g, bag).code);
}

}  // namespace tdforest
