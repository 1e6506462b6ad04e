#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tdforest/expected_tree.hpp"
#include "tdforest/forest.hpp"
#include "tdforest/graph.hpp"
#include "tdforest/json_io.hpp"

namespace tdforest {

// Embedding sizes.  h: node state, d: depth gap, r: per relation label,
// m: motif, h_edge: emitted per-edge feature.  Bags at width w hold up to
// k = w+1 vertices, so a bag's relation block covers k(k-1) ordered slots.
struct EncoderDims {
    int width = 3;
    int h = 64;
    int d = 16;
    int r = 64;
    int m = 32;
    int h_edge = 8;
    int d_max = 16;       // depth gaps clamp to [1, d_max]; row 0 = NULL pad
    int label_rows = 64;  // label strings hash onto rows 1..label_rows-1
    int motif_rows = 64;  // motif codes hash onto rows 1..motif_rows-1

    int k() const { return width + 1; }
    int pair_slots() const { return k() * (k() - 1); }
    int rel_block() const { return pair_slots() * r; }
    int init_in() const { return rel_block() + m; }  // [relation block; motif]
    int comb_in() const { return 2 * (h + d); }      // two depth-padded states

    bool operator==(const EncoderDims&) const = default;
};

// All learned tensors.  Linear layers are stored (fan_in x fan_out) and
// applied as y = W^T x + b.
struct EncoderParams {
    EncoderDims dims;
    Eigen::MatrixXd w1;           // init_in x h      bag initialization
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;           // comb_in x h      inside combination
    Eigen::VectorXd b2;
    Eigen::MatrixXd w3;           // comb_in x h      outside combination
    Eigen::VectorXd b3;
    Eigen::MatrixXd attn_q;       // h x h            shared cross-attention
    Eigen::MatrixXd attn_k;       // h x h
    Eigen::MatrixXd attn_v;       // h x h
    Eigen::MatrixXd depth_table;  // (d_max+1) x d
    Eigen::MatrixXd label_table;  // label_rows x r   row 0 = absent/padding
    Eigen::MatrixXd motif_table;  // motif_rows x m
    Eigen::VectorXd root_bias;    // h                synthetic-root state
    Eigen::MatrixXd w4;           // 2h x h_edge      relation feature head
    Eigen::VectorXd b4;

    // Uniform in [-0.1, 0.1], filled tensor-by-tensor in `tensors()` order
    // from a seeded generator, so a seed fully determines every weight.
    static EncoderParams seeded(const EncoderDims& dims, std::uint64_t seed);
    static EncoderParams zeros(const EncoderDims& dims);

    struct TensorRef {
        std::string name;
        double* data;
        Eigen::Index rows, cols;
        Eigen::Index size() const { return rows * cols; }
    };
    std::vector<TensorRef> tensors();  // stable naming and order

    Json to_json() const;
    static EncoderParams from_json(const Json& doc);
};

// Per-node quantities produced by the two sweeps over a binarized forest.
struct NodeStates {
    std::vector<int> leaf_depth;   // 0 at leaves, else 1 + max child depth
    std::vector<int> root_depth;   // 0 at the root, else 1 + max parent depth
    std::vector<Eigen::VectorXd> inside;
    std::vector<Eigen::VectorXd> outside;
    // Inside attention weights per node and derivation; these are the
    // derivation probabilities the expected-tree pass consumes.
    std::vector<std::vector<double>> weights;
};

std::vector<int> leaf_depths(const BinForest& f);
std::vector<int> root_depths(const BinForest& f);

// Single-head scaled-dot cross-attention shared by both sweeps: scores are
// <Q^T query, K^T cand_r> / sqrt(h), weights their softmax, and the result
// the weight-averaged V^T cand_r.
struct AttentionResult {
    std::vector<double> weights;
    Eigen::VectorXd combined;
};
AttentionResult derivation_attention(const Eigen::VectorXd& query,
                                     const std::vector<Eigen::VectorXd>& candidates,
                                     const EncoderParams& p);

// Initial embedding of one node: relu(W1 [relations; motif] + b1) for bag
// nodes, the learned root bias for the synthetic empty-bag root, zero for
// auxiliary and NULL nodes.
Eigen::VectorXd init_bag_embedding(const BinForest& f, int node, const Graph& g,
                                   const EncoderParams& p);

// Expected per-edge features: every derivation arc (A -> child) contributes
// message * relu(W4 [inside_A; outside_A] + b4) to each of its new
// relations.  Arcs are the *de-binarized* ones; auxiliary fold nodes only
// pass their mass along.  Edges first visible at the forest root enter
// through a virtual arc onto the root.
EdgeFeatureSet relation_features(const BinForest& f, const NodeStates& st, const Marginals& mg,
                                 const EncoderParams& p, const Graph& g);

// Whole pipeline with enough recorded state to run the analytic backward
// pass.  Forward order: init -> depths -> inside -> outside -> marginals ->
// relation features.
class ForestEncoder {
  public:
    // Keeps references; the forest, graph, and parameters must outlive the
    // encoder.
    ForestEncoder(const BinForest& f, const Graph& g, const EncoderParams& p);

    void forward();

    const NodeStates& states() const { return states_; }
    const Marginals& node_marginals() const { return marg_; }
    const EdgeFeatureSet& features() const { return feats_; }
    // Softmax over parent occurrences per node (empty for root and NULL).
    const std::vector<std::vector<double>>& outside_weights() const { return out_w_; }

    // Gradient of sum(all inside entries) + sum(all outside entries).
    EncoderParams grad_state_sum() const;
    // Gradient of the sum of every emitted feature entry (full pipeline).
    EncoderParams grad_feature_sum() const;

  private:
    struct InsideDeriv {
        std::array<int, 2> kids;
        std::array<int, 2> gap_row;
        Eigen::VectorXd z, v, kproj, vproj;
    };
    struct OutsideOcc {
        int parent = -1, der = -1, pos = 0, sibling = -1;
        int gap_row = 0;
        Eigen::VectorXd z, u, kproj, vproj;
    };
    enum class InitKind { kBag, kRootBias, kZero };

    void backward(const std::vector<Eigen::VectorXd>& d_feature,
                  bool seed_state_sum, EncoderParams& grad) const;

    const BinForest& f_;
    const Graph& g_;
    const EncoderParams& p_;

    // forward trace
    std::vector<InitKind> kind_;
    std::vector<std::vector<int>> label_row_;  // per bag node, per pair slot
    std::vector<int> motif_row_;
    std::vector<Eigen::VectorXd> z1_, init_;
    NodeStates states_;
    std::vector<Eigen::VectorXd> qproj_;  // shared query projection per node
    std::vector<std::vector<InsideDeriv>> in_ders_;
    std::vector<std::vector<OutsideOcc>> out_occs_;
    std::vector<std::vector<double>> out_w_;
    std::vector<int> inside_order_, outside_order_;
    Marginals marg_;
    std::vector<Eigen::VectorXd> z4_, phi_;  // relation head per source node
    EdgeFeatureSet feats_;
    bool ran_ = false;
};

}  // namespace tdforest
