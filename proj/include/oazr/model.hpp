#pragma once

#include <string>
#include <vector>

#include "oazr/autodiff.hpp"
#include "oazr/encoding.hpp"
#include "oazr/geometry.hpp"
#include "oazr/optim.hpp"

namespace oazr {

struct ModelConfig {
    int levels = 192;          // positional-encoding levels L
    int branch_dim = 192;      // per-branch attention dim D
    int heads = 4;             // attention heads H
    int encoder_dim = 64;      // motion encoder dim D_e
    int gcn_hidden = 32;       // first graph-conv width
    int tokens = 8;            // temporal tokens T'
    int conv_kernel = 5;
    int conv_stride = 2;
    int joint_dim = 256;       // shared motion/text space D_j
    int text_dim = 512;        // incoming text embedding dim D_t
    int classifier_hidden = 256;
    int num_classes = 2;       // K

    void validate() const;
};

// Temporal segment features from the motion encoder plus their masked mean.
struct MotionTokens {
    Tensor tokens;  // T' x D_e
    Tensor pooled;  // 1 x D_e
};

// Concatenated dual-branch motion feature and its unit-normalized form.
struct MotionEmbedding {
    Tensor m;      // 1 x 2D
    Tensor m_hat;  // 1 x 2D, |m_hat| = 1
};

struct ClassLogits {
    Tensor logits;  // 1 x K
};

// Multi-head scaled dot-product cross attention with output projection.
struct AttentionWeights {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    int heads = 4;
};
Tensor cross_attention(const Tensor& queries, const Tensor& keys, const Tensor& values,
                       const AttentionWeights& w);

MotionEmbedding fuse_branches(const Tensor& h_a, const Tensor& h_b);

// The orientation-aware network: graph-temporal motion encoder, the two
// orientation/motion cross-attention branches, classification head, and the
// projections into the joint motion-text space.
class Model {
public:
    Model(ModelConfig cfg, uint64_t seed);
    Model(ModelConfig cfg, ParamStore weights, std::vector<std::string> class_names);

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }
    std::vector<std::string> class_names;  // index -> label; may be empty pre-training

    // --- graph builders (autodiff path; shared by training, eval, grad check)
    Var graph_motion_embedding(Tape& tape, const ProjectedView& view) const;  // 1 x 2D
    Var graph_joint_from_motion(Tape& tape, Var m) const;                     // unit 1 x D_j
    Var graph_joint_from_text(Tape& tape, const Tensor& t) const;             // unit 1 x D_j
    Var graph_logits(Tape& tape, Var m) const;                                // 1 x K
    Var graph_cross_attention(Tape& tape, Var q, Var k, Var v, const std::string& prefix) const;

    // --- value-level operations
    MotionTokens encode_motion(const ProjectedView& view) const;
    Tensor orientation_as_query(const OrientationEncoding& gamma, const MotionTokens& tokens) const;
    Tensor motion_as_query(const Tensor& pooled, const OrientationEncoding& gamma) const;
    MotionEmbedding embed_view(const ProjectedView& view) const;
    ClassLogits classify(const MotionEmbedding& m) const;
    Tensor project_motion_embedding(const Tensor& m) const;  // unit D_j
    Tensor project_text_embedding(const Tensor& t) const;    // unit D_j
    AttentionWeights attention_weights(const std::string& prefix) const;

    // Symmetrically normalized COCO-17 adjacency with self loops.
    static const Tensor& coco_adjacency();

private:
    ModelConfig cfg_;
    ParamStore store_;

    void register_params(uint64_t seed);
    Var param(Tape& tape, const std::string& name) const;
    Var graph_tokens(Tape& tape, const ProjectedView& view, Var* pooled_out) const;
    Var graph_branch_a(Tape& tape, const Tensor& gamma, Var tokens) const;
    Var graph_branch_b(Tape& tape, Var pooled, const Tensor& gamma) const;
    Tensor gamma_tensor(double theta_deg) const;
};

// Per-sequence 2-D normalization statistics (visible joints only).
struct ViewStats {
    double center_u = 0, center_v = 0, scale = 1;
};
ViewStats compute_view_stats(const ProjectedView& view);

// Checkpoint plus a sidecar "<path>.meta" JSON holding the config and class
// list needed to reconstruct the model.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace oazr
