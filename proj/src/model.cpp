#include "oazr/model.hpp"

#include <cmath>
#include <stdexcept>

#include "oazr/error.hpp"
#include "oazr/rng.hpp"

namespace oazr {

void ModelConfig::validate() const {
    if (levels < 1 || branch_dim < 1 || heads < 1 || encoder_dim < 1 || gcn_hidden < 1 ||
        tokens < 1 || joint_dim < 1 || text_dim < 1 || classifier_hidden < 1 || num_classes < 1)
        throw std::invalid_argument("model config: dimensions must be positive");
    if (branch_dim % heads != 0)
        throw std::invalid_argument("model config: branch_dim must be divisible by heads");
    // the orientation encoding (2L) must match the motion feature dim (2D)
    if (levels != branch_dim)
        throw std::invalid_argument("model config: 2*levels must equal the motion embedding dim");
    if (conv_kernel < 1 || conv_stride < 1)
        throw std::invalid_argument("model config: bad temporal conv geometry");
}

const Tensor& Model::coco_adjacency() {
    static const Tensor adj = [] {
        static const int edges[][2] = {{15, 13}, {13, 11}, {16, 14}, {14, 12}, {11, 12},
                                       {5, 11},  {6, 12},  {5, 6},   {5, 7},   {6, 8},
                                       {7, 9},   {8, 10},  {1, 2},   {0, 1},   {0, 2},
                                       {1, 3},   {2, 4},   {3, 5},   {4, 6}};
        Tensor a = Tensor::zeros({kJoints, kJoints});
        for (auto& e : edges) {
            a.at(e[0], e[1]) = 1.0;
            a.at(e[1], e[0]) = 1.0;
        }
        for (int j = 0; j < kJoints; ++j) a.at(j, j) = 1.0;  // self loops
        std::vector<double> deg(kJoints, 0.0);
        for (int i = 0; i < kJoints; ++i)
            for (int j = 0; j < kJoints; ++j) deg[static_cast<size_t>(i)] += a.at(i, j);
        Tensor out = Tensor::zeros({kJoints, kJoints});
        for (int i = 0; i < kJoints; ++i)
            for (int j = 0; j < kJoints; ++j)
                out.at(i, j) = a.at(i, j) / std::sqrt(deg[static_cast<size_t>(i)] * deg[static_cast<size_t>(j)]);
        return out;
    }();
    return adj;
}

namespace {

Tensor xavier(std::vector<int> shape, Rng rng) {
    const int fan_in = shape[0], fan_out = shape[1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = rng.uniform(-limit, limit);
    return t;
}

}  // namespace

void Model::register_params(uint64_t seed) {
    const Rng root(seed);
    auto mat = [&](const std::string& name, int r, int c) {
        store_.add(name, xavier({r, c}, root.derive(name)));
    };
    auto bias = [&](const std::string& name, int c) { store_.add(name, Tensor::zeros({1, c})); };
    auto attention = [&](const std::string& prefix) {
        const int d = cfg_.branch_dim;
        for (const char* part : {"wq", "wk", "wv", "wo"}) mat(prefix + "." + part, d, d);
        for (const char* part : {"bq", "bk", "bv", "bo"}) bias(prefix + "." + part, d);
    };

    mat("enc.gcn1.w", 3, cfg_.gcn_hidden);
    bias("enc.gcn1.b", cfg_.gcn_hidden);
    mat("enc.gcn2.w", cfg_.gcn_hidden, cfg_.encoder_dim);
    bias("enc.gcn2.b", cfg_.encoder_dim);
    mat("enc.tconv.w", cfg_.encoder_dim, cfg_.encoder_dim * cfg_.conv_kernel);
    bias("enc.tconv.b", cfg_.encoder_dim);

    mat("bra.mlp.w1", 2 * cfg_.levels, cfg_.branch_dim);
    bias("bra.mlp.b1", cfg_.branch_dim);
    mat("bra.mlp.w2", cfg_.branch_dim, cfg_.branch_dim);
    bias("bra.mlp.b2", cfg_.branch_dim);
    {
        Rng rng = root.derive("bra.q0");
        Tensor q0 = Tensor::zeros({1, cfg_.branch_dim});
        for (double& v : q0.data) v = 0.02 * rng.normal();
        store_.add("bra.q0", std::move(q0));
    }
    mat("bra.tok.w", cfg_.encoder_dim, cfg_.branch_dim);
    bias("bra.tok.b", cfg_.branch_dim);
    attention("bra.att");

    mat("brb.pool.w", cfg_.encoder_dim, cfg_.branch_dim);
    bias("brb.pool.b", cfg_.branch_dim);
    mat("brb.g1.w", 2 * cfg_.levels, cfg_.branch_dim);
    bias("brb.g1.b", cfg_.branch_dim);
    mat("brb.g2.w", 2 * cfg_.levels, cfg_.branch_dim);
    bias("brb.g2.b", cfg_.branch_dim);
    attention("brb.att");

    mat("cls.w1", 2 * cfg_.branch_dim, cfg_.classifier_hidden);
    bias("cls.b1", cfg_.classifier_hidden);
    mat("cls.w2", cfg_.classifier_hidden, cfg_.num_classes);
    bias("cls.b2", cfg_.num_classes);

    mat("head.motion.w", 2 * cfg_.branch_dim, cfg_.joint_dim);
    mat("head.text.w", cfg_.text_dim, cfg_.joint_dim);
}

Model::Model(ModelConfig cfg, uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    register_params(seed);
}

Model::Model(ModelConfig cfg, ParamStore weights, std::vector<std::string> classes)
    : class_names(std::move(classes)), cfg_(cfg), store_(std::move(weights)) {
    cfg_.validate();
    // structural check against a freshly shaped model
    Model reference(cfg_, 0);
    const ParamStore& expect = reference.params();
    for (int i = 0; i < expect.size(); ++i) {
        const int j = store_.index_of(expect.name(i));
        if (j < 0) throw std::invalid_argument("model weights: missing parameter " + expect.name(i));
        if (store_.value(j).shape != expect.value(i).shape)
            throw std::invalid_argument("model weights: shape mismatch for " + expect.name(i));
    }
    if (store_.size() != expect.size())
        throw std::invalid_argument("model weights: unexpected extra parameters");
}

Var Model::param(Tape& tape, const std::string& name) const {
    const int idx = store_.index_of(name);
    if (idx < 0) throw std::logic_error("model: unknown parameter " + name);
    return tape.param(idx, &store_.value(idx));
}

ViewStats compute_view_stats(const ProjectedView& view) {
    double sum_u = 0, sum_v = 0;
    int n_mid = 0;
    double all_u = 0, all_v = 0;
    int n_all = 0;
    for (int t = 0; t < view.frames; ++t) {
        for (int j = 0; j < kJoints; ++j)
            if (view.visible(t, j)) {
                all_u += view.u(t, j);
                all_v += view.v(t, j);
                ++n_all;
            }
        if (view.visible(t, kLeftHip) && view.visible(t, kRightHip)) {
            sum_u += 0.5 * (view.u(t, kLeftHip) + view.u(t, kRightHip));
            sum_v += 0.5 * (view.v(t, kLeftHip) + view.v(t, kRightHip));
            ++n_mid;
        }
    }
    if (n_all == 0) throw DegenerateInput("encode_motion: all joints invisible");

    ViewStats st;
    if (n_mid > 0) {
        st.center_u = sum_u / n_mid;
        st.center_v = sum_v / n_mid;
    } else {
        st.center_u = all_u / n_all;
        st.center_v = all_v / n_all;
    }

    double torso = 0;
    int n_torso = 0;
    for (int t = 0; t < view.frames; ++t) {
        if (view.visible(t, kLeftShoulder) && view.visible(t, kRightShoulder) &&
            view.visible(t, kLeftHip) && view.visible(t, kRightHip)) {
            const double msu = 0.5 * (view.u(t, kLeftShoulder) + view.u(t, kRightShoulder));
            const double msv = 0.5 * (view.v(t, kLeftShoulder) + view.v(t, kRightShoulder));
            const double mhu = 0.5 * (view.u(t, kLeftHip) + view.u(t, kRightHip));
            const double mhv = 0.5 * (view.v(t, kLeftHip) + view.v(t, kRightHip));
            torso += std::hypot(msu - mhu, msv - mhv);
            ++n_torso;
        }
    }
    if (n_torso > 0 && torso / n_torso > 1e-6) {
        st.scale = torso / n_torso;
    } else {
        double rms = 0;
        for (int t = 0; t < view.frames; ++t)
            for (int j = 0; j < kJoints; ++j)
                if (view.visible(t, j)) {
                    const double du = view.u(t, j) - st.center_u;
                    const double dv = view.v(t, j) - st.center_v;
                    rms += du * du + dv * dv;
                }
        rms = std::sqrt(rms / n_all);
        st.scale = rms > 1e-9 ? rms : 1.0;
    }
    return st;
}

Var Model::graph_tokens(Tape& tape, const ProjectedView& view, Var* pooled_out) const {
    if (view.frames < 1) throw std::invalid_argument("encode_motion: empty view");
    const ViewStats st = compute_view_stats(view);
    const int t_frames = view.frames;

    // per-joint input features: masked centered coordinates plus the mask bit
    Tensor x = Tensor::zeros({t_frames * kJoints, 3});
    for (int t = 0; t < t_frames; ++t)
        for (int j = 0; j < kJoints; ++j) {
            if (!view.visible(t, j)) continue;
            const size_t row = static_cast<size_t>(t) * kJoints + j;
            x.data[row * 3] = (view.u(t, j) - st.center_u) / st.scale;
            x.data[row * 3 + 1] = (view.v(t, j) - st.center_v) / st.scale;
            x.data[row * 3 + 2] = 1.0;
        }

    const Tensor& adj = coco_adjacency();
    Var h = tape.constant(std::move(x));
    h = tape.joint_mix(h, adj, kJoints);
    h = tape.relu(tape.add_bias(tape.matmul(h, param(tape, "enc.gcn1.w")), param(tape, "enc.gcn1.b")));
    h = tape.joint_mix(h, adj, kJoints);
    h = tape.relu(tape.add_bias(tape.matmul(h, param(tape, "enc.gcn2.w")), param(tape, "enc.gcn2.b")));

    std::vector<std::pair<int, int>> frame_segs(static_cast<size_t>(t_frames));
    for (int t = 0; t < t_frames; ++t) frame_segs[static_cast<size_t>(t)] = {t * kJoints, (t + 1) * kJoints};
    Var frames = tape.segment_mean(h, frame_segs);  // T x D_e

    Var conv = tape.relu(tape.temporal_conv(frames, param(tape, "enc.tconv.w"),
                                            param(tape, "enc.tconv.b"), cfg_.encoder_dim,
                                            cfg_.encoder_dim, cfg_.conv_kernel, cfg_.conv_stride));
    const int t2 = conv.rows();
    std::vector<std::pair<int, int>> token_segs(static_cast<size_t>(cfg_.tokens));
    for (int i = 0; i < cfg_.tokens; ++i) {
        int lo = static_cast<int>(static_cast<int64_t>(i) * t2 / cfg_.tokens);
        int hi = static_cast<int>(static_cast<int64_t>(i + 1) * t2 / cfg_.tokens);
        lo = std::min(lo, t2 - 1);
        hi = std::max(hi, lo + 1);
        token_segs[static_cast<size_t>(i)] = {lo, hi};
    }
    Var tokens = tape.segment_mean(conv, token_segs);  // T' x D_e
    if (pooled_out)
        *pooled_out = tape.masked_mean(tokens, Tensor::full({cfg_.tokens}, 1.0));
    return tokens;
}

Var Model::graph_cross_attention(Tape& tape, Var q, Var k, Var v, const std::string& prefix) const {
    Var qq = tape.add_bias(tape.matmul(q, param(tape, prefix + ".wq")), param(tape, prefix + ".bq"));
    Var kk = tape.add_bias(tape.matmul(k, param(tape, prefix + ".wk")), param(tape, prefix + ".bk"));
    Var vv = tape.add_bias(tape.matmul(v, param(tape, prefix + ".wv")), param(tape, prefix + ".bv"));
    const int dh = cfg_.branch_dim / cfg_.heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Var heads_out;
    for (int h = 0; h < cfg_.heads; ++h) {
        Var qh = tape.slice_cols(qq, h * dh, (h + 1) * dh);
        Var kh = tape.slice_cols(kk, h * dh, (h + 1) * dh);
        Var vh = tape.slice_cols(vv, h * dh, (h + 1) * dh);
        Var attn = tape.row_softmax(tape.affine(tape.matmul(qh, tape.transpose(kh)), scale, 0.0));
        Var oh = tape.matmul(attn, vh);
        heads_out = h == 0 ? oh : tape.concat_cols(heads_out, oh);
    }
    return tape.add_bias(tape.matmul(heads_out, param(tape, prefix + ".wo")),
                         param(tape, prefix + ".bo"));
}

Tensor Model::gamma_tensor(double theta_deg) const {
    const OrientationEncoding enc = positional_encode(normalize_orientation(theta_deg), cfg_.levels);
    return Tensor({1, 2 * cfg_.levels}, enc.gamma);
}

Var Model::graph_branch_a(Tape& tape, const Tensor& gamma, Var tokens) const {
    Var g = tape.constant(gamma);
    Var h = tape.relu(
        tape.add_bias(tape.matmul(g, param(tape, "bra.mlp.w1")), param(tape, "bra.mlp.b1")));
    h = tape.add_bias(tape.matmul(h, param(tape, "bra.mlp.w2")), param(tape, "bra.mlp.b2"));
    Var q = tape.add(param(tape, "bra.q0"), h);
    Var kv = tape.add_bias(tape.matmul(tokens, param(tape, "bra.tok.w")), param(tape, "bra.tok.b"));
    return graph_cross_attention(tape, q, kv, kv, "bra.att");
}

Var Model::graph_branch_b(Tape& tape, Var pooled, const Tensor& gamma) const {
    Var q = tape.add_bias(tape.matmul(pooled, param(tape, "brb.pool.w")), param(tape, "brb.pool.b"));
    Var g = tape.constant(gamma);
    Var t1 = tape.add_bias(tape.matmul(g, param(tape, "brb.g1.w")), param(tape, "brb.g1.b"));
    Var t2 = tape.add_bias(tape.matmul(g, param(tape, "brb.g2.w")), param(tape, "brb.g2.b"));
    Var kv = tape.concat_rows(t1, t2);
    return graph_cross_attention(tape, q, kv, kv, "brb.att");
}

Var Model::graph_motion_embedding(Tape& tape, const ProjectedView& view) const {
    Var pooled;
    Var tokens = graph_tokens(tape, view, &pooled);
    const Tensor gamma = gamma_tensor(view.theta_deg);
    Var h_a = graph_branch_a(tape, gamma, tokens);
    Var h_b = graph_branch_b(tape, pooled, gamma);
    return tape.concat_cols(h_a, h_b);
}

Var Model::graph_joint_from_motion(Tape& tape, Var m) const {
    return tape.l2_normalize(tape.matmul(m, param(tape, "head.motion.w")));
}

Var Model::graph_joint_from_text(Tape& tape, const Tensor& t) const {
    if (t.numel() != cfg_.text_dim)
        throw std::invalid_argument("joint_from_text: text embedding dim mismatch");
    Tensor row = t;
    row.shape = {1, cfg_.text_dim};
    return tape.l2_normalize(tape.matmul(tape.constant(std::move(row)), param(tape, "head.text.w")));
}

Var Model::graph_logits(Tape& tape, Var m) const {
    Var h = tape.relu(tape.add_bias(tape.matmul(m, param(tape, "cls.w1")), param(tape, "cls.b1")));
    return tape.add_bias(tape.matmul(h, param(tape, "cls.w2")), param(tape, "cls.b2"));
}

MotionTokens Model::encode_motion(const ProjectedView& view) const {
    Tape tape;
    Var pooled;
    Var tokens = graph_tokens(tape, view, &pooled);
    return {tokens.val(), pooled.val()};
}

Tensor Model::orientation_as_query(const OrientationEncoding& gamma, const MotionTokens& tokens) const {
    if (static_cast<int>(gamma.gamma.size()) != 2 * cfg_.levels)
        throw std::invalid_argument("orientation_as_query: encoding length mismatch");
    Tape tape;
    Var tok = tape.constant(tokens.tokens);
    return graph_branch_a(tape, Tensor({1, 2 * cfg_.levels}, gamma.gamma), tok).val();
}

Tensor Model::motion_as_query(const Tensor& pooled, const OrientationEncoding& gamma) const {
    if (static_cast<int>(gamma.gamma.size()) != 2 * cfg_.levels)
        throw std::invalid_argument("motion_as_query: encoding length mismatch");
    if (pooled.numel() != cfg_.encoder_dim)
        throw std::invalid_argument("motion_as_query: pooled feature dim mismatch");
    Tape tape;
    Tensor row = pooled;
    row.shape = {1, cfg_.encoder_dim};
    Var p = tape.constant(std::move(row));
    return graph_branch_b(tape, p, Tensor({1, 2 * cfg_.levels}, gamma.gamma)).val();
}

MotionEmbedding Model::embed_view(const ProjectedView& view) const {
    Tape tape;
    Var m = graph_motion_embedding(tape, view);
    Var m_hat = tape.l2_normalize(m);
    return {m.val(), m_hat.val()};
}

ClassLogits Model::classify(const MotionEmbedding& m) const {
    Tape tape;
    Var mv = tape.constant(m.m);
    return {graph_logits(tape, mv).val()};
}

Tensor Model::project_motion_embedding(const Tensor& m) const {
    if (m.numel() != 2 * cfg_.branch_dim)
        throw std::invalid_argument("project_motion_embedding: dim mismatch");
    Tape tape;
    Tensor row = m;
    row.shape = {1, 2 * cfg_.branch_dim};
    return graph_joint_from_motion(tape, tape.constant(std::move(row))).val();
}

Tensor Model::project_text_embedding(const Tensor& t) const {
    Tape tape;
    return graph_joint_from_text(tape, t).val();
}

AttentionWeights Model::attention_weights(const std::string& prefix) const {
    AttentionWeights w;
    w.heads = cfg_.heads;
    w.wq = store_.value(store_.index_of(prefix + ".wq"));
    w.bq = store_.value(store_.index_of(prefix + ".bq"));
    w.wk = store_.value(store_.index_of(prefix + ".wk"));
    w.bk = store_.value(store_.index_of(prefix + ".bk"));
    w.wv = store_.value(store_.index_of(prefix + ".wv"));
    w.bv = store_.value(store_.index_of(prefix + ".bv"));
    w.wo = store_.value(store_.index_of(prefix + ".wo"));
    w.bo = store_.value(store_.index_of(prefix + ".bo"));
    return w;
}

Tensor cross_attention(const Tensor& queries, const Tensor& keys, const Tensor& values,
                       const AttentionWeights& w) {
    const int d = w.wq.rows();
    if (queries.cols() != d || keys.cols() != d || values.cols() != d)
        throw std::invalid_argument("cross_attention: input dim mismatch");
    if (keys.rows() != values.rows())
        throw std::invalid_argument("cross_attention: key/value row mismatch");
    if (w.heads < 1 || w.wq.cols() % w.heads != 0)
        throw std::invalid_argument("cross_attention: dim not divisible by heads");

    auto lin = [](const Tensor& x, const Tensor& ww, const Tensor& bb) {
        Tensor y = Tensor::zeros({x.rows(), ww.cols()});
        matmul_acc(x.data.data(), ww.data.data(), y.data.data(), x.rows(), x.cols(), ww.cols());
        for (int r = 0; r < y.rows(); ++r)
            for (int c = 0; c < y.cols(); ++c) y.at(r, c) += bb.data[static_cast<size_t>(c)];
        return y;
    };
    const Tensor qq = lin(queries, w.wq, w.bq);
    const Tensor kk = lin(keys, w.wk, w.bk);
    const Tensor vv = lin(values, w.wv, w.bv);

    const int dm = w.wq.cols();
    const int dh = dm / w.heads;
    const int nq = qq.rows(), s = kk.rows();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Tensor concat = Tensor::zeros({nq, dm});
    std::vector<double> scores(static_cast<size_t>(s));
    for (int h = 0; h < w.heads; ++h) {
        for (int r = 0; r < nq; ++r) {
            double mx = -1e300;
            for (int i = 0; i < s; ++i) {
                double dp = 0;
                for (int c = 0; c < dh; ++c) dp += qq.at(r, h * dh + c) * kk.at(i, h * dh + c);
                scores[static_cast<size_t>(i)] = dp * scale;
                mx = std::max(mx, scores[static_cast<size_t>(i)]);
            }
            double z = 0;
            for (int i = 0; i < s; ++i) {
                scores[static_cast<size_t>(i)] = std::exp(scores[static_cast<size_t>(i)] - mx);
                z += scores[static_cast<size_t>(i)];
            }
            for (int i = 0; i < s; ++i)
                for (int c = 0; c < dh; ++c)
                    concat.at(r, h * dh + c) += scores[static_cast<size_t>(i)] / z * vv.at(i, h * dh + c);
        }
    }
    return lin(concat, w.wo, w.bo);
}

MotionEmbedding fuse_branches(const Tensor& h_a, const Tensor& h_b) {
    if (h_a.numel() != h_b.numel())
        throw std::invalid_argument("fuse_branches: branch dim mismatch");
    MotionEmbedding e;
    e.m = Tensor::zeros({1, static_cast<int>(h_a.numel() + h_b.numel())});
    std::copy(h_a.data.begin(), h_a.data.end(), e.m.data.begin());
    std::copy(h_b.data.begin(), h_b.data.end(), e.m.data.begin() + h_a.data.size());
    const double n = l2_norm(e.m);
    if (n < 1e-12) throw DegenerateInput("fuse_branches: zero-norm embedding");
    e.m_hat = e.m;
    for (double& v : e.m_hat.data) v /= n;
    return e;
}

}  // namespace oazr
