#include "oazr/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "oazr/error.hpp"

namespace oazr {

namespace {
void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}
}  // namespace

const Tensor& Var::val() const { return tape->nodes_[static_cast<size_t>(idx)].value(); }

// c (mxn) += a (mxk) . b (kxn)
void matmul_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* ar = a + static_cast<size_t>(i) * k;
        double* cr = c + static_cast<size_t>(i) * n;
        for (int l = 0; l < k; ++l) {
            const double av = ar[l];
            if (av == 0.0) continue;
            const double* br = b + static_cast<size_t>(l) * n;
            for (int j = 0; j < n; ++j) cr[j] += av * br[j];
        }
    }
}

// c (mxk) += a (mxn) . b^T, with b stored (kxn)
void matmul_acc_bt(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* ar = a + static_cast<size_t>(i) * n;
        double* cr = c + static_cast<size_t>(i) * k;
        for (int j = 0; j < k; ++j) {
            const double* br = b + static_cast<size_t>(j) * n;
            double s = 0.0;
            for (int l = 0; l < n; ++l) s += ar[l] * br[l];
            cr[j] += s;
        }
    }
}

// c (kxn) += a^T . b, with a stored (mxk), b stored (mxn)
void matmul_acc_at(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* ar = a + static_cast<size_t>(i) * k;
        const double* br = b + static_cast<size_t>(i) * n;
        for (int j = 0; j < k; ++j) {
            const double av = ar[j];
            if (av == 0.0) continue;
            double* cr = c + static_cast<size_t>(j) * n;
            for (int l = 0; l < n; ++l) cr[l] += av * br[l];
        }
    }
}

Var Tape::push(Tensor value, bool needs_grad, std::function<void()> back) {
    Node n;
    n.owned = std::move(value);
    n.needs_grad = needs_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(int param_id, const Tensor* value) {
    require(value != nullptr, "param: null value");
    Node n;
    n.ext = value;
    n.needs_grad = true;
    n.param_id = param_id;
    nodes_.push_back(std::move(n));
    int idx = static_cast<int>(nodes_.size()) - 1;
    param_nodes_.push_back(idx);
    return Var{this, idx};
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::add(Var a, Var b) {
    const Tensor& av = value(a.idx);
    const Tensor& bv = value(b.idx);
    require(av.same_shape(bv), "add: shape mismatch");
    Tensor y = av;
    for (size_t i = 0; i < y.data.size(); ++i) y.data[i] += bv.data[i];
    bool ng = needs(a.idx) || needs(b.idx);
    int ai = a.idx, bi = b.idx;
    Var out = push(std::move(y), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, ai, bi, oi] {
            const Tensor& g = grad_ref(oi);
            if (needs(ai)) axpy(1.0, g, grad_ref(ai));
            if (needs(bi)) axpy(1.0, g, grad_ref(bi));
        };
    return out;
}

Var Tape::sub(Var a, Var b) {
    const Tensor& av = value(a.idx);
    const Tensor& bv = value(b.idx);
    require(av.same_shape(bv), "sub: shape mismatch");
    Tensor y = av;
    for (size_t i = 0; i < y.data.size(); ++i) y.data[i] -= bv.data[i];
    bool ng = needs(a.idx) || needs(b.idx);
    int ai = a.idx, bi = b.idx;
    Var out = push(std::move(y), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, ai, bi, oi] {
            const Tensor& g = grad_ref(oi);
            if (needs(ai)) axpy(1.0, g, grad_ref(ai));
            if (needs(bi)) axpy(-1.0, g, grad_ref(bi));
        };
    return out;
}

Var Tape::mul(Var a, Var b) {
    const Tensor& av = value(a.idx);
    const Tensor& bv = value(b.idx);
    require(av.same_shape(bv), "mul: shape mismatch");
    Tensor y = av;
    for (size_t i = 0; i < y.data.size(); ++i) y.data[i] *= bv.data[i];
    bool ng = needs(a.idx) || needs(b.idx);
    int ai = a.idx, bi = b.idx;
    Var out = push(std::move(y), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, ai, bi, oi] {
            const Tensor& g = grad_ref(oi);
            if (needs(ai)) {
                const Tensor& bv2 = value(bi);
                Tensor& ga = grad_ref(ai);
                for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] * bv2.data[i];
            }
            if (needs(bi)) {
                const Tensor& av2 = value(ai);
                Tensor& gb = grad_ref(bi);
                for (size_t i = 0; i < g.data.size(); ++i) gb.data[i] += g.data[i] * av2.data[i];
            }
        };
    return out;
}

Var Tape::affine(Var x, double alpha, double beta) {
    Tensor y = value(x.idx);
    for (double& v : y.data) v = alpha * v + beta;
    bool ng = needs(x.idx);
    int xi = x.idx;
    Var out = push(std::move(y), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, xi, oi, alpha] { axpy(alpha, grad_ref(oi), grad_ref(xi)); };
    return out;
}

Var Tape::add_bias(Var x, Var b) {
    const Tensor& xv = value(x.idx);
    const Tensor& bv = value(b.idx);
    require(bv.rows() == 1 && bv.cols() == xv.cols(), "add_bias: bias shape mismatch");
    Tensor y = xv;
    const int rows = xv.rows(), cols = xv.cols();
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) y.data[static_cast<size_t>(r) * cols + c] += bv.data[c];
    bool ng = needs(x.idx) || needs(b.idx);
    int xi = x.idx, bi = b.idx;
    Var out = push(std::move(y), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, xi, bi, oi, rows, cols] {
            const Tensor& g = grad_ref(oi);
            if (needs(xi)) axpy(1.0, g, grad_ref(xi));
            if (needs(bi)) {
                Tensor& gb = grad_ref(bi);
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < cols; ++c)
                        gb.data[c] += g.data[static_cast<size_t>(r) * cols + c];
            }
        };
    return out;
}

Var Tape::matmul(Var a, Var b) {
    const Tensor& av = value(a.idx);
    const Tensor& bv = value(b.idx);
    require(av.rank() <= 2 && bv.rank() <= 2, "matmul: rank > 2");
    const int m = av.rows(), k = av.cols(), k2 = bv.rows(), n = bv.cols();
    require(k == k2, "matmul: inner dimension mismatch");
    Tensor y = Tensor::zeros({m, n});
    matmul_acc(av.data.data(), bv.data.data(), y.data.data(), m, k, n);
    bool ng = needs(a.idx) || needs(b.idx);
    int ai = a.idx, bi = b.idx;
    Var out = push(std::move(y), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, ai, bi, oi, m, k, n] {
            const Tensor& g = grad_ref(oi);
            if (needs(ai))
                matmul_acc_bt(g.data.data(), value(bi).data.data(), grad_ref(ai).data.data(), m, k, n);
            if (needs(bi))
                matmul_acc_at(value(ai).data.data(), g.data.data(), grad_ref(bi).data.data(), m, k, n);
        };
    return out;
}

Var Tape::transpose(Var x) {
    const Tensor& xv = value(x.idx);
    const int r = xv.rows(), c = xv.cols();
    Tensor y = Tensor::zeros({c, r});
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) y.data[static_cast<size_t>(j) * r + i] = xv.data[static_cast<size_t>(i) * c + j];
    bool ng = needs(x.idx);
    int xi = x.idx;
    Var out = push(std::move(y), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, xi, oi, r, c] {
            const Tensor& g = grad_ref(oi);
            Tensor& gx = grad_ref(xi);
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j)
                    gx.data[static_cast<size_t>(i) * c + j] += g.data[static_cast<size_t>(j) * r + i];
        };
    return out;
}

Var Tape::slice_cols(Var x, int lo, int hi) {
    const Tensor& xv = value(x.idx);
    const int rows = xv.rows(), cols = xv.cols();
    require(0 <= lo && lo < hi && hi <= cols, "slice_cols: bad range");
    const int w = hi - lo;
    Tensor y = Tensor::zeros({rows, w});
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < w; ++c)
            y.data[static_cast<size_t>(r) * w + c] = xv.data[static_cast<size_t>(r) * cols + lo + c];
    bool ng = needs(x.idx);
    int xi = x.idx;
    Var out = push(std::move(y), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, xi, oi, rows, cols, lo, w] {
            const Tensor& g = grad_ref(oi);
            Tensor& gx = grad_ref(xi);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < w; ++c)
                    gx.data[static_cast<size_t>(r) * cols + lo + c] += g.data[static_cast<size_t>(r) * w + c];
        };
    return out;
}

Var Tape::concat_cols(Var a, Var b) {
    const Tensor& av = value(a.idx);
    const Tensor& bv = value(b.idx);
    require(av.rows() == bv.rows(), "concat_cols: row mismatch");
    const int rows = av.rows(), ca = av.cols(), cb = bv.cols();
    Tensor y = Tensor::zeros({rows, ca + cb});
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < ca; ++c)
            y.data[static_cast<size_t>(r) * (ca + cb) + c] = av.data[static_cast<size_t>(r) * ca + c];
        for (int c = 0; c < cb; ++c)
            y.data[static_cast<size_t>(r) * (ca + cb) + ca + c] = bv.data[static_cast<size_t>(r) * cb + c];
    }
    bool ng = needs(a.idx) || needs(b.idx);
    int ai = a.idx, bi = b.idx;
    Var out = push(std::move(y), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, ai, bi, oi, rows, ca, cb] {
            const Tensor& g = grad_ref(oi);
            if (needs(ai)) {
                Tensor& ga = grad_ref(ai);
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < ca; ++c)
                        ga.data[static_cast<size_t>(r) * ca + c] += g.data[static_cast<size_t>(r) * (ca + cb) + c];
            }
            if (needs(bi)) {
                Tensor& gb = grad_ref(bi);
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < cb; ++c)
                        gb.data[static_cast<size_t>(r) * cb + c] += g.data[static_cast<size_t>(r) * (ca + cb) + ca + c];
            }
        };
    return out;
}

Var Tape::concat_rows(Var a, Var b) {
    const Tensor& av = value(a.idx);
    const Tensor& bv = value(b.idx);
    require(av.cols() == bv.cols(), "concat_rows: column mismatch");
    const int ra = av.rows(), rb = bv.rows(), cols = av.cols();
    Tensor y = Tensor::zeros({ra + rb, cols});
    std::copy(av.data.begin(), av.data.end(), y.data.begin());
    std::copy(bv.data.begin(), bv.data.end(), y.data.begin() + av.data.size());
    bool ng = needs(a.idx) || needs(b.idx);
    int ai = a.idx, bi = b.idx;
    Var out = push(std::move(y), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, ai, bi, oi, ra, rb, cols] {
            const Tensor& g = grad_ref(oi);
            if (needs(ai)) {
                Tensor& ga = grad_ref(ai);
                for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += g.data[i];
            }
            if (needs(bi)) {
                Tensor& gb = grad_ref(bi);
                const size_t off = static_cast<size_t>(ra) * cols;
                for (size_t i = 0; i < gb.data.size(); ++i) gb.data[i] += g.data[off + i];
            }
        };
    return out;
}

Var Tape::row_softmax(Var x) {
    const Tensor& xv = value(x.idx);
    const int rows = xv.rows(), cols = xv.cols();
    require(cols >= 1, "row_softmax: empty rows");
    Tensor y = Tensor::zeros({rows, cols});
    for (int r = 0; r < rows; ++r) {
        const double* xr = xv.data.data() + static_cast<size_t>(r) * cols;
        double* yr = y.data.data() + static_cast<size_t>(r) * cols;
        double m = xr[0];
        for (int c = 1; c < cols; ++c) m = std::max(m, xr[c]);
        double s = 0.0;
        for (int c = 0; c < cols; ++c) {
            yr[c] = std::exp(xr[c] - m);
            s += yr[c];
        }
        for (int c = 0; c < cols; ++c) yr[c] /= s;
    }
    bool ng = needs(x.idx);
    int xi = x.idx;
    Var out = push(std::move(y), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, xi, oi, rows, cols] {
            const Tensor& g = grad_ref(oi);
            const Tensor& yv = value(oi);
            Tensor& gx = grad_ref(xi);
            for (int r = 0; r < rows; ++r) {
                const double* gr = g.data.data() + static_cast<size_t>(r) * cols;
                const double* yr = yv.data.data() + static_cast<size_t>(r) * cols;
                double dp = 0.0;
                for (int c = 0; c < cols; ++c) dp += gr[c] * yr[c];
                double* gxr = gx.data.data() + static_cast<size_t>(r) * cols;
                for (int c = 0; c < cols; ++c) gxr[c] += yr[c] * (gr[c] - dp);
            }
        };
    return out;
}

Var Tape::relu(Var x) {
    const Tensor& xv = value(x.idx);
    Tensor y = xv;
    for (double& v : y.data) v = v > 0.0 ? v : 0.0;
    if (kink_)
        for (double v : xv.data) kink_->push_back(v > 0.0 ? 1 : 0);
    bool ng = needs(x.idx);
    int xi = x.idx;
    Var out = push(std::move(y), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, xi, oi] {
            const Tensor& g = grad_ref(oi);
            const Tensor& xv2 = value(xi);
            Tensor& gx = grad_ref(xi);
            for (size_t i = 0; i < g.data.size(); ++i)
                if (xv2.data[i] > 0.0) gx.data[i] += g.data[i];
        };
    return out;
}

Var Tape::mean_pool(Var x) {
    const Tensor& xv = value(x.idx);
    const int rows = xv.rows(), cols = xv.cols();
    require(rows >= 1, "mean_pool: empty input");
    Tensor y = Tensor::zeros({1, cols});
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) y.data[c] += xv.data[static_cast<size_t>(r) * cols + c];
    for (int c = 0; c < cols; ++c) y.data[c] /= rows;
    bool ng = needs(x.idx);
    int xi = x.idx;
    Var out = push(std::move(y), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, xi, oi, rows, cols] {
            const Tensor& g = grad_ref(oi);
            Tensor& gx = grad_ref(xi);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c)
                    gx.data[static_cast<size_t>(r) * cols + c] += g.data[c] / rows;
        };
    return out;
}

Var Tape::segment_mean(Var x, const std::vector<std::pair<int, int>>& segments) {
    const Tensor& xv = value(x.idx);
    const int rows = xv.rows(), cols = xv.cols();
    const int s = static_cast<int>(segments.size());
    require(s >= 1, "segment_mean: no segments");
    for (auto [lo, hi] : segments)
        require(0 <= lo && lo < hi && hi <= rows, "segment_mean: bad segment");
    Tensor y = Tensor::zeros({s, cols});
    for (int i = 0; i < s; ++i) {
        auto [lo, hi] = segments[i];
        double* yr = y.data.data() + static_cast<size_t>(i) * cols;
        for (int r = lo; r < hi; ++r)
            for (int c = 0; c < cols; ++c) yr[c] += xv.data[static_cast<size_t>(r) * cols + c];
        for (int c = 0; c < cols; ++c) yr[c] /= (hi - lo);
    }
    bool ng = needs(x.idx);
    int xi = x.idx;
    Var out = push(std::move(y), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, xi, oi, segments, cols] {
            const Tensor& g = grad_ref(oi);
            Tensor& gx = grad_ref(xi);
            for (size_t i = 0; i < segments.size(); ++i) {
                auto [lo, hi] = segments[i];
                const double* gr = g.data.data() + i * cols;
                for (int r = lo; r < hi; ++r)
                    for (int c = 0; c < cols; ++c)
                        gx.data[static_cast<size_t>(r) * cols + c] += gr[c] / (hi - lo);
            }
        };
    return out;
}

Var Tape::masked_mean(Var x, const Tensor& mask) {
    const Tensor& xv = value(x.idx);
    const int rows = xv.rows(), cols = xv.cols();
    require(static_cast<int>(mask.numel()) == rows, "masked_mean: mask length mismatch");
    double wsum = 0.0;
    for (double m : mask.data) wsum += m;
    require(wsum > 1e-12, "masked_mean: mask sums to zero");
    Tensor y = Tensor::zeros({1, cols});
    for (int r = 0; r < rows; ++r) {
        const double m = mask.data[static_cast<size_t>(r)];
        if (m == 0.0) continue;
        for (int c = 0; c < cols; ++c) y.data[c] += m * xv.data[static_cast<size_t>(r) * cols + c];
    }
    for (int c = 0; c < cols; ++c) y.data[c] /= wsum;
    bool ng = needs(x.idx);
    int xi = x.idx;
    Var out = push(std::move(y), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, xi, oi, mask, wsum, rows, cols] {
            const Tensor& g = grad_ref(oi);
            Tensor& gx = grad_ref(xi);
            for (int r = 0; r < rows; ++r) {
                const double w = mask.data[static_cast<size_t>(r)] / wsum;
                if (w == 0.0) continue;
                for (int c = 0; c < cols; ++c)
                    gx.data[static_cast<size_t>(r) * cols + c] += w * g.data[c];
            }
        };
    return out;
}

Var Tape::joint_mix(Var x, const Tensor& adj, int joints) {
    const Tensor& xv = value(x.idx);
    const int rows = xv.rows(), cols = xv.cols();
    require(joints >= 1 && rows % joints == 0, "joint_mix: rows not a multiple of joint count");
    require(adj.rows() == joints && adj.cols() == joints, "joint_mix: adjacency shape mismatch");
    const int frames = rows / joints;
    Tensor y = Tensor::zeros({rows, cols});
    for (int t = 0; t < frames; ++t) {
        const size_t off = static_cast<size_t>(t) * joints * cols;
        matmul_acc(adj.data.data(), xv.data.data() + off, y.data.data() + off, joints, joints, cols);
    }
    bool ng = needs(x.idx);
    int xi = x.idx;
    Var out = push(std::move(y), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, xi, oi, adj, joints, frames, cols] {
            const Tensor& g = grad_ref(oi);
            Tensor& gx = grad_ref(xi);
            for (int t = 0; t < frames; ++t) {
                const size_t off = static_cast<size_t>(t) * joints * cols;
                matmul_acc_at(adj.data.data(), g.data.data() + off, gx.data.data() + off, joints,
                              joints, cols);
            }
        };
    return out;
}

Var Tape::temporal_conv(Var x, Var w, Var b, int in_ch, int out_ch, int kernel, int stride) {
    const Tensor& xv = value(x.idx);
    const Tensor& wv = value(w.idx);
    const Tensor& bv = value(b.idx);
    require(xv.cols() == in_ch, "temporal_conv: input channel mismatch");
    require(wv.rows() == out_ch && wv.cols() == in_ch * kernel, "temporal_conv: weight shape mismatch");
    require(bv.numel() == out_ch, "temporal_conv: bias shape mismatch");
    require(stride >= 1 && kernel >= 1, "temporal_conv: bad kernel/stride");
    const int t_in = xv.rows();
    const int t_out = (t_in + stride - 1) / stride;
    const int total_pad = std::max(0, (t_out - 1) * stride + kernel - t_in);
    const int pad_left = total_pad / 2;
    const int patch = in_ch * kernel;

    auto gather = [&](const Tensor& src, int to, std::vector<double>& p) {
        std::fill(p.begin(), p.end(), 0.0);
        for (int dt = 0; dt < kernel; ++dt) {
            const int ti = to * stride + dt - pad_left;
            if (ti < 0 || ti >= t_in) continue;
            for (int ci = 0; ci < in_ch; ++ci)
                p[static_cast<size_t>(ci) * kernel + dt] = src.data[static_cast<size_t>(ti) * in_ch + ci];
        }
    };

    Tensor y = Tensor::zeros({t_out, out_ch});
    std::vector<double> p(static_cast<size_t>(patch));
    for (int to = 0; to < t_out; ++to) {
        gather(xv, to, p);
        matmul_acc_bt(p.data(), wv.data.data(), y.data.data() + static_cast<size_t>(to) * out_ch, 1,
                      out_ch, patch);
        for (int co = 0; co < out_ch; ++co) y.data[static_cast<size_t>(to) * out_ch + co] += bv.data[co];
    }
    bool ng = needs(x.idx) || needs(w.idx) || needs(b.idx);
    int xi = x.idx, wi = w.idx, bi = b.idx;
    Var out = push(std::move(y), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, xi, wi, bi, oi, in_ch, out_ch, kernel, stride, t_in, t_out, pad_left,
                         patch, gather] {
            const Tensor& g = grad_ref(oi);
            const Tensor& xv2 = value(xi);
            const Tensor& wv2 = value(wi);
            std::vector<double> p(static_cast<size_t>(patch));
            std::vector<double> dp(static_cast<size_t>(patch));
            for (int to = 0; to < t_out; ++to) {
                const double* gr = g.data.data() + static_cast<size_t>(to) * out_ch;
                if (needs(bi)) {
                    Tensor& gb = grad_ref(bi);
                    for (int co = 0; co < out_ch; ++co) gb.data[co] += gr[co];
                }
                if (needs(wi)) {
                    gather(xv2, to, p);
                    Tensor& gw = grad_ref(wi);
                    for (int co = 0; co < out_ch; ++co) {
                        const double gv = gr[co];
                        if (gv == 0.0) continue;
                        double* gwr = gw.data.data() + static_cast<size_t>(co) * patch;
                        for (int j = 0; j < patch; ++j) gwr[j] += gv * p[static_cast<size_t>(j)];
                    }
                }
                if (needs(xi)) {
                    std::fill(dp.begin(), dp.end(), 0.0);
                    matmul_acc(gr, wv2.data.data(), dp.data(), 1, out_ch, patch);
                    Tensor& gx = grad_ref(xi);
                    for (int dt = 0; dt < kernel; ++dt) {
                        const int ti = to * stride + dt - pad_left;
                        if (ti < 0 || ti >= t_in) continue;
                        for (int ci = 0; ci < in_ch; ++ci)
                            gx.data[static_cast<size_t>(ti) * in_ch + ci] +=
                                dp[static_cast<size_t>(ci) * kernel + dt];
                    }
                }
            }
        };
    return out;
}

Var Tape::l2_normalize(Var x) {
    const Tensor& xv = value(x.idx);
    const double n = l2_norm(xv);
    if (n < 1e-12) throw DegenerateInput("l2_normalize: zero-norm vector");
    Tensor y = xv;
    for (double& v : y.data) v /= n;
    bool ng = needs(x.idx);
    int xi = x.idx;
    Var out = push(std::move(y), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, xi, oi, n] {
            const Tensor& g = grad_ref(oi);
            const Tensor& yv = value(oi);
            double dp = 0.0;
            for (size_t i = 0; i < g.data.size(); ++i) dp += g.data[i] * yv.data[i];
            Tensor& gx = grad_ref(xi);
            for (size_t i = 0; i < g.data.size(); ++i)
                gx.data[i] += (g.data[i] - yv.data[i] * dp) / n;
        };
    return out;
}

Var Tape::dot(Var a, Var b) {
    const Tensor& av = value(a.idx);
    const Tensor& bv = value(b.idx);
    require(av.numel() == bv.numel(), "dot: size mismatch");
    Tensor y = Tensor::scalar(dot_value(av, bv));
    bool ng = needs(a.idx) || needs(b.idx);
    int ai = a.idx, bi = b.idx;
    Var out = push(std::move(y), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, ai, bi, oi] {
            const double g = grad_ref(oi).data[0];
            if (needs(ai)) axpy(g, value(bi), grad_ref(ai));
            if (needs(bi)) axpy(g, value(ai), grad_ref(bi));
        };
    return out;
}

Var Tape::sum(Var x) {
    const Tensor& xv = value(x.idx);
    double s = 0.0;
    for (double v : xv.data) s += v;
    bool ng = needs(x.idx);
    int xi = x.idx;
    Var out = push(Tensor::scalar(s), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, xi, oi] {
            const double g = grad_ref(oi).data[0];
            Tensor& gx = grad_ref(xi);
            for (double& v : gx.data) v += g;
        };
    return out;
}

Var Tape::cross_entropy(Var logits, int label) {
    const Tensor& lv = value(logits.idx);
    const int k = static_cast<int>(lv.numel());
    require(label >= 0 && label < k, "cross_entropy: label out of range");
    double m = lv.data[0];
    for (int c = 1; c < k; ++c) m = std::max(m, lv.data[static_cast<size_t>(c)]);
    double s = 0.0;
    for (int c = 0; c < k; ++c) s += std::exp(lv.data[static_cast<size_t>(c)] - m);
    const double lse = m + std::log(s);
    Tensor y = Tensor::scalar(lse - lv.data[static_cast<size_t>(label)]);
    bool ng = needs(logits.idx);
    int li = logits.idx;
    Var out = push(std::move(y), ng, nullptr);
    int oi = out.idx;
    if (ng)
        node(oi).back = [this, li, oi, label, k, m, s] {
            const double g = grad_ref(oi).data[0];
            const Tensor& lv2 = value(li);
            Tensor& gl = grad_ref(li);
            for (int c = 0; c < k; ++c) {
                const double p = std::exp(lv2.data[static_cast<size_t>(c)] - m) / s;
                gl.data[static_cast<size_t>(c)] += g * (p - (c == label ? 1.0 : 0.0));
            }
        };
    return out;
}

void Tape::backward(Var loss) {
    if (nodes_.empty()) throw std::logic_error("backward without forward");
    if (ran_backward_) throw std::logic_error("backward already ran on this tape");
    if (loss.tape != this || loss.idx < 0 || loss.idx >= static_cast<int>(nodes_.size()))
        throw std::invalid_argument("backward: loss not on this tape");
    if (value(loss.idx).numel() != 1) throw std::invalid_argument("backward: loss must be scalar");
    ran_backward_ = true;

    for (int i = 0; i <= loss.idx; ++i) {
        Node& n = nodes_[static_cast<size_t>(i)];
        if (n.needs_grad) n.grad = Tensor::zeros(n.value().shape);
    }
    if (!node(loss.idx).needs_grad) node(loss.idx).grad = Tensor::zeros(value(loss.idx).shape);
    node(loss.idx).grad.data[0] = 1.0;

    for (int i = loss.idx; i >= 0; --i) {
        Node& n = nodes_[static_cast<size_t>(i)];
        if (n.needs_grad && n.back) n.back();
    }
}

const Tensor& Tape::grad(Var v) const {
    if (!ran_backward_) throw std::logic_error("grad: backward has not run");
    const Node& n = node(v.idx);
    if (n.grad.data.empty()) throw std::logic_error("grad: no gradient tracked for this node");
    return n.grad;
}

void Tape::collect_param_grads(std::vector<Tensor>& out) const {
    if (!ran_backward_) throw std::logic_error("collect_param_grads: backward has not run");
    for (int idx : param_nodes_) {
        const Node& n = node(idx);
        if (n.param_id < 0 || n.param_id >= static_cast<int>(out.size()))
            throw std::logic_error("collect_param_grads: param_id out of range");
        if (!n.grad.data.empty()) axpy(1.0, n.grad, out[static_cast<size_t>(n.param_id)]);
    }
}

}  // namespace oazr
