#pragma once

#include <functional>
#include <vector>

#include "oazr/tensor.hpp"

namespace oazr {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
struct Var {
    Tape* tape = nullptr;
    int idx = -1;

    const Tensor& val() const;
    int rows() const { return val().rows(); }
    int cols() const { return val().cols(); }
};

// Reverse-mode tape. Forward calls append nodes; backward() walks the tape in
// reverse and accumulates exact gradients. One tape per forward pass; a tape
// is single-threaded by construction.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // --- leaves ------------------------------------------------------------
    // Trainable parameter; value stays owned by the caller (must outlive the
    // tape). param_id keys gradient collection.
    Var param(int param_id, const Tensor* value);
    // Constant input; gradients do not flow into it.
    Var constant(Tensor value);

    // --- primitive suite ----------------------------------------------------
    Var add(Var a, Var b);                      // elementwise, same shape
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);                      // elementwise, same shape
    Var affine(Var x, double alpha, double beta);  // alpha*x + beta
    Var add_bias(Var x, Var b);                 // x: NxC, b: 1xC
    Var matmul(Var a, Var b);                   // MxK @ KxN
    Var transpose(Var x);
    Var slice_cols(Var x, int lo, int hi);
    Var concat_cols(Var a, Var b);
    Var concat_rows(Var a, Var b);
    Var row_softmax(Var x);                     // max-subtracted, rows sum to 1
    Var relu(Var x);
    Var mean_pool(Var x);                       // NxC -> 1xC mean over rows
    Var segment_mean(Var x, const std::vector<std::pair<int, int>>& segments);  // [lo,hi) rows
    Var masked_mean(Var x, const Tensor& mask); // mask: N weights (constant)
    Var joint_mix(Var x, const Tensor& adj, int joints);  // (T*J)xC, adj: JxJ constant
    Var temporal_conv(Var x, Var w, Var b, int in_ch, int out_ch, int kernel, int stride);
    Var l2_normalize(Var x);                    // any shape, flattened norm
    Var dot(Var a, Var b);                      // 1xC . 1xC -> scalar
    Var sum(Var x);                             // -> scalar
    Var cross_entropy(Var logits, int label);   // -log softmax[label]

    // --- reverse pass -------------------------------------------------------
    void backward(Var loss);
    const Tensor& grad(Var v) const;
    // Adds each parameter leaf's gradient into out[param_id]; out tensors must
    // already have matching shapes (zero-filled by the caller).
    void collect_param_grads(std::vector<Tensor>& out) const;

    // Kink tracing: when set, relu appends one sign byte per element to the
    // trace. grad_check compares traces of the two perturbed evaluations and
    // skips samples that cross an activation kink.
    void set_kink_trace(std::vector<uint8_t>* trace) { kink_ = trace; }

    size_t size() const { return nodes_.size(); }

private:
    friend struct Var;

    struct Node {
        Tensor owned;
        const Tensor* ext = nullptr;  // set for parameter leaves
        Tensor grad;
        std::function<void()> back;  // empty for leaves/constants
        bool needs_grad = false;
        int param_id = -1;

        const Tensor& value() const { return ext ? *ext : owned; }
    };

    std::vector<Node> nodes_;
    std::vector<int> param_nodes_;
    std::vector<uint8_t>* kink_ = nullptr;
    bool ran_backward_ = false;

    Node& node(int i) { return nodes_[static_cast<size_t>(i)]; }
    const Node& node(int i) const { return nodes_[static_cast<size_t>(i)]; }
    const Tensor& value(int i) const { return nodes_[static_cast<size_t>(i)].value(); }
    Tensor& grad_ref(int i) { return nodes_[static_cast<size_t>(i)].grad; }
    bool needs(int i) const { return nodes_[static_cast<size_t>(i)].needs_grad; }

    Var push(Tensor value, bool needs_grad, std::function<void()> back);
};

// y += a * x, elementwise over flat storage.
inline void axpy(double a, const Tensor& x, Tensor& y) {
    const size_t n = x.data.size();
    for (size_t i = 0; i < n; ++i) y.data[i] += a * x.data[i];
}

// Dense kernels shared by forward and backward passes (row-major).
void matmul_acc(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_acc_bt(const double* a, const double* bt, double* c, int m, int k, int n);
void matmul_acc_at(const double* at, const double* b, double* c, int m, int k, int n);

}  // namespace oazr
