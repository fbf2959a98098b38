#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "oazr/rng.hpp"
#include "oazr/tensor.hpp"

namespace oazr {

// Named parameters with mirrored gradient buffers. Indices are stable after
// add(); checkpoint order is sorted by name.
class ParamStore {
public:
    int add(const std::string& name, Tensor init);
    int index_of(const std::string& name) const;  // -1 if absent
    int size() const { return static_cast<int>(values_.size()); }

    const std::string& name(int i) const { return names_[static_cast<size_t>(i)]; }
    Tensor& value(int i) { return values_[static_cast<size_t>(i)]; }
    const Tensor& value(int i) const { return values_[static_cast<size_t>(i)]; }
    Tensor& value(const std::string& name);
    Tensor& grad(int i) { return grads_[static_cast<size_t>(i)]; }
    const Tensor& grad(int i) const { return grads_[static_cast<size_t>(i)]; }
    Tensor& grad(const std::string& name);

    void zero_grads();
    // Fresh zero tensors shaped like the parameters (per-task gradient buffers).
    std::vector<Tensor> make_grad_buffer() const;
    // Adds buf into the store gradients and marks them ready for adam_step.
    void accumulate_grads(const std::vector<Tensor>& buf);
    void set_grads_ready(bool ready) { grads_ready_ = ready; }
    bool grads_ready() const { return grads_ready_; }

    std::vector<int> indices_by_name() const;
    int64_t total_params() const;

private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
    std::vector<Tensor> grads_;
    std::unordered_map<std::string, int> index_;
    bool grads_ready_ = false;
};

// Adam accumulators plus the one-time learning-rate decay schedule.
struct OptimizerState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int64_t step = 0;
    int decay_epoch = 30;
    double decay_factor = 0.1;
    bool decayed = false;
    std::vector<Tensor> m;  // first moment, parallel to store indices
    std::vector<Tensor> v;  // second moment

    static OptimizerState init(const ParamStore& store, double lr);
    // Applies the decay once when the 1-based epoch counter reaches decay_epoch.
    void on_epoch(int epoch) {
        if (!decayed && epoch >= decay_epoch) {
            lr *= decay_factor;
            decayed = true;
        }
    }
};

// Bias-corrected Adam update from the store's gradients. Throws
// std::logic_error if gradients were not populated since the last step.
void adam_step(ParamStore& store, OptimizerState& state);

// Finite-difference gradient verification.
using KinkTrace = std::vector<uint8_t>;
// loss_fn(store, want_grad, trace): returns the loss; when want_grad it must
// accumulate reverse-mode gradients into store (caller zeroes them first);
// when trace is non-null it must record activation-kink signs into it.
using LossFn = std::function<double(ParamStore&, bool, KinkTrace*)>;

struct GradCheckReport {
    double max_rel_err = 0.0;
    int checked = 0;
    int skipped_kinks = 0;
};

// Compares reverse-mode gradients against central differences on `samples`
// randomly chosen scalar parameters. Samples whose +/-eps evaluations cross an
// activation kink are excluded and redrawn.
GradCheckReport grad_check(const LossFn& loss_fn, ParamStore& store, double eps, int samples,
                           Rng& rng);

}  // namespace oazr
