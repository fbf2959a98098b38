#pragma once

#include <functional>
#include <string>
#include <vector>

#include "oazr/autodiff.hpp"
#include "oazr/optim.hpp"
#include "oazr/rng.hpp"

namespace oazr::test {

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = scale * (2.0 * rng.uniform() - 1.0);
    return t;
}

// Central-difference verification of a graph built from leaf parameters.
// builder receives one Var per input (in order) and must return a scalar loss.
inline double check_graph_gradients(
    const std::vector<Tensor>& inputs,
    const std::function<Var(Tape&, const std::vector<Var>&)>& builder, uint64_t seed = 1,
    int samples = 40, double eps = 1e-6) {
    ParamStore store;
    for (size_t i = 0; i < inputs.size(); ++i) store.add("x" + std::to_string(i), inputs[i]);

    LossFn loss_fn = [&](ParamStore& s, bool want_grad, KinkTrace* trace) {
        Tape tape;
        tape.set_kink_trace(trace);
        std::vector<Var> vars;
        vars.reserve(inputs.size());
        for (size_t i = 0; i < inputs.size(); ++i)
            vars.push_back(tape.param(static_cast<int>(i), &s.value(static_cast<int>(i))));
        Var loss = builder(tape, vars);
        const double value = loss.val().item();
        if (want_grad) {
            tape.backward(loss);
            std::vector<Tensor> buf = s.make_grad_buffer();
            tape.collect_param_grads(buf);
            s.accumulate_grads(buf);
        }
        return value;
    };
    Rng rng(seed);
    const int64_t total = store.total_params();
    const int n = static_cast<int>(std::min<int64_t>(samples, total));
    return grad_check(loss_fn, store, eps, n, rng).max_rel_err;
}

}  // namespace oazr::test
