#include "oazr/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "oazr/autodiff.hpp"

namespace oazr {

int ParamStore::add(const std::string& name, Tensor init) {
    if (index_.count(name)) throw std::invalid_argument("param store: duplicate name " + name);
    const int idx = static_cast<int>(values_.size());
    index_[name] = idx;
    names_.push_back(name);
    grads_.push_back(Tensor::zeros(init.shape));
    values_.push_back(std::move(init));
    return idx;
}

int ParamStore::index_of(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
}

Tensor& ParamStore::value(const std::string& name) {
    const int i = index_of(name);
    if (i < 0) throw std::invalid_argument("param store: unknown name " + name);
    return values_[static_cast<size_t>(i)];
}

Tensor& ParamStore::grad(const std::string& name) {
    const int i = index_of(name);
    if (i < 0) throw std::invalid_argument("param store: unknown name " + name);
    return grads_[static_cast<size_t>(i)];
}

void ParamStore::zero_grads() {
    for (Tensor& g : grads_) std::fill(g.data.begin(), g.data.end(), 0.0);
    grads_ready_ = false;
}

std::vector<Tensor> ParamStore::make_grad_buffer() const {
    std::vector<Tensor> buf;
    buf.reserve(values_.size());
    for (const Tensor& v : values_) buf.push_back(Tensor::zeros(v.shape));
    return buf;
}

void ParamStore::accumulate_grads(const std::vector<Tensor>& buf) {
    if (buf.size() != grads_.size())
        throw std::invalid_argument("param store: gradient buffer size mismatch");
    for (size_t i = 0; i < buf.size(); ++i) axpy(1.0, buf[i], grads_[i]);
    grads_ready_ = true;
}

std::vector<int> ParamStore::indices_by_name() const {
    std::vector<int> idx(values_.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(),
              [this](int a, int b) { return names_[static_cast<size_t>(a)] < names_[static_cast<size_t>(b)]; });
    return idx;
}

int64_t ParamStore::total_params() const {
    int64_t n = 0;
    for (const Tensor& v : values_) n += v.numel();
    return n;
}

OptimizerState OptimizerState::init(const ParamStore& store, double lr) {
    OptimizerState s;
    s.lr = lr;
    s.m.reserve(static_cast<size_t>(store.size()));
    s.v.reserve(static_cast<size_t>(store.size()));
    for (int i = 0; i < store.size(); ++i) {
        s.m.push_back(Tensor::zeros(store.value(i).shape));
        s.v.push_back(Tensor::zeros(store.value(i).shape));
    }
    return s;
}

void adam_step(ParamStore& store, OptimizerState& state) {
    if (!store.grads_ready()) throw std::logic_error("adam_step: gradients not populated");
    if (static_cast<int>(state.m.size()) != store.size())
        throw std::logic_error("adam_step: optimizer state does not match store");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (int i = 0; i < store.size(); ++i) {
        Tensor& p = store.value(i);
        const Tensor& g = store.grad(i);
        Tensor& m = state.m[static_cast<size_t>(i)];
        Tensor& v = state.v[static_cast<size_t>(i)];
        for (size_t j = 0; j < p.data.size(); ++j) {
            const double gj = g.data[j];
            m.data[j] = state.beta1 * m.data[j] + (1.0 - state.beta1) * gj;
            v.data[j] = state.beta2 * v.data[j] + (1.0 - state.beta2) * gj * gj;
            const double mhat = m.data[j] / bc1;
            const double vhat = v.data[j] / bc2;
            p.data[j] -= state.lr * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
    store.set_grads_ready(false);
}

GradCheckReport grad_check(const LossFn& loss_fn, ParamStore& store, double eps, int samples,
                           Rng& rng) {
    if (eps <= 0.0) throw std::invalid_argument("grad_check: eps must be positive");
    if (samples < 1) throw std::invalid_argument("grad_check: samples must be >= 1");
    if (store.size() == 0) throw std::invalid_argument("grad_check: empty store");

    store.zero_grads();
    const double l0 = loss_fn(store, true, nullptr);
    const double l0b = loss_fn(store, false, nullptr);
    if (!(l0 == l0b)) throw std::runtime_error("grad_check: loss_fn is not deterministic");

    GradCheckReport rep;
    const int max_attempts = samples * 20;
    int attempts = 0;
    while (rep.checked < samples && attempts < max_attempts) {
        ++attempts;
        const int pi = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(store.size())));
        Tensor& p = store.value(pi);
        if (p.numel() == 0) continue;
        const size_t j = static_cast<size_t>(rng.uniform_int(static_cast<uint64_t>(p.numel())));
        const double saved = p.data[j];

        KinkTrace tp, tm;
        p.data[j] = saved + eps;
        const double lp = loss_fn(store, false, &tp);
        p.data[j] = saved - eps;
        const double lm = loss_fn(store, false, &tm);
        p.data[j] = saved;

        if (tp != tm) {
            ++rep.skipped_kinks;
            continue;  // perturbation crossed an activation kink
        }
        const double fd = (lp - lm) / (2.0 * eps);
        const double an = store.grad(pi).data[j];
        const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8});
        rep.max_rel_err = std::max(rep.max_rel_err, rel);
        ++rep.checked;
    }
    if (rep.checked < samples)
        throw std::runtime_error("grad_check: could not draw enough kink-free samples");
    return rep;
}

}  // namespace oazr
