#include "oazr/training.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>

namespace oazr {

void TrainConfig::validate() const {
    if (!(mu > 0.0 && mu <= 1.0)) throw std::invalid_argument("train config: mu must be in (0,1]");
    for (double l : {lambda_pretrain, lambda_finetune})
        if (!(l >= 0.0 && l <= 1.0)) throw std::invalid_argument("train config: lambda must be in [0,1]");
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (batch_pairs < 1) throw std::invalid_argument("train config: batch_pairs must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("train config: lr must be positive");
    if (lr_decay_epoch < 1) throw std::invalid_argument("train config: lr_decay_epoch must be >= 1");
    if (!(lr_decay_factor > 0.0)) throw std::invalid_argument("train config: decay factor must be positive");
}

double contrastive_distance(const Tensor& m_hat, const Tensor& t_hat) {
    if (m_hat.numel() != t_hat.numel())
        throw std::invalid_argument("contrastive_distance: dim mismatch");
    const double nm = l2_norm(m_hat), nt = l2_norm(t_hat);
    if (std::abs(nm - 1.0) > 1e-6 || std::abs(nt - 1.0) > 1e-6)
        throw std::invalid_argument("contrastive_distance: inputs must be unit vectors");
    const double c = dot_value(m_hat, t_hat);
    return std::clamp(1.0 - (1.0 + c) / 2.0, 0.0, 1.0);
}

double sym_loss(const PairBatch& batch, double mu) {
    const int rows = batch.m.rows();
    if (rows < 2 || rows % 2 != 0) throw std::invalid_argument("sym_loss: row count must be even");
    if (batch.t.rows() != rows || static_cast<int>(batch.y.size()) != rows)
        throw std::invalid_argument("sym_loss: ragged batch");
    const int cols = batch.m.cols();
    double acc = 0.0;
    for (int r = 0; r < rows; ++r) {
        Tensor mr({cols}, std::vector<double>(batch.m.data.begin() + static_cast<size_t>(r) * cols,
                                              batch.m.data.begin() + static_cast<size_t>(r + 1) * cols));
        Tensor tr({cols}, std::vector<double>(batch.t.data.begin() + static_cast<size_t>(r) * cols,
                                              batch.t.data.begin() + static_cast<size_t>(r + 1) * cols));
        const double d = contrastive_distance(mr, tr);
        if (batch.y[static_cast<size_t>(r)]) {
            acc += d * d;
        } else {
            const double h = std::max(0.0, mu - d);
            acc += h * h;
        }
    }
    return acc / rows;
}

double ce_loss(const Tensor& logits, int label) {
    const int k = static_cast<int>(logits.numel());
    if (label < 0 || label >= k) throw std::invalid_argument("ce_loss: label out of range");
    double m = logits.data[0];
    for (double v : logits.data) m = std::max(m, v);
    double s = 0.0;
    for (double v : logits.data) s += std::exp(v - m);
    return m + std::log(s) - logits.data[static_cast<size_t>(label)];
}

LossBreakdown total_loss(double l_ce, double l_sym, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("total_loss: lambda outside [0,1]");
    return {l_sym, l_ce, lambda * l_ce + (1.0 - lambda) * l_sym};
}

Tensor TextContext::text_vector(const std::string& action, int bin) const {
    if (!table) throw std::logic_error("text context: no table");
    const TextLookup lk = lookup_embedding(*table, catalog, action, bin, fallback_seed);
    return lk.embedding.t;
}

Tensor TextContext::wildcard_text_vector(const std::string& action) const {
    if (!table) throw std::logic_error("text context: no table");
    const TextLookup lk = lookup_embedding_wildcard(*table, catalog, action, fallback_seed);
    return lk.embedding.t;
}

std::vector<std::string> collect_class_names(const std::vector<ViewItem>& dataset) {
    std::set<std::string> names;
    for (const ViewItem& item : dataset) names.insert(item.label);
    return {names.begin(), names.end()};
}

std::vector<TrainItem> flatten_items(const std::vector<ViewItem>& dataset,
                                     const std::vector<std::string>& class_names) {
    std::vector<TrainItem> items;
    for (const ViewItem& group : dataset) {
        const auto it = std::find(class_names.begin(), class_names.end(), group.label);
        if (it == class_names.end())
            throw std::invalid_argument("flatten_items: label not in class list: " + group.label);
        const int cid = static_cast<int>(it - class_names.begin());
        for (const ProjectedView& v : group.views) items.push_back({&v, cid});
    }
    return items;
}

PairPlan plan_pair_batch(const std::vector<TrainItem>& items, const std::vector<int>& anchor_items,
                         const std::vector<std::string>& class_names, const TextContext& text,
                         bool wildcard_stage, Rng& rng) {
    // complement lists per class, built in item order
    std::vector<std::vector<int>> by_class(class_names.size());
    for (size_t i = 0; i < items.size(); ++i)
        by_class[static_cast<size_t>(items[i].class_id)].push_back(static_cast<int>(i));

    PairPlan plan;
    plan.entries.reserve(anchor_items.size());
    for (int anchor : anchor_items) {
        const TrainItem& a = items[static_cast<size_t>(anchor)];
        int other_total = 0;
        for (size_t c = 0; c < by_class.size(); ++c)
            if (static_cast<int>(c) != a.class_id) other_total += static_cast<int>(by_class[c].size());
        if (other_total == 0)
            throw std::invalid_argument("plan_pair_batch: cannot sample a negative from a single class");
        int pick = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(other_total)));
        int negative = -1;
        for (size_t c = 0; c < by_class.size(); ++c) {
            if (static_cast<int>(c) == a.class_id) continue;
            if (pick < static_cast<int>(by_class[c].size())) {
                negative = by_class[c][static_cast<size_t>(pick)];
                break;
            }
            pick -= static_cast<int>(by_class[c].size());
        }
        const std::string& action = class_names[static_cast<size_t>(a.class_id)];
        Tensor t = wildcard_stage
                       ? text.wildcard_text_vector(action)
                       : text.text_vector(action, static_cast<int>(a.view->theta_deg));
        plan.entries.push_back({anchor, negative, a.class_id, std::move(t)});
    }
    return plan;
}

PairBatch build_pair_batch(const std::vector<TrainItem>& items,
                           const std::vector<std::string>& class_names, const TextContext& text,
                           const Model& model, int pairs, Rng& rng, bool wildcard_stage) {
    if (pairs < 1) throw std::invalid_argument("build_pair_batch: pairs must be >= 1");
    if (class_names.size() < 2)
        throw std::invalid_argument("build_pair_batch: need at least 2 classes");
    if (items.empty()) throw std::invalid_argument("build_pair_batch: empty item list");

    std::vector<int> anchors(static_cast<size_t>(pairs));
    for (int& a : anchors) a = static_cast<int>(rng.uniform_int(items.size()));
    const PairPlan plan = plan_pair_batch(items, anchors, class_names, text, wildcard_stage, rng);

    const int dj = model.config().joint_dim;
    PairBatch batch;
    batch.m = Tensor::zeros({2 * pairs, dj});
    batch.t = Tensor::zeros({2 * pairs, dj});
    for (int i = 0; i < pairs; ++i) {
        const PairPlan::Entry& e = plan.entries[static_cast<size_t>(i)];
        const Tensor jt = model.project_text_embedding(e.text);
        for (int row : {2 * i, 2 * i + 1}) {
            const bool positive = row == 2 * i;
            const TrainItem& item = items[static_cast<size_t>(positive ? e.positive_item : e.negative_item)];
            const MotionEmbedding me = model.embed_view(*item.view);
            const Tensor jm = model.project_motion_embedding(me.m);
            std::copy(jm.data.begin(), jm.data.end(),
                      batch.m.data.begin() + static_cast<size_t>(row) * dj);
            std::copy(jt.data.begin(), jt.data.end(),
                      batch.t.data.begin() + static_cast<size_t>(row) * dj);
            batch.y.push_back(positive ? 1 : 0);
        }
        batch.class_labels.push_back(e.class_label);
    }
    return batch;
}

RowLossTerms row_loss_on_tape(Tape& tape, const Model& model, const ProjectedView& view,
                              const Tensor& text, bool positive, int class_label, double lambda,
                              double mu, int pairs) {
    RowLossTerms out;
    Var m = model.graph_motion_embedding(tape, view);
    Var jm = model.graph_joint_from_motion(tape, m);
    Var jt = model.graph_joint_from_text(tape, text);
    // d = 1 - (1 + cos)/2 over unit vectors
    Var d = tape.affine(tape.dot(jm, jt), -0.5, 0.5);
    Var sym;
    if (positive) {
        sym = tape.mul(d, d);
    } else {
        Var h = tape.relu(tape.affine(d, -1.0, mu));
        sym = tape.mul(h, h);
    }
    out.sym_value = sym.val().item();
    Var loss = tape.affine(sym, (1.0 - lambda) / (2.0 * pairs), 0.0);
    if (positive) {
        Var ce = tape.cross_entropy(model.graph_logits(tape, m), class_label);
        out.ce_value = ce.val().item();
        loss = tape.add(loss, tape.affine(ce, lambda / pairs, 0.0));
    }
    out.loss = loss;
    return out;
}

Var batch_loss_on_tape(Tape& tape, const Model& model, const std::vector<TrainItem>& items,
                       const PairPlan& plan, double lambda, double mu, LossBreakdown* breakdown) {
    const int pairs = static_cast<int>(plan.entries.size());
    if (pairs < 1) throw std::invalid_argument("batch_loss_on_tape: empty plan");
    Var total;
    double sym_acc = 0, ce_acc = 0;
    for (int i = 0; i < pairs; ++i) {
        const PairPlan::Entry& e = plan.entries[static_cast<size_t>(i)];
        for (const bool positive : {true, false}) {
            const TrainItem& item = items[static_cast<size_t>(positive ? e.positive_item : e.negative_item)];
            RowLossTerms terms = row_loss_on_tape(tape, model, *item.view, e.text, positive,
                                                  e.class_label, lambda, mu, pairs);
            sym_acc += terms.sym_value;
            ce_acc += terms.ce_value;
            total = total.tape ? tape.add(total, terms.loss) : terms.loss;
        }
    }
    if (breakdown) *breakdown = total_loss(ce_acc / pairs, sym_acc / (2.0 * pairs), lambda);
    return total;
}

namespace {

struct RowTask {
    const ProjectedView* view;
    Tensor text;
    bool positive;
    int class_label;
};

// Forward+backward for one batch row on its own tape; gradients land in buf.
void run_row(const Model& model, const RowTask& task, double lambda, double mu, int pairs,
             std::vector<Tensor>& buf, double& sym, double& ce) {
    Tape tape;
    RowLossTerms terms = row_loss_on_tape(tape, model, *task.view, task.text, task.positive,
                                          task.class_label, lambda, mu, pairs);
    tape.backward(terms.loss);
    tape.collect_param_grads(buf);
    sym = terms.sym_value;
    ce = terms.ce_value;
}

int resolve_threads(int configured) {
    if (configured > 0) return configured;
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hw, 1u, 8u));
}

}  // namespace

TrainResult train(const std::vector<ViewItem>& dataset, const TextContext& text,
                  const TrainConfig& config, Model& model) {
    config.validate();
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    if (model.class_names.size() < 2) throw std::invalid_argument("train: need at least 2 classes");

    const std::vector<TrainItem> items = flatten_items(dataset, model.class_names);
    const int n_threads = resolve_threads(config.threads);
    const Rng root(config.seed);

    OptimizerState opt = OptimizerState::init(model.params(), config.lr);
    opt.decay_epoch = config.lr_decay_epoch;
    opt.decay_factor = config.lr_decay_factor;

    TrainResult result;
    int global_epoch = 0;
    for (int stage = 1; stage <= 2; ++stage) {
        const bool wildcard_stage = stage == 1;
        const double lambda = wildcard_stage ? config.lambda_pretrain : config.lambda_finetune;
        const int stage_epochs = wildcard_stage ? config.pretrain_epochs() : config.finetune_epochs();
        const Rng stage_stream = root.derive(wildcard_stage ? "stage1" : "stage2");

        for (int e = 0; e < stage_epochs; ++e) {
            const auto t0 = std::chrono::steady_clock::now();
            ++global_epoch;
            opt.on_epoch(global_epoch);

            Rng epoch_rng = stage_stream.derive(static_cast<uint64_t>(e));
            std::vector<int> order(items.size());
            for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
            epoch_rng.shuffle(order);

            double sym_sum = 0, ce_sum = 0;
            int batches = 0;
            for (size_t pos = 0; pos < order.size(); pos += static_cast<size_t>(config.batch_pairs)) {
                const int pairs =
                    static_cast<int>(std::min(order.size() - pos, static_cast<size_t>(config.batch_pairs)));
                std::vector<int> anchors(order.begin() + static_cast<long>(pos),
                                         order.begin() + static_cast<long>(pos) + pairs);
                const PairPlan plan =
                    plan_pair_batch(items, anchors, model.class_names, text, wildcard_stage, epoch_rng);

                const int rows = 2 * pairs;
                std::vector<RowTask> tasks;
                tasks.reserve(static_cast<size_t>(rows));
                for (const PairPlan::Entry& entry : plan.entries) {
                    tasks.push_back({items[static_cast<size_t>(entry.positive_item)].view, entry.text,
                                     true, entry.class_label});
                    tasks.push_back({items[static_cast<size_t>(entry.negative_item)].view, entry.text,
                                     false, entry.class_label});
                }

                std::vector<std::vector<Tensor>> bufs(static_cast<size_t>(rows));
                std::vector<double> syms(static_cast<size_t>(rows), 0.0);
                std::vector<double> ces(static_cast<size_t>(rows), 0.0);
                std::atomic<int> next{0};
                auto worker = [&] {
                    for (int r = next.fetch_add(1); r < rows; r = next.fetch_add(1)) {
                        bufs[static_cast<size_t>(r)] = model.params().make_grad_buffer();
                        run_row(model, tasks[static_cast<size_t>(r)], lambda, config.mu, pairs,
                                bufs[static_cast<size_t>(r)], syms[static_cast<size_t>(r)],
                                ces[static_cast<size_t>(r)]);
                    }
                };
                std::vector<std::thread> pool;
                for (int w = 1; w < n_threads; ++w) pool.emplace_back(worker);
                worker();
                for (std::thread& th : pool) th.join();

                // deterministic reduction in row order regardless of scheduling
                model.params().zero_grads();
                for (int r = 0; r < rows; ++r) model.params().accumulate_grads(bufs[static_cast<size_t>(r)]);
                adam_step(model.params(), opt);

                double sym_batch = 0, ce_batch = 0;
                for (int r = 0; r < rows; ++r) sym_batch += syms[static_cast<size_t>(r)];
                for (int r = 0; r < rows; r += 2) ce_batch += ces[static_cast<size_t>(r)];
                sym_sum += sym_batch / rows;
                ce_sum += ce_batch / pairs;
                ++batches;
            }

            EpochMetrics em;
            em.epoch = global_epoch;
            em.lr = opt.lr;
            em.loss = total_loss(ce_sum / batches, sym_sum / batches, lambda);
            em.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (!std::isfinite(em.loss.total))
                throw std::runtime_error("train: loss diverged at epoch " + std::to_string(global_epoch));
            result.epochs.push_back(em);
        }
    }
    return result;
}

}  // namespace oazr
