#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oazr/io.hpp"
#include "oazr/model.hpp"
#include "oazr/textbank.hpp"

namespace oazr {

struct TrainConfig {
    double mu = 0.5;
    double lambda_pretrain = 0.5;
    double lambda_finetune = 1.0;
    int epochs = 12;       // total; finetune stage takes epochs/3 of them
    int batch_pairs = 8;   // N positive/negative pairs per batch (2N rows)
    double lr = 1e-3;
    int lr_decay_epoch = 30;
    double lr_decay_factor = 0.1;
    uint64_t seed = 0;
    int threads = 0;  // 0 = hardware default (capped)

    int pretrain_epochs() const { return epochs - finetune_epochs(); }
    int finetune_epochs() const { return epochs / 3; }
    void validate() const;
};

struct LossBreakdown {
    double l_sym = 0;
    double l_ce = 0;
    double total = 0;
};

// Concatenated positive/negative motion-text pairs in the joint space, rows
// ordered [m1+; m1-; ...; mN+; mN-] with y alternating 1,0.
struct PairBatch {
    Tensor m;                        // 2N x D_j, unit rows
    Tensor t;                        // 2N x D_j, unit rows (each anchor duplicated)
    std::vector<int> y;              // 2N labels, 1,0,1,0,...
    std::vector<int> class_labels;   // N anchor class ids
};

// d = 1 - (1 + cos(m_hat, t_hat)) / 2, clamped to [0,1].
double contrastive_distance(const Tensor& m_hat, const Tensor& t_hat);
double sym_loss(const PairBatch& batch, double mu);
double ce_loss(const Tensor& logits, int label);
LossBreakdown total_loss(double l_ce, double l_sym, double lambda);

// One training item: a single projected view with its class id.
struct TrainItem {
    const ProjectedView* view = nullptr;
    int class_id = -1;
};

// Text supply for training/eval: frozen table + catalog + fallback seed.
struct TextContext {
    const TextEmbeddingTable* table = nullptr;
    const DescriptionCatalog* catalog = nullptr;
    uint64_t fallback_seed = 0;

    // raw (un-normalized, un-projected) text vector for an action at a bin
    Tensor text_vector(const std::string& action, int bin) const;
    Tensor wildcard_text_vector(const std::string& action) const;
};

// Sampled plan of one batch: for each anchor, its positive view, a negative
// view of a different class, and the anchor text.
struct PairPlan {
    struct Entry {
        int positive_item;
        int negative_item;
        int class_label;
        Tensor text;  // 1 x D_t
    };
    std::vector<Entry> entries;
};

PairPlan plan_pair_batch(const std::vector<TrainItem>& items,
                         const std::vector<int>& anchor_items,
                         const std::vector<std::string>& class_names, const TextContext& text,
                         bool wildcard_stage, Rng& rng);

// Spec-facing batch constructor: samples N anchors and materializes the
// embeddings through the current model.
PairBatch build_pair_batch(const std::vector<TrainItem>& items,
                           const std::vector<std::string>& class_names, const TextContext& text,
                           const Model& model, int pairs, Rng& rng, bool wildcard_stage = false);

struct EpochMetrics {
    int epoch = 0;  // 1-based, global across stages
    double lr = 0;
    LossBreakdown loss;
    double wall_seconds = 0;
};

struct TrainResult {
    std::vector<EpochMetrics> epochs;
};

// Two-stage schedule: stage 1 at lambda_pretrain over wildcard descriptions,
// stage 2 at lambda_finetune over viewpoint-specific descriptions. Mutates the
// model in place; the caller saves the checkpoint.
TrainResult train(const std::vector<ViewItem>& dataset, const TextContext& text,
                  const TrainConfig& config, Model& model);

// Flattens grouped items to (view, class_id) pairs against the model's class
// list (which must cover every dataset label).
std::vector<TrainItem> flatten_items(const std::vector<ViewItem>& dataset,
                                     const std::vector<std::string>& class_names);

std::vector<std::string> collect_class_names(const std::vector<ViewItem>& dataset);

// Graph assembly for one batch row; shared by the trainer and grad-check.
struct RowLossTerms {
    Var loss;  // weighted contribution of this row to the total loss
    double sym_value = 0;
    double ce_value = 0;
};
RowLossTerms row_loss_on_tape(Tape& tape, const Model& model, const ProjectedView& view,
                              const Tensor& text, bool positive, int class_label, double lambda,
                              double mu, int pairs);

// Whole-batch loss on one tape (grad-check and tests).
Var batch_loss_on_tape(Tape& tape, const Model& model, const std::vector<TrainItem>& items,
                       const PairPlan& plan, double lambda, double mu,
                       LossBreakdown* breakdown = nullptr);

}  // namespace oazr
