#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oazr/io.hpp"
#include "oazr/model.hpp"
#include "oazr/training.hpp"

namespace oazr {

struct SimilarityScores {
    std::vector<double> scores;  // one cosine per candidate, in [-1, 1]
};

struct FusedScores {
    std::vector<double> scores;
    int views_used = 0;
};

enum class ViewMode { SV, MV };
enum class EvalMode { ZSL, ZSCD, SAME };

const char* view_mode_name(ViewMode m);
const char* eval_mode_name(EvalMode m);

struct Prediction {
    int k_hat = -1;
    std::vector<int> ranking;  // all candidates, score-descending, index tie-break
    ViewMode mode = ViewMode::SV;
};

// Cosine scores of one view's motion embedding against every candidate's
// orientation-resolved text embedding, both through the joint-space heads.
SimilarityScores score_view(const Model& model, const Tensor& m_hat, const TextContext& text,
                            const std::vector<std::string>& candidates, int theta_bin);

FusedScores fuse_views(const std::vector<SimilarityScores>& scores);

Prediction predict(const FusedScores& fused, ViewMode mode = ViewMode::SV);

// Mean of per-view classifier softmax distributions.
std::vector<double> mv_classify_probs(const std::vector<ProjectedView>& views, const Model& model);

struct TopkAccuracy {
    double top1 = 0;
    double top5 = 0;
};
TopkAccuracy topk_accuracy(const std::vector<Prediction>& predictions,
                           const std::vector<int>& labels);

// Index of the view evaluated in SV mode: theta closest to 0 (tie: smaller
// theta), or the view at preferred_theta when present.
int designate_sv_view(const ViewItem& item, std::optional<int> preferred_theta = std::nullopt);

struct ClassSplit {
    std::vector<std::string> seen;
    std::vector<std::string> unseen;
};

struct PerClassAccuracy {
    std::string name;
    double accuracy = 0;
    int count = 0;
};

struct EvalReport {
    EvalMode mode = EvalMode::ZSL;
    ViewMode view_mode = ViewMode::MV;
    std::string split_name;
    double top1 = 0;
    double top5 = 0;
    int n_items = 0;
    std::vector<PerClassAccuracy> per_class;

    std::string to_tsv() const;
};

// Zero-shot evaluation over the unseen-class items; candidates are the unseen
// classes. ZSCD additionally requires that no candidate was trained on.
EvalReport zsl_eval(const std::vector<ViewItem>& dataset, const Model& model,
                    const TextContext& text, const ClassSplit& split, EvalMode mode,
                    ViewMode view_mode, std::optional<int> sv_theta = std::nullopt);

// Same-domain evaluation through the classifier head (probability fusion).
EvalReport same_domain_eval(const std::vector<ViewItem>& dataset, const Model& model,
                            ViewMode view_mode, std::optional<int> sv_theta = std::nullopt,
                            const std::string& split_name = "heldout");

}  // namespace oazr
