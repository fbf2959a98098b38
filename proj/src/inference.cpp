#include "oazr/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>

namespace oazr {

const char* view_mode_name(ViewMode m) { return m == ViewMode::SV ? "SV" : "MV"; }

const char* eval_mode_name(EvalMode m) {
    switch (m) {
        case EvalMode::ZSL: return "ZSL";
        case EvalMode::ZSCD: return "ZSCD";
        case EvalMode::SAME: return "SAME";
    }
    return "?";
}

SimilarityScores score_view(const Model& model, const Tensor& m_hat, const TextContext& text,
                            const std::vector<std::string>& candidates, int theta_bin) {
    if (candidates.empty()) throw std::invalid_argument("score_view: empty candidate list");
    if (std::abs(l2_norm(m_hat) - 1.0) > 1e-6)
        throw std::invalid_argument("score_view: motion embedding must be unit-norm");
    const Tensor jm = model.project_motion_embedding(m_hat);
    SimilarityScores out;
    out.scores.reserve(candidates.size());
    for (const std::string& action : candidates) {
        const Tensor t = text.text_vector(action, theta_bin);
        const Tensor jt = model.project_text_embedding(t);
        out.scores.push_back(dot_value(jm, jt));
    }
    return out;
}

FusedScores fuse_views(const std::vector<SimilarityScores>& scores) {
    if (scores.empty()) throw std::invalid_argument("fuse_views: no views");
    const size_t k = scores[0].scores.size();
    FusedScores out;
    out.scores.assign(k, 0.0);
    for (const SimilarityScores& s : scores) {
        if (s.scores.size() != k) throw std::invalid_argument("fuse_views: candidate count mismatch");
        for (size_t i = 0; i < k; ++i) out.scores[i] += s.scores[i];
    }
    for (double& v : out.scores) v /= static_cast<double>(scores.size());
    out.views_used = static_cast<int>(scores.size());
    return out;
}

Prediction predict(const FusedScores& fused, ViewMode mode) {
    const int k = static_cast<int>(fused.scores.size());
    if (k < 1) throw std::invalid_argument("predict: empty scores");
    Prediction p;
    p.mode = mode;
    p.ranking.resize(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) p.ranking[static_cast<size_t>(i)] = i;
    std::stable_sort(p.ranking.begin(), p.ranking.end(), [&](int a, int b) {
        return fused.scores[static_cast<size_t>(a)] > fused.scores[static_cast<size_t>(b)];
    });
    p.k_hat = p.ranking[0];
    return p;
}

namespace {
std::vector<double> softmax_vec(const Tensor& logits) {
    std::vector<double> p(logits.data.begin(), logits.data.end());
    double m = p[0];
    for (double v : p) m = std::max(m, v);
    double s = 0;
    for (double& v : p) {
        v = std::exp(v - m);
        s += v;
    }
    for (double& v : p) v /= s;
    return p;
}
}  // namespace

std::vector<double> mv_classify_probs(const std::vector<ProjectedView>& views, const Model& model) {
    if (views.empty()) throw std::invalid_argument("mv_classify_probs: no views");
    std::vector<double> acc;
    for (const ProjectedView& v : views) {
        const MotionEmbedding m = model.embed_view(v);
        const std::vector<double> p = softmax_vec(model.classify(m).logits);
        if (acc.empty()) acc.assign(p.size(), 0.0);
        for (size_t i = 0; i < p.size(); ++i) acc[i] += p[i];
    }
    for (double& v : acc) v /= static_cast<double>(views.size());
    return acc;
}

TopkAccuracy topk_accuracy(const std::vector<Prediction>& predictions,
                           const std::vector<int>& labels) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("topk_accuracy: length mismatch");
    if (predictions.empty()) throw std::invalid_argument("topk_accuracy: empty input");
    int hit1 = 0, hit5 = 0;
    for (size_t i = 0; i < predictions.size(); ++i) {
        const Prediction& p = predictions[i];
        if (p.k_hat == labels[i]) ++hit1;
        const size_t k = std::min<size_t>(5, p.ranking.size());
        for (size_t r = 0; r < k; ++r)
            if (p.ranking[r] == labels[i]) {
                ++hit5;
                break;
            }
    }
    const double n = static_cast<double>(predictions.size());
    return {hit1 / n, hit5 / n};
}

int designate_sv_view(const ViewItem& item, std::optional<int> preferred_theta) {
    if (item.views.empty()) throw std::invalid_argument("designate_sv_view: item has no views");
    if (preferred_theta)
        for (size_t i = 0; i < item.views.size(); ++i)
            if (static_cast<int>(item.views[i].theta_deg) == *preferred_theta)
                return static_cast<int>(i);
    int best = 0;
    auto key = [&](int i) {
        const double th = item.views[static_cast<size_t>(i)].theta_deg;
        return std::make_pair(std::abs(th), th);
    };
    for (int i = 1; i < static_cast<int>(item.views.size()); ++i)
        if (key(i) < key(best)) best = i;
    return best;
}

std::string EvalReport::to_tsv() const {
    std::string out = "mode\tview_mode\tsplit_name\ttop1\ttop5\tn_items\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s\t%s\t%s\t%.6f\t%.6f\t%d\n", eval_mode_name(mode),
                  view_mode_name(view_mode), split_name.c_str(), top1, top5, n_items);
    out += buf;
    for (const PerClassAccuracy& pc : per_class) {
        std::snprintf(buf, sizeof(buf), "%s\t%.6f\t%d\n", pc.name.c_str(), pc.accuracy, pc.count);
        out += buf;
    }
    return out;
}

namespace {

EvalReport summarize(EvalMode mode, ViewMode view_mode, const std::string& split_name,
                     const std::vector<Prediction>& preds, const std::vector<int>& labels,
                     const std::vector<std::string>& candidates) {
    EvalReport rep;
    rep.mode = mode;
    rep.view_mode = view_mode;
    rep.split_name = split_name;
    rep.n_items = static_cast<int>(preds.size());
    const TopkAccuracy acc = topk_accuracy(preds, labels);
    rep.top1 = acc.top1;
    rep.top5 = acc.top5;
    std::map<int, std::pair<int, int>> per;  // label -> (hits, count)
    for (size_t i = 0; i < preds.size(); ++i) {
        auto& [hits, count] = per[labels[i]];
        ++count;
        if (preds[i].k_hat == labels[i]) ++hits;
    }
    for (const auto& [label, hc] : per)
        rep.per_class.push_back({candidates[static_cast<size_t>(label)],
                                 static_cast<double>(hc.first) / hc.second, hc.second});
    return rep;
}

}  // namespace

EvalReport zsl_eval(const std::vector<ViewItem>& dataset, const Model& model,
                    const TextContext& text, const ClassSplit& split, EvalMode mode,
                    ViewMode view_mode, std::optional<int> sv_theta) {
    if (mode == EvalMode::SAME) throw std::invalid_argument("zsl_eval: use same_domain_eval");
    if (split.unseen.empty()) throw std::invalid_argument("zsl_eval: no unseen classes");
    {
        std::set<std::string> seen(split.seen.begin(), split.seen.end());
        for (const std::string& u : split.unseen)
            if (seen.count(u)) throw std::invalid_argument("zsl_eval: overlapping class split: " + u);
    }
    if (mode == EvalMode::ZSCD)
        for (const std::string& u : split.unseen)
            if (std::find(model.class_names.begin(), model.class_names.end(), u) !=
                model.class_names.end())
                throw std::invalid_argument("zsl_eval: ZSCD candidate was seen in training: " + u);

    const std::vector<std::string>& candidates = split.unseen;
    std::vector<Prediction> preds;
    std::vector<int> labels;
    for (const ViewItem& item : dataset) {
        const auto it = std::find(candidates.begin(), candidates.end(), item.label);
        if (it == candidates.end()) continue;  // only unseen-class items are evaluated
        if (item.views.empty()) continue;

        std::vector<SimilarityScores> scores;
        if (view_mode == ViewMode::MV) {
            for (const ProjectedView& v : item.views) {
                const MotionEmbedding m = model.embed_view(v);
                scores.push_back(
                    score_view(model, m.m_hat, text, candidates, static_cast<int>(v.theta_deg)));
            }
        } else {
            const ProjectedView& v = item.views[static_cast<size_t>(designate_sv_view(item, sv_theta))];
            const MotionEmbedding m = model.embed_view(v);
            scores.push_back(
                score_view(model, m.m_hat, text, candidates, static_cast<int>(v.theta_deg)));
        }
        preds.push_back(predict(fuse_views(scores), view_mode));
        labels.push_back(static_cast<int>(it - candidates.begin()));
    }
    if (preds.empty()) throw std::invalid_argument("zsl_eval: no items from the unseen classes");
    return summarize(mode, view_mode, "unseen", preds, labels, candidates);
}

EvalReport same_domain_eval(const std::vector<ViewItem>& dataset, const Model& model,
                            ViewMode view_mode, std::optional<int> sv_theta,
                            const std::string& split_name) {
    if (model.class_names.empty()) throw std::invalid_argument("same_domain_eval: untrained model");
    std::vector<Prediction> preds;
    std::vector<int> labels;
    for (const ViewItem& item : dataset) {
        const auto it = std::find(model.class_names.begin(), model.class_names.end(), item.label);
        if (it == model.class_names.end())
            throw std::invalid_argument("same_domain_eval: label absent from the model: " + item.label);
        if (item.views.empty()) continue;

        std::vector<double> probs;
        if (view_mode == ViewMode::MV) {
            probs = mv_classify_probs(item.views, model);
        } else {
            const ProjectedView& v = item.views[static_cast<size_t>(designate_sv_view(item, sv_theta))];
            probs = mv_classify_probs({v}, model);
        }
        FusedScores fs;
        fs.scores = probs;
        fs.views_used = view_mode == ViewMode::MV ? static_cast<int>(item.views.size()) : 1;
        preds.push_back(predict(fs, view_mode));
        labels.push_back(static_cast<int>(it - model.class_names.begin()));
    }
    if (preds.empty()) throw std::invalid_argument("same_domain_eval: empty dataset");
    EvalReport rep = summarize(EvalMode::SAME, view_mode, split_name, preds, labels, model.class_names);
    return rep;
}

}  // namespace oazr
