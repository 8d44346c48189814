#include "grapl/evaluation.hpp"

#include "grapl/errors.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace grapl {

namespace {

void check_pair(const SegmentationMap& pred, const SegmentationMap& gt) {
    if (pred.labels.empty() || gt.labels.empty()) throw PreconditionError("evaluation: empty label map");
    if (pred.width != gt.width || pred.height != gt.height) {
        throw PreconditionError("evaluation: prediction is " + std::to_string(pred.width) + "x" +
                                std::to_string(pred.height) + " but ground truth is " + std::to_string(gt.width) +
                                "x" + std::to_string(gt.height));
    }
}

std::vector<int> sorted_labels(const SegmentationMap& m) {
    const auto s = m.label_set();
    return {s.begin(), s.end()};
}

}  // namespace

std::vector<int> max_profit_assignment(const Matrix& profit) {
    const int rows = profit.rows, cols = profit.cols;
    const int n = std::max(rows, cols);
    if (n == 0) return {};
    // Hungarian algorithm with potentials on the padded square cost matrix (cost = -profit).
    auto cost = [&](int i, int j) { return i < rows && j < cols ? -profit(i, j) : 0.0; };
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assign(rows, -1);
    for (int j = 1; j <= n; ++j) {
        const int i = p[j] - 1;
        if (i < rows && j - 1 < cols) assign[i] = j - 1;
    }
    return assign;
}

double Matching::total_iou() const {
    double s = 0.0;
    for (const auto& pr : pairs) s += pr.iou;
    return s;
}

Matrix iou_matrix(const SegmentationMap& pred, const SegmentationMap& gt, std::vector<int>& pred_labels,
                  std::vector<int>& gt_labels) {
    check_pair(pred, gt);
    pred_labels = sorted_labels(pred);
    gt_labels = sorted_labels(gt);
    std::map<int, int> pi, gi;
    for (std::size_t i = 0; i < pred_labels.size(); ++i) pi[pred_labels[i]] = static_cast<int>(i);
    for (std::size_t j = 0; j < gt_labels.size(); ++j) gi[gt_labels[j]] = static_cast<int>(j);
    const int r = static_cast<int>(pred_labels.size()), c = static_cast<int>(gt_labels.size());
    Matrix inter(r, c);
    std::vector<double> pa(r, 0.0), ga(c, 0.0);
    // label lists are small; map lookups once per distinct run keep this linear in practice
    int last_p = pred.labels[0], last_g = gt.labels[0];
    int ip = pi[last_p], ig = gi[last_g];
    for (std::size_t k = 0; k < pred.labels.size(); ++k) {
        if (pred.labels[k] != last_p) ip = pi[last_p = pred.labels[k]];
        if (gt.labels[k] != last_g) ig = gi[last_g = gt.labels[k]];
        inter(ip, ig) += 1.0;
        pa[ip] += 1.0;
        ga[ig] += 1.0;
    }
    Matrix iou(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) {
            if (inter(i, j) > 0.0) iou(i, j) = inter(i, j) / (pa[i] + ga[j] - inter(i, j));
        }
    return iou;
}

Matching hungarian_match(const SegmentationMap& pred, const SegmentationMap& gt) {
    Matching m;
    m.iou = iou_matrix(pred, gt, m.pred_labels, m.gt_labels);
    const std::vector<int> assign = max_profit_assignment(m.iou);
    std::vector<bool> gt_used(m.gt_labels.size(), false);
    for (std::size_t i = 0; i < assign.size(); ++i) {
        if (assign[i] < 0) {
            m.unmatched_pred.push_back(m.pred_labels[i]);
            continue;
        }
        gt_used[assign[i]] = true;
        m.pairs.push_back({m.pred_labels[i], m.gt_labels[assign[i]], m.iou(static_cast<int>(i), assign[i])});
    }
    for (std::size_t j = 0; j < gt_used.size(); ++j) {
        if (!gt_used[j]) m.unmatched_gt.push_back(m.gt_labels[j]);
    }
    return m;
}

double miou(const SegmentationMap& pred, const SegmentationMap& gt, const Matching& matching) {
    check_pair(pred, gt);
    if (matching.gt_labels.empty()) return 0.0;
    return matching.total_iou() / static_cast<double>(matching.gt_labels.size());
}

double pixel_accuracy(const SegmentationMap& pred, const SegmentationMap& gt, const Matching& matching) {
    check_pair(pred, gt);
    std::map<int, int> to_gt;
    for (const auto& pr : matching.pairs) to_gt[pr.pred] = pr.gt;
    std::size_t correct = 0;
    for (std::size_t k = 0; k < pred.labels.size(); ++k) {
        const auto it = to_gt.find(pred.labels[k]);
        if (it != to_gt.end() && it->second == gt.labels[k]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(pred.labels.size());
}

Score score(const SegmentationMap& pred, const SegmentationMap& gt) {
    Score s;
    s.matching = hungarian_match(pred, gt);
    s.miou = miou(pred, gt, s.matching);
    s.accuracy = pixel_accuracy(pred, gt, s.matching);
    return s;
}

}  // namespace grapl
