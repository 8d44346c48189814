#pragma once

#include "grapl/image.hpp"
#include "grapl/matrix.hpp"

#include <vector>

namespace grapl {

/// Maximum-profit one-to-one assignment on a rectangular matrix (padded internally with
/// zero-profit dummies). Returns, for every row, the assigned column or -1; exactly
/// min(rows, cols) rows are assigned.
std::vector<int> max_profit_assignment(const Matrix& profit);

struct MatchedPair {
    int pred = 0;
    int gt = 0;
    double iou = 0.0;
};

struct Matching {
    std::vector<int> pred_labels;  // sorted distinct labels of the prediction (IoU rows)
    std::vector<int> gt_labels;    // sorted distinct labels of the ground truth (IoU columns)
    Matrix iou;
    std::vector<MatchedPair> pairs;
    std::vector<int> unmatched_pred;
    std::vector<int> unmatched_gt;

    double total_iou() const;
};

/// IoU between every predicted and ground-truth segment; fills the label lists.
Matrix iou_matrix(const SegmentationMap& pred, const SegmentationMap& gt, std::vector<int>& pred_labels,
                  std::vector<int>& gt_labels);

/// One-to-one matching of predicted to ground-truth segments maximizing the total IoU.
Matching hungarian_match(const SegmentationMap& pred, const SegmentationMap& gt);

/// Mean over ground-truth segments of the IoU with the matched prediction (0 when unmatched).
double miou(const SegmentationMap& pred, const SegmentationMap& gt, const Matching& matching);

/// Fraction of pixels whose predicted label maps through the matching to the ground-truth label.
double pixel_accuracy(const SegmentationMap& pred, const SegmentationMap& gt, const Matching& matching);

struct Score {
    double miou = 0.0;
    double accuracy = 0.0;
    Matching matching;
};

Score score(const SegmentationMap& pred, const SegmentationMap& gt);

}  // namespace grapl
