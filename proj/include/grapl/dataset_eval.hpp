#pragma once

#include "grapl/config.hpp"
#include "grapl/evaluation.hpp"
#include "grapl/image.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace grapl {

/// One image and its ground-truth annotations, aligned by file stem.
struct DatasetItem {
    std::string id;
    std::filesystem::path image;
    std::vector<std::filesystem::path> gts;
};

struct SkippedItem {
    std::string id;
    std::string reason;
};

/// Pairs images with ground truths found as <gts>/<stem>.png, <gts>/<stem>_<n>.png, or
/// <gts>/<stem>/*.png. Images without any ground truth are reported in `skipped`.
std::vector<DatasetItem> discover_dataset(const std::filesystem::path& images_dir,
                                          const std::filesystem::path& gts_dir, std::vector<SkippedItem>& skipped);

struct GtScore {
    std::string file;
    double miou = 0.0;
    double accuracy = 0.0;
};

struct ImageResult {
    std::string id;
    std::uint64_t seed = 0;
    double miou = 0.0;      // maximum over annotations
    double accuracy = 0.0;  // maximum over annotations
    int k_hat = 0;
    int delta_k = 0;
    std::optional<double> seconds;
    std::vector<GtScore> per_gt;
    std::vector<MatchedPair> pairs;  // matching against the annotation with the best mIoU
};

struct Aggregate {
    double miou_mean = 0.0;
    double miou_std = 0.0;  // population standard deviation over all (image, seed) entries
    double accuracy_mean = 0.0;
    double accuracy_std = 0.0;
    double delta_k_mean = 0.0;
    double k_hat_mean = 0.0;
};

struct EvalReport {
    nlohmann::json config;
    std::vector<ImageResult> per_image;
    std::vector<SkippedItem> skipped;
    Aggregate aggregate;
};

/// Scores a prediction against every annotation and keeps the per-metric maximum.
ImageResult score_prediction(const SegmentationMap& pred, const std::vector<SegmentationMap>& gts,
                             const std::vector<std::string>& gt_names, int k0);

Aggregate aggregate_results(const std::vector<ImageResult>& results);

struct Prediction {
    SegmentationMap map;
    int k_hat = 0;
};

/// Produces a label map for (item, image, seed).
using Predictor = std::function<Prediction(const DatasetItem& item, const Image& image, std::uint64_t seed)>;

/// A directory resolves to <dir>/<id>.gple, anything else is used as is.
std::filesystem::path resolve_embedding_path(const std::filesystem::path& spec, const std::string& id);

struct EvalOptions {
    std::vector<std::uint64_t> seeds = {0};
    int jobs = 1;
    bool timing = true;
    int k0 = 14;  // for delta_k
};

/// Runs the predictor on every (image, seed) pair, jobs in parallel, results in (image, seed) order.
/// Unreadable images or ground truths are skipped with a warning and recorded.
EvalReport evaluate_items(const std::vector<DatasetItem>& items, const Predictor& predictor,
                          const EvalOptions& options, nlohmann::json config_json);

/// GraPL training plus inference for every (image, seed).
EvalReport evaluate_dataset(const std::vector<DatasetItem>& items, const GraplConfig& config,
                            const EvalOptions& options);

nlohmann::json to_json(const EvalReport& report);
std::string to_csv(const EvalReport& report);

}  // namespace grapl
