#include "grapl/dataset_eval.hpp"

#include "grapl/errors.hpp"
#include "grapl/inference.hpp"
#include "grapl/log.hpp"
#include "grapl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <set>
#include <sstream>

namespace grapl {

namespace fs = std::filesystem;

namespace {

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".pnm";
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string format_number(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace

std::vector<DatasetItem> discover_dataset(const fs::path& images_dir, const fs::path& gts_dir,
                                          std::vector<SkippedItem>& skipped) {
    if (!fs::is_directory(images_dir)) throw InputError("not a directory: " + images_dir.string());
    if (!fs::is_directory(gts_dir)) throw InputError("not a directory: " + gts_dir.string());
    const std::vector<fs::path> gt_files = sorted_files(gts_dir);
    std::vector<DatasetItem> items;
    for (const fs::path& img : sorted_files(images_dir)) {
        DatasetItem item{img.stem().string(), img, {}};
        for (const fs::path& g : gt_files) {
            const std::string stem = g.stem().string();
            if (stem == item.id) {
                item.gts.push_back(g);
            } else if (stem.size() > item.id.size() + 1 && stem.compare(0, item.id.size(), item.id) == 0 &&
                       stem[item.id.size()] == '_' &&
                       std::all_of(stem.begin() + item.id.size() + 1, stem.end(), ::isdigit)) {
                item.gts.push_back(g);
            }
        }
        if (fs::is_directory(gts_dir / item.id)) {
            for (const fs::path& g : sorted_files(gts_dir / item.id)) item.gts.push_back(g);
        }
        if (item.gts.empty()) {
            spdlog::warn("{}: no ground truth found, skipping", item.id);
            skipped.push_back({item.id, "no ground truth"});
            continue;
        }
        items.push_back(std::move(item));
    }
    return items;
}

fs::path resolve_embedding_path(const fs::path& spec, const std::string& id) {
    return fs::is_directory(spec) ? spec / (id + ".gple") : spec;
}

ImageResult score_prediction(const SegmentationMap& pred, const std::vector<SegmentationMap>& gts,
                             const std::vector<std::string>& gt_names, int k0) {
    if (gts.empty()) throw PreconditionError("score_prediction: no ground truth");
    ImageResult r;
    r.k_hat = static_cast<int>(pred.label_set().size());
    r.delta_k = k0 - r.k_hat;
    r.miou = -1.0;
    r.accuracy = -1.0;
    for (std::size_t i = 0; i < gts.size(); ++i) {
        Score s = score(pred, gts[i]);
        r.per_gt.push_back({i < gt_names.size() ? gt_names[i] : std::to_string(i), s.miou, s.accuracy});
        if (s.miou > r.miou) {
            r.miou = s.miou;
            r.pairs = s.matching.pairs;
        }
        r.accuracy = std::max(r.accuracy, s.accuracy);
    }
    return r;
}

Aggregate aggregate_results(const std::vector<ImageResult>& results) {
    Aggregate a;
    if (results.empty()) return a;
    const double n = static_cast<double>(results.size());
    for (const auto& r : results) {
        a.miou_mean += r.miou;
        a.accuracy_mean += r.accuracy;
        a.delta_k_mean += r.delta_k;
        a.k_hat_mean += r.k_hat;
    }
    a.miou_mean /= n;
    a.accuracy_mean /= n;
    a.delta_k_mean /= n;
    a.k_hat_mean /= n;
    for (const auto& r : results) {
        a.miou_std += (r.miou - a.miou_mean) * (r.miou - a.miou_mean);
        a.accuracy_std += (r.accuracy - a.accuracy_mean) * (r.accuracy - a.accuracy_mean);
    }
    a.miou_std = std::sqrt(a.miou_std / n);
    a.accuracy_std = std::sqrt(a.accuracy_std / n);
    return a;
}

EvalReport evaluate_items(const std::vector<DatasetItem>& items, const Predictor& predictor,
                          const EvalOptions& options, nlohmann::json config_json) {
    if (options.seeds.empty()) throw PreconditionError("evaluate: no seeds");
    EvalReport report;
    report.config = std::move(config_json);

    // Load inputs serially so skips are reported in a fixed order.
    struct Loaded {
        const DatasetItem* item;
        Image image;
        std::vector<SegmentationMap> gts;
        std::vector<std::string> names;
    };
    std::vector<Loaded> loaded;
    for (const DatasetItem& item : items) {
        Loaded l{&item, {}, {}, {}};
        try {
            l.image = load_image(item.image);
        } catch (const InputError& e) {
            spdlog::warn("{}: {}", item.id, e.what());
            report.skipped.push_back({item.id, e.what()});
            continue;
        }
        for (const fs::path& g : item.gts) {
            try {
                SegmentationMap gt = load_label_png(g);
                if (gt.width != l.image.width || gt.height != l.image.height) {
                    throw InputError(g.string() + ": ground truth size does not match the image");
                }
                l.gts.push_back(std::move(gt));
                l.names.push_back(g.filename().string());
            } catch (const InputError& e) {
                spdlog::warn("{}: {}", item.id, e.what());
                report.skipped.push_back({item.id + ":" + g.filename().string(), e.what()});
            }
        }
        if (l.gts.empty()) {
            report.skipped.push_back({item.id, "no readable ground truth"});
            continue;
        }
        loaded.push_back(std::move(l));
    }

    const std::size_t seeds = options.seeds.size();
    const long total = static_cast<long>(loaded.size() * seeds);
    std::vector<ImageResult> results(total);
    std::vector<std::string> errors(total);
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, options.jobs))
    for (long job = 0; job < total; ++job) {
        const Loaded& l = loaded[job / seeds];
        const std::uint64_t seed = options.seeds[job % seeds];
        try {
            const auto start = std::chrono::steady_clock::now();
            Prediction pred = predictor(*l.item, l.image, seed);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            ImageResult r = score_prediction(pred.map, l.gts, l.names, options.k0);
            r.id = l.item->id;
            r.seed = seed;
            r.k_hat = pred.k_hat;
            r.delta_k = options.k0 - pred.k_hat;
            if (options.timing) r.seconds = secs;
            spdlog::info("{} seed {}: mIoU {:.4f}, accuracy {:.4f}, K {}", r.id, seed, r.miou, r.accuracy, r.k_hat);
            results[job] = std::move(r);
        } catch (const std::exception& e) {
            errors[job] = e.what();
        }
    }
    for (long job = 0; job < total; ++job) {
        if (!errors[job].empty()) {
            const std::string id = loaded[job / seeds].item->id;
            spdlog::warn("{} seed {}: {}", id, options.seeds[job % seeds], errors[job]);
            report.skipped.push_back({id + "@" + std::to_string(options.seeds[job % seeds]), errors[job]});
        } else {
            report.per_image.push_back(std::move(results[job]));
        }
    }
    report.aggregate = aggregate_results(report.per_image);
    return report;
}

EvalReport evaluate_dataset(const std::vector<DatasetItem>& items, const GraplConfig& config,
                            const EvalOptions& options) {
    config.validate();
    const bool per_image_metric = config.affinity == AffinityKind::Embedding;
    const AffinityMetric shared = per_image_metric ? AffinityMetric{} : make_affinity_metric(config);
    Predictor predictor = [&](const DatasetItem& item, const Image& image, std::uint64_t seed) {
        GraplConfig c = config;
        c.seed = seed;
        if (per_image_metric) c.embeddings = resolve_embedding_path(config.embeddings, item.id).string();
        const GraplRun run = per_image_metric ? run_grapl(image, c) : run_grapl(image, c, shared);
        Prediction p;
        p.map = segment(run.params, image);
        p.k_hat = static_cast<int>(p.map.label_set().size());
        return p;
    };
    EvalOptions opts = options;
    opts.k0 = config.k0;
    nlohmann::json cj = to_json(config);
    cj.erase("seed");
    cj["seeds"] = options.seeds;
    return evaluate_items(items, predictor, opts, cj);
}

nlohmann::json to_json(const EvalReport& report) {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& r : report.per_image) {
        nlohmann::json gts = nlohmann::json::array();
        for (const auto& g : r.per_gt) gts.push_back({{"file", g.file}, {"miou", g.miou}, {"accuracy", g.accuracy}});
        nlohmann::json pairs = nlohmann::json::array();
        for (const auto& p : r.pairs) pairs.push_back({{"pred", p.pred}, {"gt", p.gt}, {"iou", p.iou}});
        per.push_back({{"id", r.id},
                       {"seed", r.seed},
                       {"miou", r.miou},
                       {"accuracy", r.accuracy},
                       {"k_hat", r.k_hat},
                       {"delta_k", r.delta_k},
                       {"seconds", r.seconds ? nlohmann::json(*r.seconds) : nlohmann::json(nullptr)},
                       {"per_gt", gts},
                       {"pairs", pairs}});
    }
    nlohmann::json skipped = nlohmann::json::array();
    for (const auto& s : report.skipped) skipped.push_back({{"id", s.id}, {"reason", s.reason}});
    const Aggregate& a = report.aggregate;
    return {{"config", report.config},
            {"per_image", per},
            {"aggregate",
             {{"miou_mean", a.miou_mean},
              {"miou_std", a.miou_std},
              {"accuracy_mean", a.accuracy_mean},
              {"accuracy_std", a.accuracy_std},
              {"delta_k_mean", a.delta_k_mean},
              {"k_hat_mean", a.k_hat_mean},
              {"entries", report.per_image.size()}}},
            {"skipped", skipped}};
}

std::string to_csv(const EvalReport& report) {
    std::ostringstream os;
    os << "id,seed,miou,accuracy,k_hat,delta_k,seconds\n";
    for (const auto& r : report.per_image) {
        os << r.id << ',' << r.seed << ',' << format_number(r.miou) << ',' << format_number(r.accuracy) << ','
           << r.k_hat << ',' << r.delta_k << ',' << (r.seconds ? format_number(*r.seconds) : "") << '\n';
    }
    return os.str();
}

}  // namespace grapl
