#include "grapl/cli.hpp"

#include "grapl/baseline.hpp"
#include "grapl/checkpoint.hpp"
#include "grapl/config.hpp"
#include "grapl/dataset_eval.hpp"
#include "grapl/errors.hpp"
#include "grapl/gple.hpp"
#include "grapl/inference.hpp"
#include "grapl/log.hpp"
#include "grapl/trainer.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

namespace grapl {

namespace fs = std::filesystem;

namespace {

// Invalid flag values or combinations; exit code 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Config-affecting flags shared by the training verbs. Only flags given on the command line
/// are applied, on top of the config file.
struct ConfigFlags {
    std::string config_path;
    std::vector<std::pair<std::string, CLI::Option*>> options;
    std::map<std::string, std::string> values;
    bool cold_start = false;
    CLI::Option* cold_start_opt = nullptr;

    void attach(CLI::App& app) {
        app.add_option("--config", config_path, "key = value config file");
        static const std::vector<std::pair<std::string, std::string>> kFlags = {
            {"k0", "initial segment count"},
            {"d", "patch grid side"},
            {"lambda", "pairwise weight"},
            {"mu", "continuity loss weight"},
            {"steps", "gradient steps per iteration, e.g. 40,32,22,12"},
            {"lr", "Adam learning rate"},
            {"seed", "random seed"},
            {"init", "slic|patchwise|seedwise|spatial"},
            {"affinity", "color|position|uniform|embedding"},
            {"embeddings", "GPLE file (or directory of <id>.gple for eval)"},
            {"graph-topology", "full|lattice"},
            {"early-stop-ce", "per-patch cross-entropy threshold for iteration 1"},
            {"dropout", "dropout rate"},
            {"color-scale", "intensity units of the mean-color descriptor"},
            {"slic-compactness", "SLIC compactness of the initializer"},
            {"max-cycles", "alpha-expansion cycle limit"},
        };
        for (const auto& [name, help] : kFlags) {
            options.emplace_back(name, app.add_option("--" + name, values[name], help));
        }
        cold_start_opt = app.add_flag("--cold-start", cold_start, "re-initialize the network every iteration");
    }

    GraplConfig resolve() const {
        GraplConfig c;
        try {
            if (!config_path.empty()) {
                for (const auto& [k, v] : read_config_file(config_path)) apply_setting(c, k, v);
            }
            for (const auto& [name, opt] : options) {
                if (opt->count() > 0) apply_setting(c, name, values.at(name));
            }
            if (cold_start_opt->count() > 0) c.cold_start = cold_start;
            c.validate();
        } catch (const PreconditionError& e) {
            throw UsageError(e.what());
        }
        return c;
    }
};

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!(out << text)) throw std::runtime_error("cannot write " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

Image require_image(const fs::path& path) {
    if (!fs::exists(path)) throw InputError("no such file: " + path.string());
    return load_image(path);
}

int cmd_segment(const GraplConfig& config, const fs::path& image_path, const fs::path& out_dir,
                const std::string& weights_path) {
    const Image image = require_image(image_path);
    ensure_directory(out_dir);
    const GraplRun run = run_grapl(image, config);
    const SegmentationMap labels = segment(run.params, image);
    save_label_png(labels, out_dir / "labels.png");
    save_png(render_overlay(image, labels, 0.5), out_dir / "overlay.png");

    nlohmann::json history = to_json(run.history);
    history["config"] = to_json(config);
    write_json(out_dir / "history.json", history);

    const int k_hat = static_cast<int>(labels.label_set().size());
    nlohmann::json report = {{"image", image_path.filename().string()},
                             {"width", image.width},
                             {"height", image.height},
                             {"config", to_json(config)},
                             {"seed", config.seed},
                             {"grid", {{"d", run.grid.d}, {"patch_w", run.grid.patch_w}, {"patch_h", run.grid.patch_h}}},
                             {"k0", config.k0},
                             {"k_hat", k_hat},
                             {"delta_k", config.k0 - k_hat},
                             {"k_hat_patches", run.history.k_hat},
                             {"patch_labels", run.labeling.labels},
                             {"early_stopped", run.history.early_stopped},
                             {"sigma", run.history.sigma}};
    write_json(out_dir / "report.json", report);
    if (!weights_path.empty()) save_checkpoint(run.params, weights_path);
    std::cout << "segmented " << image_path.string() << ": K = " << k_hat << " -> " << out_dir.string() << "\n";
    return 0;
}

void write_report(const EvalReport& report, const fs::path& out_dir, const std::string& stem) {
    write_json(out_dir / (stem + ".json"), to_json(report));
    write_text(out_dir / (stem + ".csv"), to_csv(report));
    std::cout << "entries " << report.per_image.size() << ", mIoU " << report.aggregate.miou_mean << " +- "
              << report.aggregate.miou_std << ", accuracy " << report.aggregate.accuracy_mean << ", delta K "
              << report.aggregate.delta_k_mean << " -> " << (out_dir / (stem + ".json")).string() << "\n";
}

int cmd_eval(const GraplConfig& config, const fs::path& images, const fs::path& gts, const fs::path& out_dir,
             const std::vector<std::uint64_t>& seeds, int jobs, bool timing) {
    std::vector<SkippedItem> skipped;
    const std::vector<DatasetItem> items = discover_dataset(images, gts, skipped);
    if (items.empty()) throw InputError("empty dataset: no images with ground truth under " + images.string());
    ensure_directory(out_dir);
    EvalOptions options;
    options.seeds = seeds;
    options.jobs = jobs;
    options.timing = timing;
    EvalReport report = evaluate_dataset(items, config, options);
    report.skipped.insert(report.skipped.begin(), skipped.begin(), skipped.end());
    if (report.per_image.empty()) throw InputError("no image could be evaluated");
    write_report(report, out_dir, "eval");
    return 0;
}

int cmd_inspect(const GraplConfig& config, const std::string& history_path, const std::string& out_dir) {
    std::cout << format_config(config);
    if (history_path.empty()) return 0;
    std::ifstream in(history_path);
    if (!in) throw InputError("cannot open " + history_path);
    nlohmann::json h;
    try {
        in >> h;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(history_path + ": " + e.what());
    }
    if (!h.contains("steps") || !h.contains("iterations")) throw InputError(history_path + ": not a history file");
    const fs::path out = out_dir.empty() ? fs::path(history_path).parent_path() : fs::path(out_dir);
    ensure_directory(out.empty() ? fs::path(".") : out);

    std::ostringstream loss;
    loss << "global_step,iteration,step,cross_entropy,continuity,total,mean_cross_entropy\n";
    int global = 0;
    for (const auto& s : h["steps"]) {
        loss << ++global << ',' << s["iteration"] << ',' << s["step"] << ',' << s["cross_entropy"].dump() << ','
             << s["continuity"].dump() << ',' << s["total"].dump() << ',' << s["mean_cross_entropy"].dump() << '\n';
    }
    std::ostringstream energy;
    energy << "iteration,steps_run,energy_before,unary_before,pairwise_before,energy_after,unary_after,"
              "pairwise_after,k_before,k_after\n";
    for (const auto& it : h["iterations"]) {
        const auto& b = it["energy_before"];
        const auto& a = it["energy_after"];
        energy << it["iteration"] << ',' << it["steps_run"] << ',' << b["total"].dump() << ',' << b["unary"].dump()
               << ',' << b["pairwise"].dump() << ',' << a["total"].dump() << ',' << a["unary"].dump() << ','
               << a["pairwise"].dump() << ',' << it["k_before"] << ',' << it["k_after"] << '\n';
    }
    write_text(out / "loss_curve.csv", loss.str());
    write_text(out / "energies.csv", energy.str());
    std::cout << "wrote " << (out / "loss_curve.csv").string() << " and " << (out / "energies.csv").string() << "\n";
    return 0;
}

struct BaselineArgs {
    std::string image;
    std::string images;
    std::string gts;
    std::string gt;
    std::string out = "out";
    std::string features = "rgb";
    std::string embeddings;
    int k = 14;
    std::optional<double> compactness;
    int jobs = 1;
    bool no_timing = false;
};

int cmd_baseline(const BaselineArgs& a) {
    BaselineFeatures features;
    try {
        features = parse_baseline_features(a.features);
    } catch (const PreconditionError& e) {
        throw UsageError(e.what());
    }
    if (a.k < 1) throw UsageError("--k must be >= 1");
    if (a.image.empty() == a.images.empty()) throw UsageError("give exactly one of --image or --images");
    if (!a.images.empty() && a.gts.empty()) throw UsageError("--images needs --gts");
    if (features == BaselineFeatures::Embedding && a.embeddings.empty()) {
        throw UsageError("embedding features need --embeddings");
    }
    const double compactness = a.compactness.value_or(default_baseline_compactness(features));
    auto predict = [&](const std::string& id, const Image& image) {
        if (features == BaselineFeatures::Rgb) return slic_baseline(image, features, a.k, compactness);
        const fs::path path = resolve_embedding_path(a.embeddings, id);
        if (!fs::exists(path)) throw InputError("missing embedding file " + path.string());
        const auto [grid_d, dim] = read_gple_header(path);
        (void)dim;
        const Matrix emb = load_gple(path, grid_d);
        return slic_baseline(image, features, a.k, compactness, &emb, grid_d);
    };
    const nlohmann::json config = {
        {"baseline", "slic"}, {"features", a.features}, {"k", a.k}, {"compactness", compactness}};

    if (!a.image.empty()) {
        const Image image = require_image(a.image);
        ensure_directory(a.out);
        const std::string id = fs::path(a.image).stem().string();
        const SegmentationMap labels = predict(id, image);
        save_label_png(labels, fs::path(a.out) / "labels.png");
        save_png(render_overlay(image, labels, 0.5), fs::path(a.out) / "overlay.png");
        nlohmann::json report = {{"image", fs::path(a.image).filename().string()},
                                 {"config", config},
                                 {"k_hat", labels.label_set().size()}};
        if (!a.gt.empty()) {
            if (!fs::exists(a.gt)) throw InputError("no such file: " + a.gt);
            const ImageResult r = score_prediction(labels, {load_label_png(a.gt)}, {fs::path(a.gt).filename().string()}, a.k);
            report["miou"] = r.miou;
            report["accuracy"] = r.accuracy;
        }
        write_json(fs::path(a.out) / "report.json", report);
        std::cout << "baseline " << a.features << ": K = " << labels.label_set().size() << " -> " << a.out << "\n";
        return 0;
    }

    std::vector<SkippedItem> skipped;
    const std::vector<DatasetItem> items = discover_dataset(a.images, a.gts, skipped);
    if (items.empty()) throw InputError("empty dataset: no images with ground truth under " + a.images);
    ensure_directory(a.out);
    EvalOptions options;
    options.jobs = a.jobs;
    options.timing = !a.no_timing;
    options.k0 = a.k;
    Predictor predictor = [&](const DatasetItem& item, const Image& image, std::uint64_t) {
        Prediction p;
        p.map = predict(item.id, image);
        p.k_hat = static_cast<int>(p.map.label_set().size());
        return p;
    };
    EvalReport report = evaluate_items(items, predictor, options, config);
    report.skipped.insert(report.skipped.begin(), skipped.begin(), skipped.end());
    if (report.per_image.empty()) throw InputError("no image could be evaluated");
    write_report(report, a.out, "baseline");
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    configure_logging();
    CLI::App app{"GraPL unsupervised image segmentation"};
    app.require_subcommand(1);

    // segment
    auto* seg = app.add_subcommand("segment", "train on one image and write its segmentation");
    ConfigFlags seg_flags;
    seg_flags.attach(*seg);
    std::string seg_image, seg_out = "out", seg_weights;
    seg->add_option("--image,image", seg_image, "input image (PNG or PPM/PGM)")->required();
    seg->add_option("--out", seg_out, "output directory");
    seg->add_option("--save-weights", seg_weights, "also write the trained parameters (GPLW)");

    // eval
    auto* ev = app.add_subcommand("eval", "train and score every (image, seed) of a dataset");
    ConfigFlags ev_flags;
    ev_flags.attach(*ev);
    std::string ev_images, ev_gts, ev_out = "out", ev_seeds;
    int ev_jobs = 1;
    bool ev_no_timing = false;
    ev->add_option("--images", ev_images, "image directory")->required();
    ev->add_option("--gts", ev_gts, "ground-truth directory (indexed PNGs)")->required();
    ev->add_option("--out", ev_out, "output directory");
    ev->add_option("--seeds", ev_seeds, "seed list, e.g. 0..9 or 0,4,7 (default: --seed)");
    ev->add_option("--jobs", ev_jobs, "parallel (image, seed) jobs")->check(CLI::PositiveNumber);
    ev->add_flag("--no-timing", ev_no_timing, "write null runtimes so reports are reproducible byte for byte");

    // inspect
    auto* ins = app.add_subcommand("inspect", "print the resolved config; export history curves as CSV");
    ConfigFlags ins_flags;
    ins_flags.attach(*ins);
    std::string ins_history, ins_out;
    ins->add_option("--history", ins_history, "history.json of a segment run");
    ins->add_option("--out", ins_out, "directory for loss_curve.csv and energies.csv");

    // baseline
    auto* base = app.add_subcommand("baseline", "SLIC baseline over RGB or embedding features");
    BaselineArgs ba;
    base->add_option("--image", ba.image, "single input image");
    base->add_option("--gt", ba.gt, "ground truth for the single image");
    base->add_option("--images", ba.images, "image directory");
    base->add_option("--gts", ba.gts, "ground-truth directory");
    base->add_option("--out", ba.out, "output directory");
    base->add_option("--k", ba.k, "SLIC segment count");
    base->add_option("--features", ba.features, "rgb|embedding");
    base->add_option("--embeddings", ba.embeddings, "GPLE file, or directory of <id>.gple");
    base->add_option("--compactness", ba.compactness, "SLIC compactness (default 10 for rgb, 1 for embedding)");
    base->add_option("--jobs", ba.jobs, "parallel images")->check(CLI::PositiveNumber);
    base->add_flag("--no-timing", ba.no_timing, "write null runtimes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitBadArgs;
    }

    try {
        if (seg->parsed()) return cmd_segment(seg_flags.resolve(), seg_image, seg_out, seg_weights);
        if (ev->parsed()) {
            const GraplConfig config = ev_flags.resolve();
            std::vector<std::uint64_t> seeds{config.seed};
            if (!ev_seeds.empty()) {
                try {
                    seeds = parse_seeds(ev_seeds);
                } catch (const PreconditionError& e) {
                    throw UsageError(e.what());
                }
            }
            return cmd_eval(config, ev_images, ev_gts, ev_out, seeds, ev_jobs, !ev_no_timing);
        }
        if (ins->parsed()) return cmd_inspect(ins_flags.resolve(), ins_history, ins_out);
        if (base->parsed()) return cmd_baseline(ba);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadArgs;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitBadArgs;
}

}  // namespace grapl
