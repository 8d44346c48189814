// Acceptance suite: one PASS / FAIL / BLOCKED line per criterion, with the measured values.
// Exit status is nonzero if any criterion fails. BLOCKED means the required data is absent.

#include "mrf_support.hpp"
#include "support.hpp"

#include "grapl/baseline.hpp"
#include "grapl/dataset_eval.hpp"
#include "grapl/evaluation.hpp"
#include "grapl/inference.hpp"
#include "grapl/log.hpp"
#include "grapl/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>

#include <sys/wait.h>

using namespace grapl;
using namespace grapl::test;

namespace {

enum class Verdict { Pass, Fail, Blocked };

int failures = 0;

void report(const std::string& name, Verdict v, const std::string& detail) {
    const char* tag = v == Verdict::Pass ? "PASS" : v == Verdict::Fail ? "FAIL" : "BLOCKED";
    if (v == Verdict::Fail) ++failures;
    std::cout << tag << "  " << name << ": " << detail << std::endl;
}

Verdict verdict(bool ok) { return ok ? Verdict::Pass : Verdict::Fail; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string format(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

void maxflow_exact() {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> nodes(2, 10);
    std::uniform_real_distribution<double> density(0.1, 0.9);
    int mismatches = 0;
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 200; ++i) {
        const FlowNetwork net = random_network(nodes(rng), density(rng), 20, rng);
        const double truth = brute_force_min_cut(net);
        for (MaxflowSolver s : {MaxflowSolver::PushRelabel, MaxflowSolver::BoykovKolmogorov, MaxflowSolver::EdmondsKarp})
            mismatches += maxflow_mincut(net, s).value != truth;
    }
    const double secs = seconds_since(t0);
    report("max-flow equals brute-force min cut", verdict(mismatches == 0 && secs < 5.0),
           format("200 networks x 3 solvers, %d mismatches, %.3f s (limit 5 s)", mismatches, secs));
}

void binary_mrf_exact() {
    std::mt19937_64 rng(102);
    std::uniform_int_distribution<int> size(2, 12);
    int mismatches = 0;
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 200; ++i) {
        const PottsInstance inst = random_potts(size(rng), 2, rng, true);
        const ExpansionResult r =
            alpha_expansion(to_unary(inst), to_graph(inst), random_labeling(inst.n, 2, rng), 2);
        mismatches += potts_energy(inst, r.labeling.labels) != brute_force_potts_min(inst);
    }
    const double secs = seconds_since(t0);
    report("binary MRF reaches the global minimum", verdict(mismatches == 0 && secs < 10.0),
           format("200 instances, %d mismatches, %.3f s (limit 10 s)", mismatches, secs));
}

void multilabel_descent() {
    std::mt19937_64 rng(103);
    std::uniform_int_distribution<int> size(2, 8), labels(3, 4);
    int non_decreasing = 0, over_bound = 0, counted = 0;
    double ratio_sum = 0.0, worst = 1.0;
    for (int i = 0; i < 100; ++i) {
        const int k = labels(rng);
        const PottsInstance inst = random_potts(size(rng), k, rng, false, 0.7, 20.0, 10.0);
        const ExpansionResult r = alpha_expansion(to_unary(inst), to_graph(inst), random_labeling(inst.n, k, rng), k);
        double e = r.initial.total;
        for (const auto& m : r.moves) {
            if (!m.accepted) continue;
            if (!(m.energy_after < m.energy_before) || m.energy_before != e) ++non_decreasing;
            e = m.energy_after;
        }
        const double opt = brute_force_potts_min(inst), got = potts_energy(inst, r.labeling.labels);
        if (got > 2.0 * opt + 1e-9) ++over_bound;
        if (opt > 0.0) {
            ratio_sum += got / opt;
            worst = std::max(worst, got / opt);
            ++counted;
        }
    }
    report("alpha-expansion descends and stays within 2x optimum", verdict(non_decreasing == 0 && over_bound == 0),
           format("100 instances (K in {3,4}), %d non-decreasing moves, %d over 2x, mean ratio %.4f, worst %.4f",
               non_decreasing, over_bound, ratio_sum / std::max(counted, 1), worst));
}

void lambda_zero_argmax() {
    std::mt19937_64 rng(104);
    std::uniform_int_distribution<int> grid(2, 8), labels(2, 6);
    int wrong = 0;
    for (int i = 0; i < 100; ++i) {
        const int d = grid(rng), k = labels(rng);
        const Image img = random_image(d * 6, d * 5, 3, rng);
        const PatchGrid g = extract_patch_grid(img, d);
        const Matrix probs = random_distributions(d * d, k, rng);
        const Matrix aff = compute_affinities(img, g, {});
        const PairwiseGraph pg = build_pairwise_graph(g, &aff, compute_sigma(aff), 0.0, GraphTopology::Full);
        const ExpansionResult r = alpha_expansion(unary_costs(probs), pg, random_labeling(d * d, k, rng), k);
        for (int p = 0; p < d * d; ++p) {
            int best = 0;
            for (int c = 1; c < k; ++c)
                if (probs(p, c) > probs(p, best)) best = c;
            wrong += r.labeling.labels[p] != best + 1;
        }
    }
    report("lambda = 0 labeling equals the per-patch argmax", verdict(wrong == 0),
           format("100 probability matrices, %d patches differ", wrong));
}

void gradient_check() {
    std::mt19937_64 rng(105);
    NetworkParams p = init_network({3, 5, 7, 3}, 105);
    randomize_params(p, rng, 0.4);
    const int d = 3;
    const Image img = random_image(d * 7, d * 5, 3, rng);
    const PatchBatch b = gather_patches(img, extract_patch_grid(img, d));
    const Matrix targets = random_distributions(d * d, 3, rng);
    const DropoutMasks masks = sample_dropout(p.shape, d * d, 0.2, rng);
    const double err = worst_gradient_error(p, b, targets, d, 3.0, ForwardMode::Train, &masks);
    report("analytic gradients match central differences", verdict(err <= 1e-4),
           format("patch 5x7, K0 = 3, mu = 3, fixed masks, worst relative error %.3g (limit 1e-4, floor 1e-4)", err));
}

void fcn_equivalence() {
    std::mt19937_64 rng(106);
    std::uniform_int_distribution<int> extra(0, 31);
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        const int d = 8;
        const Image img = random_image(d * 20 + extra(rng) % 20, d * 15 + extra(rng) % 15, 3, rng);
        const PatchGrid g = extract_patch_grid(img, d);
        NetworkParams p = init_network({3, g.patch_h, g.patch_w, 5}, 200 + i);
        randomize_params(p, rng, 0.2);
        const LogitMap full = forward_full(p, img);
        const Matrix per_patch = patch_logits(p, gather_patches(img, g), ForwardMode::Eval);
        for (int q = 0; q < g.count(); ++q)
            for (int k = 0; k < 5; ++k)
                worst = std::max(worst, std::abs(full.at(k, g.origin_y(q), g.origin_x(q)) - per_patch(q, k)));
    }
    report("full-image pass equals per-patch logits", verdict(worst <= 1e-5),
           format("10 images, max abs difference %.3g (limit 1e-5)", worst));
}

void hungarian_exact() {
    std::mt19937_64 rng(107);
    std::uniform_int_distribution<int> side(1, 5), num(0, 64);
    int mismatches = 0;
    for (int i = 0; i < 500; ++i) {
        Matrix m(side(rng), side(rng));
        for (double& v : m.data) v = num(rng) / 64.0;
        const std::vector<int> a = max_profit_assignment(m);
        double total = 0.0;
        for (int r = 0; r < m.rows; ++r)
            if (a[r] >= 0) total += m(r, a[r]);
        mismatches += total != brute_force_assignment(m);
    }
    report("assignment total equals brute force", verdict(mismatches == 0),
           format("500 matrices up to 5x5, %d mismatches", mismatches));
}

// Region shapes for the synthetic images, on a w x h canvas.
std::function<bool(int, int)> region_shape(int kind, int w, int h, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.3, 0.7);
    const double a = u(rng), b = u(rng), r = 0.2 + 0.1 * u(rng);
    switch (kind % 5) {
        case 0: return [=](int x, int) { return x >= a * w; };
        case 1: return [=](int, int y) { return y >= b * h; };
        case 2: return [=](int x, int y) { return (x - a * w) * h + (y - b * h) * w * 0.5 > 0; };
        case 3:
            return [=](int x, int y) {
                const double dx = x - a * w, dy = y - b * h, rr = r * std::min(w, h) * 1.5;
                return dx * dx + dy * dy < rr * rr;
            };
        default:
            return [=](int x, int y) { return x > 0.2 * w && x < 0.8 * w && y > 0.25 * h && y < (0.45 + b * 0.5) * h; };
    }
}

// Two-region test image; full_size gives the 481 x 321 natural-image size, otherwise 240 x 160.
Image synthetic_image(int i, SegmentationMap& truth, bool full_size = false) {
    std::mt19937_64 rng(300 + i);
    std::uniform_real_distribution<double> c(0.0, 1.0);
    std::array<double, 3> a{}, b{};
    double dist = 0.0;
    while (dist < 0.5) {
        for (int ch = 0; ch < 3; ++ch) a[ch] = c(rng), b[ch] = c(rng);
        dist = std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
    }
    const int long_side = full_size ? 481 : 240, short_side = full_size ? 321 : 160;
    const int w = i % 2 ? long_side : short_side, h = i % 2 ? short_side : long_side;
    return two_region_image(w, h, a, b, 0.03, 400 + i, region_shape(i, w, h, rng), &truth);
}

void synthetic_end_to_end() {
    GraplConfig config;
    config.k0 = 4;
    double sum = 0.0, worst_miou = 1.0, worst_secs = 0.0;
    for (int i = 0; i < 20; ++i) {
        SegmentationMap truth;
        const Image img = synthetic_image(i, truth);
        const auto t0 = std::chrono::steady_clock::now();
        const GraplRun run = run_grapl(img, config);
        const SegmentationMap pred = segment(run.params, img);
        worst_secs = std::max(worst_secs, seconds_since(t0));
        const double m = score(pred, truth).miou;
        sum += m;
        worst_miou = std::min(worst_miou, m);
    }
    const double mean = sum / 20.0;
    report("synthetic two-region images", verdict(mean >= 0.90 && worst_secs <= 30.0),
           format("20 images, k0 = 4, mean mIoU %.4f (min 0.90), worst image %.4f, slowest %.2f s (limit 30 s)", mean,
               worst_miou, worst_secs));
}

void bsds_benchmark() {
    const char* root = std::getenv("GRAPL_BSDS_DIR");
    const std::string name = "natural-image benchmark vs SLIC baseline";
    if (!root || !std::filesystem::is_directory(std::filesystem::path(root) / "images")) {
        report(name, Verdict::Blocked, "set GRAPL_BSDS_DIR to a directory with images/ and gts/ (indexed PNG)");
        return;
    }
    std::vector<SkippedItem> skipped;
    std::vector<DatasetItem> items =
        discover_dataset(std::filesystem::path(root) / "images", std::filesystem::path(root) / "gts", skipped);
    if (items.size() > 20) items.resize(20);
    if (items.empty()) {
        report(name, Verdict::Blocked, "no image with ground truth found under GRAPL_BSDS_DIR");
        return;
    }
    const GraplConfig config;
    EvalOptions options;
    options.k0 = config.k0;
    const EvalReport grapl = evaluate_dataset(items, config, options);
    const Predictor slic = [&](const DatasetItem&, const Image& image, std::uint64_t) {
        SegmentationMap m = slic_baseline(image, BaselineFeatures::Rgb, config.k0,
                                          default_baseline_compactness(BaselineFeatures::Rgb));
        const int k = static_cast<int>(m.label_set().size());
        return Prediction{std::move(m), k};
    };
    const EvalReport base = evaluate_items(items, slic, options, nlohmann::json::object());
    double slowest = 0.0;
    for (const auto& r : grapl.per_image) slowest = std::max(slowest, r.seconds.value_or(0.0));
    const Aggregate& g = grapl.aggregate;
    const bool ok = grapl.per_image.size() == items.size() && g.miou_mean >= 0.35 &&
                    g.miou_mean > base.aggregate.miou_mean && g.delta_k_mean > 0.0 && slowest <= 90.0;
    report(name, verdict(ok),
           format("%zu images, mIoU %.4f (min 0.35), SLIC-RGB %.4f, mean delta K %.2f, slowest %.1f s (limit 90 s)",
               grapl.per_image.size(), g.miou_mean, base.aggregate.miou_mean, g.delta_k_mean, slowest));
}

// First-step cross-entropy of each iteration t >= 2.
std::vector<double> first_step_ce(const TrainHistory& h) {
    std::vector<double> out;
    for (const auto& s : h.steps)
        if (s.iteration >= 2 && s.step == 1) out.push_back(s.loss.cross_entropy);
    return out;
}

void cold_start_spike() {
    // image-averaged first-step cross-entropy per iteration, as in the averaged loss curves
    std::array<double, 3> warm_sum{}, cold_sum{};
    int images = 0;
    for (int i = 0; i < 4; ++i) {
        SegmentationMap truth;
        const Image img = synthetic_image(i, truth, true);
        const GraplConfig warm;
        GraplConfig cold = warm;
        cold.cold_start = true;
        const auto w = first_step_ce(run_grapl(img, warm).history), c = first_step_ce(run_grapl(img, cold).history);
        if (w.size() != 3 || c.size() != 3) continue;
        for (int t = 0; t < 3; ++t) warm_sum[t] += w[t], cold_sum[t] += c[t];
        ++images;
    }
    bool ok = images == 4;
    std::string ratios;
    for (int t = 0; t < 3; ++t) {
        const double r = cold_sum[t] / warm_sum[t];
        ok = ok && r >= 2.0;
        ratios += format("%st=%d %.2f", t ? ", " : "", t + 2, r);
    }
    report("cold start spikes first-step cross-entropy", verdict(ok),
           format("4 images at 481x321, defaults, cold/warm ratio of mean first-step CE: %s (min 2 each)", ratios.c_str()));
}

int run_cli(const std::string& env, const std::string& args) {
    const std::string cmd = env + " GRAPL_LOG=warn '" + std::string(GRAPL_CLI_PATH) + "' " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void determinism() {
    TempDir dir("grapl_accept");
    SegmentationMap truth;
    const Image img = synthetic_image(3, truth);
    std::filesystem::create_directories(dir / "img");
    std::filesystem::create_directories(dir / "gt");
    save_png(img, dir / "img" / "x.png");
    save_label_png(truth, dir / "gt" / "x.png");
    const std::string in = "'" + (dir / "img" / "x.png").string() + "'";
    const std::string fast = " --k0 4 --steps 20,10 --seed 5 ";
    int codes = 0;
    codes |= run_cli("OMP_NUM_THREADS=1", "segment " + in + fast + "--out '" + (dir / "a").string() + "'");
    codes |= run_cli("OMP_NUM_THREADS=3", "segment " + in + fast + "--out '" + (dir / "b").string() + "'");
    const std::string ev = "eval --images '" + (dir / "img").string() + "' --gts '" + (dir / "gt").string() + "'" +
                           fast + "--no-timing --out ";
    codes |= run_cli("OMP_NUM_THREADS=1", ev + "'" + (dir / "c").string() + "'");
    codes |= run_cli("OMP_NUM_THREADS=3", ev + "'" + (dir / "d").string() + "' --jobs 2");
    int differing = 0;
    for (const char* f : {"labels.png", "history.json", "report.json"}) {
        const std::string a = read_bytes(dir / "a" / f);
        differing += a.empty() || a != read_bytes(dir / "b" / f);
    }
    for (const char* f : {"eval.json", "eval.csv"}) {
        const std::string a = read_bytes(dir / "c" / f);
        differing += a.empty() || a != read_bytes(dir / "d" / f);
    }
    report("repeated runs are byte-identical", verdict(codes == 0 && differing == 0),
           format("segment and eval at 1 and 3 threads, %d of 5 files differ, exit codes %s", differing,
               codes == 0 ? "ok" : "nonzero"));
}

}  // namespace

int main() {
    configure_logging("error");
    const auto t0 = std::chrono::steady_clock::now();
    maxflow_exact();
    binary_mrf_exact();
    multilabel_descent();
    lambda_zero_argmax();
    gradient_check();
    fcn_equivalence();
    hungarian_exact();
    synthetic_end_to_end();
    bsds_benchmark();
    cold_start_spike();
    determinism();
    std::cout << format("%d failed, total %.1f s", failures, seconds_since(t0)) << std::endl;
    return failures == 0 ? 0 : 1;
}
