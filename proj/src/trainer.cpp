#include "grapl/trainer.hpp"

#include "grapl/adam.hpp"
#include "grapl/errors.hpp"
#include "grapl/gple.hpp"
#include "grapl/log.hpp"

#include <random>
#include <set>

namespace grapl {

namespace {

constexpr std::uint64_t kStreamInitLabels = 1;
constexpr std::uint64_t kStreamNetwork = 2;
constexpr std::uint64_t kStreamDropout = 3;
constexpr std::uint64_t kStreamColdStart = 100;

nlohmann::json energy_json(const EnergyBreakdown& e) {
    return {{"total", e.total}, {"unary", e.unary}, {"pairwise", e.pairwise}};
}

}  // namespace

int distinct_labels(const PatchLabeling& labeling) {
    return static_cast<int>(std::set<int>(labeling.labels.begin(), labeling.labels.end()).size());
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over the pair
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

AffinityMetric make_affinity_metric(const GraplConfig& config) {
    AffinityMetric m;
    m.kind = config.affinity;
    m.color_scale = config.color_scale;
    if (m.kind == AffinityKind::Embedding) {
        if (config.embeddings.empty()) throw PreconditionError("the embedding affinity needs an embeddings file");
        m.embedding = load_gple(config.embeddings, config.d);
    }
    return m;
}

PairwiseGraph make_pairwise_graph(const Image& image, const PatchGrid& grid, const GraplConfig& config,
                                  const AffinityMetric& metric, bool& degenerate_sigma) {
    degenerate_sigma = false;
    if (metric.kind == AffinityKind::UniformLattice) {
        return build_pairwise_graph(grid, nullptr, 0.0, config.lambda, GraphTopology::Lattice);
    }
    if (grid.count() < 2) return build_pairwise_graph(grid, nullptr, 0.0, config.lambda, config.topology);
    const Matrix aff = compute_affinities(image, grid, metric);
    const double sigma = compute_sigma(aff);
    if (!(sigma > 0.0)) {
        spdlog::warn("affinities are constant (sigma = 0); using phi = 1/dist");
        degenerate_sigma = true;
        return build_pairwise_graph(grid, nullptr, 0.0, config.lambda, config.topology);
    }
    return build_pairwise_graph(grid, &aff, sigma, config.lambda, config.topology);
}

GraplRun run_grapl(const Image& image, const GraplConfig& config) {
    return run_grapl(image, config, make_affinity_metric(config));
}

GraplRun run_grapl(const Image& image, const GraplConfig& config, const AffinityMetric& metric) {
    config.validate();
    image.validate();
    GraplRun run;
    run.grid = extract_patch_grid(image, config.d);
    const PatchGrid& grid = run.grid;
    const int n = grid.count();
    const PatchBatch batch = gather_patches(image, grid);

    SlicParams slic;
    slic.k = config.k0;
    slic.compactness = config.slic_compactness;
    SoftPatchLabels soft =
        initialize(config.init, image, grid, config.k0, derive_seed(config.seed, kStreamInitLabels), slic);
    Matrix targets = soft.dist;
    PatchLabeling labels = hard_labels(soft);

    const NetworkShape shape{image.channels, grid.patch_h, grid.patch_w, config.k0};
    run.params = init_network(shape, derive_seed(config.seed, kStreamNetwork), config.dropout);
    const AdamConfig adam_config{config.lr};
    AdamState adam = make_adam_state(run.params, adam_config);
    std::mt19937_64 dropout_rng(derive_seed(config.seed, kStreamDropout));

    bool degenerate = false;
    const PairwiseGraph graph = make_pairwise_graph(image, grid, config, metric, degenerate);
    run.history.sigma = graph.sigma;
    run.history.degenerate_sigma = degenerate;
    ExpansionOptions expansion;
    expansion.max_cycles = config.max_cycles;

    for (std::size_t t = 0; t < config.steps.size(); ++t) {
        IterationRecord it;
        it.iteration = static_cast<int>(t) + 1;
        if (t > 0 && config.cold_start) {
            run.params = init_network(shape, derive_seed(config.seed, kStreamColdStart + t), config.dropout);
            adam = make_adam_state(run.params, adam_config);
            it.reinitialized = true;
            ++run.history.reinit_count;
        }
        for (int s = 0; s < config.steps[t]; ++s) {
            const DropoutMasks masks = sample_dropout(shape, n, config.dropout, dropout_rng);
            LossResult r = loss_and_gradients(run.params, batch, targets, grid.d, config.mu, ForwardMode::Train, &masks);
            update_running_stats(run.params, r.stats);
            adam_step(run.params, r.grads, adam);
            StepRecord rec{it.iteration, s + 1, r.loss, r.loss.cross_entropy / n};
            run.history.steps.push_back(rec);
            ++it.steps_run;
            if (t == 0 && rec.mean_cross_entropy < config.early_stop_ce) {
                it.early_stopped = true;
                run.history.early_stopped = true;
                break;
            }
        }

        const Matrix probs = forward_patches(run.params, batch, ForwardMode::Eval);
        const UnaryCosts unary = unary_costs(probs);
        ExpansionResult cut = alpha_expansion(unary, graph, labels, config.k0, expansion);
        it.energy_before = cut.initial;
        it.energy_after = cut.final;
        it.k_before = distinct_labels(labels);
        it.k_after = distinct_labels(cut.labeling);
        it.moves = static_cast<int>(cut.moves.size());
        for (const auto& m : cut.moves) it.accepted_moves += m.accepted ? 1 : 0;
        it.cycles = cut.cycles;
        labels = std::move(cut.labeling);
        targets = one_hot(labels).dist;
        spdlog::debug("iteration {}: {} steps, energy {:.4f} -> {:.4f}, K {} -> {}", it.iteration, it.steps_run,
                      it.energy_before.total, it.energy_after.total, it.k_before, it.k_after);
        run.history.iterations.push_back(it);
    }
    run.labeling = std::move(labels);
    run.history.k_hat = distinct_labels(run.labeling);
    return run;
}

nlohmann::json to_json(const TrainHistory& h) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : h.steps) {
        steps.push_back({{"iteration", s.iteration},
                         {"step", s.step},
                         {"cross_entropy", s.loss.cross_entropy},
                         {"continuity", s.loss.continuity},
                         {"total", s.loss.total},
                         {"mu", s.loss.mu},
                         {"mean_cross_entropy", s.mean_cross_entropy}});
    }
    nlohmann::json iterations = nlohmann::json::array();
    for (const auto& it : h.iterations) {
        iterations.push_back({{"iteration", it.iteration},
                              {"steps_run", it.steps_run},
                              {"early_stopped", it.early_stopped},
                              {"reinitialized", it.reinitialized},
                              {"energy_before", energy_json(it.energy_before)},
                              {"energy_after", energy_json(it.energy_after)},
                              {"k_before", it.k_before},
                              {"k_after", it.k_after},
                              {"moves", it.moves},
                              {"accepted_moves", it.accepted_moves},
                              {"cycles", it.cycles}});
    }
    return {{"steps", steps},
            {"iterations", iterations},
            {"early_stopped", h.early_stopped},
            {"sigma", h.sigma},
            {"degenerate_sigma", h.degenerate_sigma},
            {"reinit_count", h.reinit_count},
            {"k_hat", h.k_hat}};
}

}  // namespace grapl
