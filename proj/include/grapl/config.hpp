#pragma once

#include "grapl/initializers.hpp"
#include "grapl/mrf.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace grapl {

struct GraplConfig {
    int k0 = 14;
    int d = 32;
    double lambda = 64.0;
    double mu = 3.0;
    std::vector<int> steps = {40, 32, 22, 12};
    double early_stop_ce = 1.0;  // per-patch mean cross-entropy, iteration 1 only
    AffinityKind affinity = AffinityKind::MeanColor;
    std::string embeddings;      // GPLE path for the embedding affinity
    double color_scale = 255.0;
    InitKind init = InitKind::Slic;
    double slic_compactness = 1.0;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    double dropout = 0.2;
    GraphTopology topology = GraphTopology::Full;
    bool cold_start = false;
    int max_cycles = 5;

    /// Throws PreconditionError on an invalid combination.
    void validate() const;
};

/// Applies one key = value setting. Keys use underscores; dashes are accepted as well.
/// Throws PreconditionError for unknown keys or unparsable values.
void apply_setting(GraplConfig& config, const std::string& key, const std::string& value);

/// Reads "key = value" lines; '#' starts a comment, blank lines are ignored.
/// Throws InputError if the file cannot be read or a line has no '='.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

/// "40,32,22,12" -> {40, 32, 22, 12}.
std::vector<int> parse_int_list(const std::string& text);

/// "0..9" (inclusive range) or a comma list such as "0,3,7".
std::vector<std::uint64_t> parse_seeds(const std::string& text);

nlohmann::json to_json(const GraplConfig& config);

/// Resolved config as "key = value" lines, readable back by read_config_file.
std::string format_config(const GraplConfig& config);

}  // namespace grapl
