#include "grapl/config.hpp"

#include "grapl/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace grapl {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    T value{};
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw PreconditionError("invalid value '" + text + "' for " + key);
    }
    return value;
}

double parse_real(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (t.empty() || used != t.size() || !std::isfinite(v)) throw PreconditionError("invalid value '" + text + "' for " + key);
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
    if (t == "0" || t == "false" || t == "no" || t == "off") return false;
    throw PreconditionError("invalid value '" + text + "' for " + key);
}

std::string format_real(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void GraplConfig::validate() const {
    if (k0 < 2) throw PreconditionError("k0 must be >= 2");
    if (k0 > 255) throw PreconditionError("k0 must be <= 255");
    if (d < 1) throw PreconditionError("d must be >= 1");
    if (!(lambda >= 0.0)) throw PreconditionError("lambda must be >= 0");
    if (!(mu >= 0.0)) throw PreconditionError("mu must be >= 0");
    if (steps.empty()) throw PreconditionError("steps must be nonempty");
    for (int s : steps) {
        if (s < 0) throw PreconditionError("steps must be >= 0");
    }
    if (!(lr > 0.0)) throw PreconditionError("lr must be > 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw PreconditionError("dropout must be in [0, 1)");
    if (!(color_scale > 0.0)) throw PreconditionError("color_scale must be > 0");
    if (!(slic_compactness > 0.0)) throw PreconditionError("slic_compactness must be > 0");
    if (max_cycles < 1) throw PreconditionError("max_cycles must be >= 1");
    if (affinity == AffinityKind::Embedding && embeddings.empty()) {
        throw PreconditionError("the embedding affinity needs an embeddings file");
    }
}

void apply_setting(GraplConfig& c, const std::string& raw_key, const std::string& value) {
    std::string key = trim(raw_key);
    for (char& ch : key) {
        if (ch == '-') ch = '_';
    }
    const std::string v = trim(value);
    if (key == "k0") c.k0 = parse_number<int>(key, v);
    else if (key == "d") c.d = parse_number<int>(key, v);
    else if (key == "lambda") c.lambda = parse_real(key, v);
    else if (key == "mu") c.mu = parse_real(key, v);
    else if (key == "steps") c.steps = parse_int_list(v);
    else if (key == "early_stop_ce") c.early_stop_ce = parse_real(key, v);
    else if (key == "affinity") c.affinity = parse_affinity_kind(v);
    else if (key == "embeddings") c.embeddings = v;
    else if (key == "color_scale") c.color_scale = parse_real(key, v);
    else if (key == "init") c.init = parse_init_kind(v);
    else if (key == "slic_compactness") c.slic_compactness = parse_real(key, v);
    else if (key == "lr") c.lr = parse_real(key, v);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
    else if (key == "dropout") c.dropout = parse_real(key, v);
    else if (key == "graph_topology" || key == "topology") c.topology = parse_topology(v);
    else if (key == "cold_start") c.cold_start = parse_bool(key, v);
    else if (key == "max_cycles") c.max_cycles = parse_number<int>(key, v);
    else throw PreconditionError("unknown config key '" + raw_key + "'");
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file " + path.string());
    std::map<std::string, std::string> out;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InputError(path.string() + ":" + std::to_string(number) + ": expected 'key = value'");
        }
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number<int>("list", item));
    if (out.empty()) throw PreconditionError("empty list '" + text + "'");
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    const std::string t = trim(text);
    if (const auto dots = t.find(".."); dots != std::string::npos) {
        const auto lo = parse_number<std::uint64_t>("seeds", t.substr(0, dots));
        const auto hi = parse_number<std::uint64_t>("seeds", t.substr(dots + 2));
        if (hi < lo || hi - lo > 100000) throw PreconditionError("invalid seed range '" + text + "'");
        std::vector<std::uint64_t> out;
        for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
        return out;
    }
    std::vector<std::uint64_t> out;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number<std::uint64_t>("seeds", item));
    if (out.empty()) throw PreconditionError("empty seed list");
    return out;
}

nlohmann::json to_json(const GraplConfig& c) {
    return {{"k0", c.k0},
            {"d", c.d},
            {"lambda", c.lambda},
            {"mu", c.mu},
            {"steps", c.steps},
            {"early_stop_ce", c.early_stop_ce},
            {"affinity", to_string(c.affinity)},
            {"embeddings", c.embeddings},
            {"color_scale", c.color_scale},
            {"init", to_string(c.init)},
            {"slic_compactness", c.slic_compactness},
            {"lr", c.lr},
            {"seed", c.seed},
            {"dropout", c.dropout},
            {"graph_topology", to_string(c.topology)},
            {"cold_start", c.cold_start},
            {"max_cycles", c.max_cycles}};
}

std::string format_config(const GraplConfig& c) {
    std::ostringstream os;
    std::string steps;
    for (std::size_t i = 0; i < c.steps.size(); ++i) steps += (i ? "," : "") + std::to_string(c.steps[i]);
    os << "k0 = " << c.k0 << "\n"
       << "d = " << c.d << "\n"
       << "lambda = " << format_real(c.lambda) << "\n"
       << "mu = " << format_real(c.mu) << "\n"
       << "steps = " << steps << "\n"
       << "early_stop_ce = " << format_real(c.early_stop_ce) << "\n"
       << "affinity = " << to_string(c.affinity) << "\n"
       << "embeddings = " << c.embeddings << "\n"
       << "color_scale = " << format_real(c.color_scale) << "\n"
       << "init = " << to_string(c.init) << "\n"
       << "slic_compactness = " << format_real(c.slic_compactness) << "\n"
       << "lr = " << format_real(c.lr) << "\n"
       << "seed = " << c.seed << "\n"
       << "dropout = " << format_real(c.dropout) << "\n"
       << "graph_topology = " << to_string(c.topology) << "\n"
       << "cold_start = " << (c.cold_start ? "true" : "false") << "\n"
       << "max_cycles = " << c.max_cycles << "\n";
    return os.str();
}

}  // namespace grapl
