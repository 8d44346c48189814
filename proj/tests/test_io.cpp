#include "doctest.h"
#include "support.hpp"

#include "grapl/baseline.hpp"
#include "grapl/config.hpp"
#include "grapl/errors.hpp"
#include "grapl/gple.hpp"

#include <cstring>

using namespace grapl;
using namespace grapl::test;

namespace {

// GPLE bytes written by hand: magic, u32 version, u32 d, u32 dim, f32 payload (little endian).
std::string gple_bytes(std::uint32_t version, std::uint32_t d, std::uint32_t dim, const std::vector<float>& values) {
    std::string out = "GPLE";
    auto put = [&](const void* p, std::size_t n) { out.append(static_cast<const char*>(p), n); };
    put(&version, 4);
    put(&d, 4);
    put(&dim, 4);
    for (float v : values) put(&v, 4);
    return out;
}

}  // namespace

TEST_CASE("GPLE: hand-written file loads exactly") {
    TempDir dir;
    std::vector<float> vals(4 * 3);
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = 0.25f * static_cast<float>(i) - 1.0f;
    write_bytes(dir / "e.gple", gple_bytes(1, 2, 3, vals));
    const Matrix m = load_gple(dir / "e.gple", 2);
    CHECK(m.rows == 4);
    CHECK(m.cols == 3);
    for (std::size_t i = 0; i < vals.size(); ++i) CHECK(m.data[i] == static_cast<double>(vals[i]));
    CHECK(read_gple_header(dir / "e.gple") == std::pair<int, int>{2, 3});
    CHECK(load_gple(dir / "e.gple").rows == 4);
}

TEST_CASE("GPLE: round trip through save_gple, d^2 x k0 floats") {
    TempDir dir;
    std::mt19937_64 rng(1);
    Matrix m(9, 5);
    std::normal_distribution<double> n(0.0, 1.0);
    for (double& v : m.data) v = static_cast<float>(n(rng));
    save_gple(m, 3, dir / "r.gple");
    CHECK(std::filesystem::file_size(dir / "r.gple") == 16u + 9 * 5 * 4);
    CHECK(load_gple(dir / "r.gple", 3).data == m.data);
    CHECK_THROWS_AS(save_gple(m, 4, dir / "bad.gple"), PreconditionError);
}

TEST_CASE("GPLE: validation errors") {
    TempDir dir;
    const std::vector<float> four(4, 1.0f);
    write_bytes(dir / "v.gple", gple_bytes(2, 1, 4, four));
    CHECK_THROWS_AS(load_gple(dir / "v.gple"), InputError);
    std::string bad_magic = gple_bytes(1, 1, 4, four);
    bad_magic[0] = 'X';
    write_bytes(dir / "m.gple", bad_magic);
    CHECK_THROWS_AS(load_gple(dir / "m.gple"), InputError);
    write_bytes(dir / "t.gple", gple_bytes(1, 1, 4, {1.0f, 2.0f}));
    CHECK_THROWS_AS(load_gple(dir / "t.gple"), InputError);
    write_bytes(dir / "x.gple", gple_bytes(1, 1, 4, four) + "z");
    CHECK_THROWS_AS(load_gple(dir / "x.gple"), InputError);
    write_bytes(dir / "z.gple", gple_bytes(1, 0, 4, {}));
    CHECK_THROWS_AS(load_gple(dir / "z.gple"), InputError);
    write_bytes(dir / "nan.gple", gple_bytes(1, 1, 4, {1.0f, std::nanf(""), 0.0f, 0.0f}));
    CHECK_THROWS_AS(load_gple(dir / "nan.gple"), InputError);
    write_bytes(dir / "ok.gple", gple_bytes(1, 1, 4, four));
    CHECK_THROWS_AS(load_gple(dir / "ok.gple", 2), InputError);
    write_bytes(dir / "short.gple", "GPL");
    CHECK_THROWS_AS(read_gple_header(dir / "short.gple"), InputError);
    CHECK_THROWS_AS(load_gple(dir / "missing.gple"), InputError);
}

TEST_CASE("indexed ground-truth PNG keeps the label histogram") {
    TempDir dir;
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> l(0, 40);
    SegmentationMap gt(31, 17);
    for (int& v : gt.labels) v = l(rng);
    save_label_png(gt, dir / "gt.png");
    const SegmentationMap back = load_label_png(dir / "gt.png");
    std::map<int, int> a, b;
    for (int v : gt.labels) ++a[v];
    for (int v : back.labels) ++b[v];
    CHECK(a == b);
}

TEST_CASE("config: defaults, settings and validation") {
    GraplConfig c;
    CHECK(c.k0 == 14);
    CHECK(c.d == 32);
    CHECK(c.lambda == 64.0);
    CHECK(c.mu == 3.0);
    CHECK(c.steps == std::vector<int>{40, 32, 22, 12});
    CHECK_NOTHROW(c.validate());
    apply_setting(c, "graph-topology", "lattice");
    apply_setting(c, " k0 ", " 4 ");
    apply_setting(c, "steps", "1,2");
    apply_setting(c, "cold_start", "true");
    CHECK(c.topology == GraphTopology::Lattice);
    CHECK(c.k0 == 4);
    CHECK(c.steps == std::vector<int>{1, 2});
    CHECK(c.cold_start);
    CHECK_THROWS_AS(apply_setting(c, "nope", "1"), PreconditionError);
    CHECK_THROWS_AS(apply_setting(c, "k0", "4x"), PreconditionError);
    CHECK_THROWS_AS(apply_setting(c, "lambda", "inf"), PreconditionError);
    for (auto [k, v] : std::vector<std::pair<std::string, std::string>>{
             {"k0", "1"}, {"k0", "256"}, {"d", "0"}, {"lambda", "-1"}, {"lr", "0"}, {"dropout", "1"}, {"steps", "3,-1"}}) {
        GraplConfig bad;
        apply_setting(bad, k, v);
        CAPTURE(k);
        CHECK_THROWS_AS(bad.validate(), PreconditionError);
    }
    GraplConfig emb;
    emb.affinity = AffinityKind::Embedding;
    CHECK_THROWS_AS(emb.validate(), PreconditionError);
}

TEST_CASE("config file: parse, comments, format round trip") {
    TempDir dir;
    write_bytes(dir / "c.cfg", "# comment\nk0 = 6\n\nlambda=12.5  # trailing\n");
    const auto kv = read_config_file(dir / "c.cfg");
    CHECK(kv.at("k0") == "6");
    CHECK(kv.at("lambda") == "12.5");
    write_bytes(dir / "bad.cfg", "k0 6\n");
    CHECK_THROWS_AS(read_config_file(dir / "bad.cfg"), InputError);
    CHECK_THROWS_AS(read_config_file(dir / "none.cfg"), InputError);

    GraplConfig c;
    c.k0 = 9;
    c.lambda = 3.25;
    c.init = InitKind::Spatial;
    c.steps = {5, 6};
    write_bytes(dir / "f.cfg", format_config(c));
    GraplConfig back;
    for (const auto& [k, v] : read_config_file(dir / "f.cfg")) apply_setting(back, k, v);
    CHECK(to_json(back) == to_json(c));
}

TEST_CASE("seed and list parsing") {
    CHECK(parse_seeds("0..9").size() == 10u);
    CHECK(parse_seeds("3,1,7") == std::vector<std::uint64_t>{3, 1, 7});
    CHECK_THROWS_AS(parse_seeds("5..1"), PreconditionError);
    CHECK_THROWS_AS(parse_seeds(""), PreconditionError);
    CHECK(parse_int_list("40,32,22,12") == std::vector<int>{40, 32, 22, 12});
    CHECK_THROWS_AS(parse_int_list("1,,2"), PreconditionError);
}

TEST_CASE("baseline: flat image gives a near-regular partition, features and interpolation") {
    const SegmentationMap flat = slic_baseline(Image(40, 40, 3, 0.5), BaselineFeatures::Rgb, 4, 10.0);
    CHECK(flat.label_set().size() == 4u);
    CHECK(default_baseline_compactness(BaselineFeatures::Rgb) == 10.0);
    CHECK(default_baseline_compactness(BaselineFeatures::Embedding) == 1.0);
    CHECK(parse_baseline_features("embedding") == BaselineFeatures::Embedding);
    CHECK_THROWS_AS(parse_baseline_features("lab"), PreconditionError);

    // constant embedding interpolates to a constant; a left/right ramp stays monotone in x
    Matrix emb(4, 1);
    emb.data = {0.0, 1.0, 0.0, 1.0};
    const FeatureImage f = interpolate_embedding(emb, 2, 20, 10);
    CHECK(f.channels == 1);
    for (int y = 0; y < 10; ++y)
        for (int x = 1; x < 20; ++x) CHECK(*f.at(x, y) >= *f.at(x - 1, y));
    CHECK(*f.at(0, 0) == 0.0);
    CHECK(*f.at(19, 9) == 1.0);
    CHECK(*f.at(10, 3) == doctest::Approx(0.5).epsilon(0.06));
    CHECK_THROWS_AS(slic_baseline(Image(20, 10, 3), BaselineFeatures::Embedding, 2, 1.0, nullptr, 2), PreconditionError);
}
