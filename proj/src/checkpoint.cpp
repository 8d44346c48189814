#include "grapl/checkpoint.hpp"

#include "grapl/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace grapl {

namespace {

constexpr char kMagic[4] = {'G', 'P', 'L', 'W'};
constexpr int kTensorCount = kLearnableCount + 4;

std::vector<std::vector<std::uint32_t>> tensor_dims(const NetworkShape& s) {
    const std::uint32_t c1 = NetworkShape::kConv1, c2 = NetworkShape::kConv2, ch = s.channels, k0 = s.k0;
    const std::uint32_t hh = s.head_h(), hw = s.head_w();
    return {{c1, ch, 3, 3}, {c1}, {c1}, {c1}, {c2, c1, 3, 3}, {c2}, {c2}, {c2}, {k0, c2, hh, hw}, {k0},
            {c1},           {c1}, {c2}, {c2}};
}

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFFu));
    }
    void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
    void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
    const std::vector<unsigned char>& bytes() const { return bytes_; }

private:
    std::vector<unsigned char> bytes_;
};

class Reader {
public:
    Reader(std::vector<unsigned char> bytes, std::string name) : bytes_(std::move(bytes)), name_(std::move(name)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    double f32() { return std::bit_cast<float>(u32()); }
    bool at_end() const { return pos_ == bytes_.size(); }
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw InputError(name_ + ": truncated GPLW file");
    }
    const unsigned char* peek() const { return bytes_.data() + pos_; }
    void skip(std::size_t n) {
        need(n);
        pos_ += n;
    }

private:
    std::vector<unsigned char> bytes_;
    std::string name_;
    std::size_t pos_ = 0;
};

std::vector<const std::vector<double>*> all_tensors(const NetworkParams& p) {
    std::vector<const std::vector<double>*> t;
    for (int i = 0; i < kLearnableCount; ++i) t.push_back(&p.tensor(i));
    for (const auto* v : {&p.bn1_mean, &p.bn1_var, &p.bn2_mean, &p.bn2_var}) t.push_back(v);
    return t;
}

}  // namespace

void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path) {
    params.validate();
    const NetworkShape& s = params.shape;
    Writer w;
    w.raw(kMagic, 4);
    w.u32(kGplwVersion);
    for (int v : {s.channels, s.patch_h, s.patch_w, s.k0}) w.u32(static_cast<std::uint32_t>(v));
    const auto dims = tensor_dims(s);
    w.u32(kTensorCount);
    for (const auto& d : dims) {
        w.u32(static_cast<std::uint32_t>(d.size()));
        for (std::uint32_t x : d) w.u32(x);
    }
    for (const auto* t : all_tensors(params))
        for (double v : *t) w.f32(v);
    std::ofstream out(path, std::ios::binary);
    if (!out.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()))) {
        throw InputError("cannot write " + path.string());
    }
}

NetworkParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r(std::move(bytes), path.string());
    r.need(4);
    if (std::memcmp(r.peek(), kMagic, 4) != 0) throw InputError(path.string() + ": not a GPLW file (bad magic)");
    r.skip(4);
    if (r.u32() != kGplwVersion) throw InputError(path.string() + ": unsupported GPLW version");
    NetworkShape s;
    s.channels = static_cast<int>(r.u32());
    s.patch_h = static_cast<int>(r.u32());
    s.patch_w = static_cast<int>(r.u32());
    s.k0 = static_cast<int>(r.u32());
    if (s.channels < 1 || s.channels > 4 || s.patch_h < kMinPatchSide || s.patch_w < kMinPatchSide ||
        s.patch_h > 4096 || s.patch_w > 4096 || s.k0 < 1 || s.k0 > 256) {
        throw InputError(path.string() + ": invalid GPLW network shape");
    }
    const auto dims = tensor_dims(s);
    if (r.u32() != kTensorCount) throw InputError(path.string() + ": unexpected GPLW tensor count");
    for (const auto& d : dims) {
        if (r.u32() != d.size()) throw InputError(path.string() + ": GPLW shape table mismatch");
        for (std::uint32_t x : d) {
            if (r.u32() != x) throw InputError(path.string() + ": GPLW shape table mismatch");
        }
    }
    NetworkParams p = init_network(s, 0);
    std::vector<std::vector<double>*> targets;
    for (int i = 0; i < kLearnableCount; ++i) targets.push_back(&p.tensor(i));
    for (auto* v : {&p.bn1_mean, &p.bn1_var, &p.bn2_mean, &p.bn2_var}) targets.push_back(v);
    for (auto* t : targets)
        for (double& v : *t) v = r.f32();
    if (!r.at_end()) throw InputError(path.string() + ": trailing bytes in GPLW file");
    try {
        p.validate();
    } catch (const PreconditionError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
    return p;
}

}  // namespace grapl
