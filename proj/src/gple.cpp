#include "grapl/gple.hpp"

#include "grapl/errors.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cmath>
#include <cstring>
#include <fstream>

namespace grapl {

namespace {

constexpr std::array<char, 4> kMagic = {'G', 'P', 'L', 'E'};

std::uint32_t decode_u32(const unsigned char* b) {
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void encode_u32(std::uint32_t v, unsigned char* b) {
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFFu);
}

struct Header {
    int grid_d = 0;
    int dim = 0;
};

Header read_header(std::istream& in, const std::filesystem::path& path) {
    unsigned char raw[16];
    if (!in.read(reinterpret_cast<char*>(raw), sizeof raw)) {
        throw InputError(path.string() + ": truncated GPLE header");
    }
    if (std::memcmp(raw, kMagic.data(), 4) != 0) throw InputError(path.string() + ": not a GPLE file (bad magic)");
    const std::uint32_t version = decode_u32(raw + 4);
    if (version != kGpleVersion) {
        throw InputError(path.string() + ": unsupported GPLE version " + std::to_string(version));
    }
    const std::uint32_t d = decode_u32(raw + 8), dim = decode_u32(raw + 12);
    if (d == 0 || dim == 0 || d > 4096 || dim > 65536) {
        throw InputError(path.string() + ": invalid GPLE dimensions");
    }
    return {static_cast<int>(d), static_cast<int>(dim)};
}

std::ifstream open(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    return in;
}

}  // namespace

std::pair<int, int> read_gple_header(const std::filesystem::path& path) {
    std::ifstream in = open(path);
    Header h = read_header(in, path);
    return {h.grid_d, h.dim};
}

Matrix load_gple(const std::filesystem::path& path, int expected_d) {
    std::ifstream in = open(path);
    const Header h = read_header(in, path);
    if (expected_d > 0 && h.grid_d != expected_d) {
        throw InputError(path.string() + ": GPLE grid side " + std::to_string(h.grid_d) + " does not match d = " +
                         std::to_string(expected_d));
    }
    const std::size_t count = static_cast<std::size_t>(h.grid_d) * h.grid_d * h.dim;
    std::vector<unsigned char> raw(count * 4);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
        throw InputError(path.string() + ": truncated GPLE payload");
    }
    in.peek();
    if (!in.eof()) throw InputError(path.string() + ": trailing bytes after GPLE payload");
    Matrix m(h.grid_d * h.grid_d, h.dim);
    for (std::size_t i = 0; i < count; ++i) {
        const float f = std::bit_cast<float>(decode_u32(raw.data() + 4 * i));
        if (!std::isfinite(f)) throw InputError(path.string() + ": non-finite GPLE value");
        m.data[i] = f;
    }
    return m;
}

void save_gple(const Matrix& embedding, int grid_d, const std::filesystem::path& path) {
    if (grid_d < 1 || embedding.rows != grid_d * grid_d || embedding.cols < 1) {
        throw PreconditionError("save_gple: embedding must have grid_d^2 rows and at least one column");
    }
    std::vector<unsigned char> raw(16 + embedding.data.size() * 4);
    std::memcpy(raw.data(), kMagic.data(), 4);
    encode_u32(kGpleVersion, raw.data() + 4);
    encode_u32(static_cast<std::uint32_t>(grid_d), raw.data() + 8);
    encode_u32(static_cast<std::uint32_t>(embedding.cols), raw.data() + 12);
    for (std::size_t i = 0; i < embedding.data.size(); ++i) {
        encode_u32(std::bit_cast<std::uint32_t>(static_cast<float>(embedding.data[i])), raw.data() + 16 + 4 * i);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
        throw InputError("cannot write " + path.string());
    }
}

}  // namespace grapl
