#include "grapl/errors.hpp"
#include "grapl/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

namespace grapl {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) {
        throw InputError("cannot open '" + path.string() + "'");
    }
    return f;
}

bool has_png_signature(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    unsigned char sig[8] = {};
    in.read(reinterpret_cast<char*>(sig), 8);
    return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

// Decoded PNG: 8-bit samples, either raw palette indices or expanded gray/RGB.
struct RawPng {
    int width = 0;
    int height = 0;
    int channels = 0;
    int color_type = 0;
    std::vector<std::uint8_t> samples;
};

class PngReader {
public:
    explicit PngReader(const std::filesystem::path& path) : path_(path), file_(open_file(path, "rb")) {
        png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (!png_) throw InputError("libpng: out of memory");
        info_ = png_create_info_struct(png_);
        if (!info_) throw InputError("libpng: out of memory");
    }
    ~PngReader() { png_destroy_read_struct(&png_, &info_, nullptr); }
    PngReader(const PngReader&) = delete;
    PngReader& operator=(const PngReader&) = delete;

    // keep_indices: do not expand palette images (label maps).
    RawPng read(bool keep_indices) {
        RawPng out;
        std::vector<png_bytep> rows;
        if (setjmp(png_jmpbuf(png_))) {
            throw InputError("corrupt PNG '" + path_.string() + "'");
        }
        png_init_io(png_, file_.get());
        png_read_info(png_, info_);
        out.width = static_cast<int>(png_get_image_width(png_, info_));
        out.height = static_cast<int>(png_get_image_height(png_, info_));
        out.color_type = png_get_color_type(png_, info_);
        int bit_depth = png_get_bit_depth(png_, info_);

        if (out.color_type == PNG_COLOR_TYPE_PALETTE) {
            if (keep_indices) {
                if (bit_depth < 8) png_set_packing(png_);
            } else {
                png_set_palette_to_rgb(png_);
                png_set_strip_alpha(png_);
            }
        }
        if (out.color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png_);
        if (bit_depth == 16) png_set_strip_16(png_);
        if (out.color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png_);
        if (!keep_indices && png_get_valid(png_, info_, PNG_INFO_tRNS)) {
            // transparency chunks carry no intensity; drop them
            png_set_strip_alpha(png_);
        }
        png_read_update_info(png_, info_);
        out.channels = png_get_channels(png_, info_);
        std::size_t rowbytes = png_get_rowbytes(png_, info_);
        if (out.width <= 0 || out.height <= 0) {
            throw InputError("zero-dimension image '" + path_.string() + "'");
        }
        out.samples.resize(rowbytes * static_cast<std::size_t>(out.height));
        rows.resize(static_cast<std::size_t>(out.height));
        for (int y = 0; y < out.height; ++y) rows[y] = out.samples.data() + rowbytes * y;
        png_read_image(png_, rows.data());
        png_read_end(png_, nullptr);
        return out;
    }

private:
    std::filesystem::path path_;
    FilePtr file_;
    png_structp png_ = nullptr;
    png_infop info_ = nullptr;
};

class PngWriter {
public:
    explicit PngWriter(const std::filesystem::path& path) : path_(path), file_(open_file(path, "wb")) {
        png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (!png_) throw std::runtime_error("libpng: out of memory");
        info_ = png_create_info_struct(png_);
        if (!info_) throw std::runtime_error("libpng: out of memory");
    }
    ~PngWriter() { png_destroy_write_struct(&png_, &info_); }
    PngWriter(const PngWriter&) = delete;
    PngWriter& operator=(const PngWriter&) = delete;

    void write(int width, int height, int color_type, const std::vector<std::uint8_t>& samples, int channels,
               const std::array<Rgb, 256>* palette) {
        if (setjmp(png_jmpbuf(png_))) {
            throw std::runtime_error("failed writing PNG '" + path_.string() + "'");
        }
        png_init_io(png_, file_.get());
        png_set_IHDR(png_, info_, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                     color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        std::array<png_color, 256> colors{};
        if (palette) {
            for (std::size_t i = 0; i < 256; ++i) colors[i] = {(*palette)[i][0], (*palette)[i][1], (*palette)[i][2]};
            png_set_PLTE(png_, info_, colors.data(), 256);
        }
        // no timestamps or text chunks, so identical inputs give identical bytes
        png_write_info(png_, info_);
        std::size_t rowbytes = static_cast<std::size_t>(width) * channels;
        for (int y = 0; y < height; ++y) {
            png_write_row(png_, const_cast<png_bytep>(samples.data() + rowbytes * y));
        }
        png_write_end(png_, nullptr);
    }

private:
    std::filesystem::path path_;
    FilePtr file_;
    png_structp png_ = nullptr;
    png_infop info_ = nullptr;
};

// Binary PNM (P5/P6) reader.
Image load_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    auto next_token = [&]() {
        std::string tok;
        int ch;
        while ((ch = in.get()) != EOF) {
            if (ch == '#') {
                while ((ch = in.get()) != EOF && ch != '\n') {
                }
                continue;
            }
            if (std::isspace(ch)) {
                if (!tok.empty()) break;
                continue;
            }
            tok.push_back(static_cast<char>(ch));
        }
        return tok;
    };
    std::string magic = next_token();
    int channels = magic == "P6" ? 3 : magic == "P5" ? 1 : 0;
    if (channels == 0) throw InputError("unsupported image format '" + path.string() + "'");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token());
        h = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::exception&) {
        throw InputError("malformed PNM header in '" + path.string() + "'");
    }
    if (w <= 0 || h <= 0) throw InputError("zero-dimension image '" + path.string() + "'");
    if (maxval <= 0 || maxval > 65535) throw InputError("bad PNM maxval in '" + path.string() + "'");
    int bytes_per_sample = maxval > 255 ? 2 : 1;
    std::size_t count = static_cast<std::size_t>(w) * h * channels;
    std::vector<unsigned char> raw(count * bytes_per_sample);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw InputError("truncated PNM data in '" + path.string() + "'");
    }
    Image img(w, h, channels);
    for (std::size_t i = 0; i < count; ++i) {
        int v = bytes_per_sample == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];
        img.data[i] = std::min(1.0, static_cast<double>(v) / maxval);
    }
    return img;
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

Image load_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw InputError("no such file '" + path.string() + "'");
    }
    if (!has_png_signature(path)) {
        return load_pnm(path);
    }
    PngReader reader(path);
    RawPng raw = reader.read(false);
    if (raw.channels != 1 && raw.channels != 3) {
        throw InputError("unsupported PNG channel layout in '" + path.string() + "'");
    }
    Image img(raw.width, raw.height, raw.channels);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = raw.samples[i] / 255.0;
    return img;
}

void save_ppm(const Image& image, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << (image.channels == 1 ? "P5" : "P6") << "\n" << image.width << " " << image.height << "\n255\n";
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int ch = 0; ch < std::min(image.channels, 3); ++ch) out.put(static_cast<char>(to_byte(image.at(x, y, ch))));
        }
    }
}

void save_png(const Image& image, const std::filesystem::path& path) {
    int channels = image.channels == 1 ? 1 : 3;
    std::vector<std::uint8_t> samples(static_cast<std::size_t>(image.width) * image.height * channels);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int ch = 0; ch < channels; ++ch) {
                samples[(static_cast<std::size_t>(y) * image.width + x) * channels + ch] = to_byte(image.at(x, y, ch));
            }
        }
    }
    PngWriter writer(path);
    writer.write(image.width, image.height, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, samples,
                 channels, nullptr);
}

void save_label_png(const SegmentationMap& map, const std::filesystem::path& path) {
    std::vector<std::uint8_t> samples(map.labels.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        int label = map.labels[i];
        if (label < 0 || label > 255) throw PreconditionError("label outside the 8-bit palette range");
        samples[i] = static_cast<std::uint8_t>(label);
    }
    PngWriter writer(path);
    writer.write(map.width, map.height, PNG_COLOR_TYPE_PALETTE, samples, 1, &label_palette());
}

SegmentationMap load_label_png(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw InputError("no such file '" + path.string() + "'");
    }
    if (!has_png_signature(path)) {
        throw InputError("label map is not a PNG: '" + path.string() + "'");
    }
    PngReader reader(path);
    RawPng raw = reader.read(true);
    if (raw.channels != 1) {
        throw InputError("label PNG must be indexed or grayscale: '" + path.string() + "'");
    }
    SegmentationMap map(raw.width, raw.height);
    for (std::size_t i = 0; i < map.labels.size(); ++i) map.labels[i] = raw.samples[i];
    return map;
}

}  // namespace grapl
