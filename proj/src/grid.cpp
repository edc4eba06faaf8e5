#include "msnlac/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace msnlac::grid {

namespace fs = std::filesystem;

Image::Image(int width, int height, std::vector<double> data)
    : Image(Field(width, height, std::move(data)))
{
}

Image::Image(Field pixels) : pixels_(std::move(pixels))
{
    for (double v : pixels_.data())
        require(std::isfinite(v) && v >= 0.0, "image intensities must be finite and non-negative");
}

namespace {

std::string read_token(std::istream& in)
{
    std::string tok;
    char c = 0;
    while (in.get(c)) {
        if (c == '#') {
            std::string skip;
            std::getline(in, skip);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!tok.empty())
                break;
            continue;
        }
        tok.push_back(c);
    }
    return tok;
}

int parse_positive(const std::string& tok, const char* what)
{
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used == tok.size())
            return v;
    } catch (const std::exception&) {
    }
    throw InputError(std::string("malformed PGM header: bad ") + what);
}

bool is_pgm(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    char magic[2] = {0, 0};
    in.read(magic, 2);
    return in.gcount() == 2 && magic[0] == 'P' && magic[1] == '5';
}

Image load_pgm(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (read_token(in) != "P5")
        throw InputError("unsupported format: " + path.string());
    const int w = parse_positive(read_token(in), "width");
    const int h = parse_positive(read_token(in), "height");
    const int maxval = parse_positive(read_token(in), "maxval");
    if (w <= 0 || h <= 0)
        throw InputError("zero-area image: " + path.string());
    if (maxval <= 0 || maxval > 65535)
        throw InputError("unsupported PGM maxval in " + path.string());

    const std::size_t n = static_cast<std::size_t>(w) * h;
    const std::size_t bytes_per = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(n * bytes_per);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw InputError("truncated PGM data in " + path.string());

    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        data[i] = bytes_per == 1 ? raw[i] : static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]);
    }
    return Image(w, h, std::move(data));
}

fs::path sidecar_path(const fs::path& path)
{
    return fs::path(path.string() + ".json");
}

Image load_raw(const fs::path& path)
{
    const fs::path meta = sidecar_path(path);
    if (!fs::exists(meta))
        throw InputError("unsupported format (no PGM magic and no sidecar " + meta.string() + ")");
    int w = 0;
    int h = 0;
    try {
        std::ifstream js(meta);
        const auto doc = nlohmann::json::parse(js);
        w = doc.at("width").get<int>();
        h = doc.at("height").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError("malformed sidecar " + meta.string() + ": " + e.what());
    }
    if (w <= 0 || h <= 0)
        throw InputError("zero-area image: " + path.string());

    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<unsigned char> raw(n * 4);
    std::ifstream in(path, std::ios::binary);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw InputError("raw float file shorter than sidecar dimensions: " + path.string());

    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * i]) |
                                   (static_cast<std::uint32_t>(raw[4 * i + 1]) << 8) |
                                   (static_cast<std::uint32_t>(raw[4 * i + 2]) << 16) |
                                   (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
        data[i] = std::bit_cast<float>(bits);
    }
    return Image(w, h, std::move(data));
}

std::ofstream open_for_write(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw InputError("cannot write " + path.string());
    return out;
}

} // namespace

Image load_image(const fs::path& path)
{
    if (!fs::exists(path))
        throw InputError("file not found: " + path.string());
    if (is_pgm(path))
        return load_pgm(path);
    return load_raw(path);
}

void save_pgm(const Field& values, const fs::path& path, int maxval)
{
    require(maxval > 0 && maxval <= 65535, "PGM maxval must be in [1, 65535]");
    std::ofstream out = open_for_write(path);
    out << "P5\n" << values.width() << ' ' << values.height() << '\n' << maxval << '\n';
    std::vector<unsigned char> bytes;
    bytes.reserve(values.size() * (maxval > 255 ? 2 : 1));
    for (double v : values.data()) {
        const auto q = static_cast<unsigned>(std::clamp(std::lround(v), 0L, static_cast<long>(maxval)));
        if (maxval > 255)
            bytes.push_back(static_cast<unsigned char>(q >> 8));
        bytes.push_back(static_cast<unsigned char>(q & 0xff));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw InputError("write failed: " + path.string());
}

void save_raw(const Field& values, const fs::path& path)
{
    std::ofstream out = open_for_write(path);
    std::vector<unsigned char> bytes(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
        bytes[4 * i] = static_cast<unsigned char>(bits & 0xff);
        bytes[4 * i + 1] = static_cast<unsigned char>((bits >> 8) & 0xff);
        bytes[4 * i + 2] = static_cast<unsigned char>((bits >> 16) & 0xff);
        bytes[4 * i + 3] = static_cast<unsigned char>(bits >> 24);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw InputError("write failed: " + path.string());

    std::ofstream meta = open_for_write(sidecar_path(path));
    meta << nlohmann::json{{"width", values.width()}, {"height", values.height()}}.dump() << '\n';
}

void save_mask(const BinaryMask& mask, const fs::path& path)
{
    require(!mask.empty(), "mask must have positive dimensions");
    std::ofstream out = open_for_write(path);
    out << "P5\n" << mask.width() << ' ' << mask.height() << "\n255\n";
    std::vector<unsigned char> bytes(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i)
        bytes[i] = mask[i] ? 255 : 0;
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw InputError("write failed: " + path.string());
}

BinaryMask load_mask(const fs::path& path)
{
    const Image img = load_image(path);
    BinaryMask mask(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i)
        mask[i] = img[i] != 0.0 ? 1 : 0;
    return mask;
}

std::vector<double> gaussian_kernel(double sigma)
{
    require(sigma > 0.0, "gaussian sigma must be positive");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[i + radius];
    }
    for (double& v : k)
        v /= sum;
    return k;
}

Field gaussian_smooth(const Field& field, double sigma)
{
    const std::vector<double> k = gaussian_kernel(sigma);
    const int radius = static_cast<int>(k.size() / 2);
    const int w = field.width();
    const int h = field.height();

    Field tmp(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += k[i + radius] * field(mirror_index(x + i, w), y);
            tmp(x, y) = acc;
        }

    Field out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += k[i + radius] * tmp(x, mirror_index(y + i, h));
            out(x, y) = acc;
        }
    return out;
}

Image gaussian_smooth(const Image& img, double sigma)
{
    Field out = gaussian_smooth(img.pixels(), sigma);
    // Rounding can push values of an all-zero neighbourhood a hair below zero.
    for (double& v : out.data())
        v = std::max(v, 0.0);
    return Image(std::move(out));
}

namespace {

template <typename T>
Raster<T> decimate(const Raster<T>& in)
{
    require(in.width() >= 2 && in.height() >= 2, "image too small to downsample");
    Raster<T> out(in.width() / 2, in.height() / 2);
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x)
            out(x, y) = in(2 * x, 2 * y);
    return out;
}

} // namespace

Field downsample2(const Field& field) { return decimate(field); }
Image downsample2(const Image& img) { return Image(decimate(img.pixels())); }
BinaryMask downsample2(const BinaryMask& mask) { return decimate(mask); }

Field upsample2_field(const Field& field, int target_width, int target_height)
{
    const int w = field.width();
    const int h = field.height();
    if ((target_width != 2 * w && target_width != 2 * w + 1) ||
        (target_height != 2 * h && target_height != 2 * h + 1)) {
        std::ostringstream msg;
        msg << "upsample target " << target_width << 'x' << target_height << " not in {" << 2 * w << ','
            << 2 * w + 1 << "}x{" << 2 * h << ',' << 2 * h + 1 << '}';
        throw InputError(msg.str());
    }

    Field out(target_width, target_height);
    for (int y = 0; y < target_height; ++y) {
        const int y0 = std::min(y / 2, h - 1);
        const int y1 = std::min(y0 + 1, h - 1);
        const double fy = (y % 2 == 1 && y / 2 + 1 < h) ? 0.5 : 0.0;
        for (int x = 0; x < target_width; ++x) {
            const int x0 = std::min(x / 2, w - 1);
            const int x1 = std::min(x0 + 1, w - 1);
            const double fx = (x % 2 == 1 && x / 2 + 1 < w) ? 0.5 : 0.0;
            const double top = (1.0 - fx) * field(x0, y0) + fx * field(x1, y0);
            const double bottom = (1.0 - fx) * field(x0, y1) + fx * field(x1, y1);
            out(x, y) = (1.0 - fy) * top + fy * bottom;
        }
    }
    return out;
}

int max_pyramid_levels(int width, int height)
{
    const int m = std::min(width, height);
    int levels = 0;
    while ((2 << levels) <= m)
        ++levels;
    return std::max(levels, 1);
}

Pyramid build_pyramid(const Image& img, int levels, double sigma0)
{
    require(sigma0 > 0.0, "pyramid smoothing scale must be positive");
    const int bound = max_pyramid_levels(img.width(), img.height());
    if (levels < 1 || levels > bound)
        throw InputError("pyramid level count " + std::to_string(levels) + " outside [1, " +
                         std::to_string(bound) + "] for " + std::to_string(img.width()) + "x" +
                         std::to_string(img.height()));
    Pyramid p;
    p.smoothing_scale = sigma0;
    p.levels.push_back(img);
    for (int l = 1; l < levels; ++l)
        p.levels.push_back(downsample2(gaussian_smooth(p.levels.back(), sigma0)));
    return p;
}

} // namespace msnlac::grid
