#include "msnlac/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "msnlac/error.hpp"

namespace msnlac::eval {

namespace fs = std::filesystem;

double rfe(const BinaryMask& mask, const BinaryMask& gt)
{
    if (!mask.same_shape(gt))
        throw DimensionMismatch("rfe: mask is " + std::to_string(mask.width()) + "x" +
                                std::to_string(mask.height()) + " but ground truth is " +
                                std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
    std::int64_t uni = 0;
    std::int64_t inter = 0;
    std::int64_t g = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const bool a = mask[i] != 0;
        const bool b = gt[i] != 0;
        uni += (a || b) ? 1 : 0;
        inter += (a && b) ? 1 : 0;
        g += b ? 1 : 0;
    }
    if (g == 0)
        throw InputError("rfe: ground truth region is empty");
    return static_cast<double>(uni - inter) / static_cast<double>(g);
}

BinaryMask boundary(const BinaryMask& mask)
{
    const int w = mask.width();
    const int h = mask.height();
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask(x, y))
                continue;
            const bool edge = x == 0 || y == 0 || x == w - 1 || y == h - 1 || !mask(x - 1, y) ||
                              !mask(x + 1, y) || !mask(x, y - 1) || !mask(x, y + 1);
            out(x, y) = edge ? 1 : 0;
        }
    return out;
}

RgbImage overlay(const grid::Image& img, const BinaryMask& mask, Rgb color)
{
    if (!img.pixels().same_shape(mask))
        throw DimensionMismatch("overlay: image and mask sizes differ");

    std::vector<double> sorted(img.data().begin(), img.data().end());
    std::sort(sorted.begin(), sorted.end());
    const auto pick = [&](double q) {
        const auto k = static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1));
        return sorted[k];
    };
    const double lo = pick(0.005);
    double hi = pick(0.995);
    if (!(hi > lo))
        hi = lo + 1.0;

    const BinaryMask edge = boundary(mask);
    RgbImage out(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (edge[i]) {
            out[i] = color;
            continue;
        }
        const double t = std::clamp((img[i] - lo) / (hi - lo), 0.0, 1.0);
        const auto g = static_cast<std::uint8_t>(std::lround(255.0 * t));
        out[i] = {g, g, g};
    }
    return out;
}

void save_ppm(const RgbImage& rgb, const fs::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw InputError("cannot write " + path.string());
    out << "P6\n" << rgb.width() << ' ' << rgb.height() << "\n255\n";
    for (const Rgb& px : rgb.data())
        out.write(reinterpret_cast<const char*>(px.data()), 3);
    if (!out)
        throw InputError("write failed: " + path.string());
}

std::string trace_csv(const RunTrace& trace)
{
    std::string s = kTraceHeader;
    s += '\n';
    char buf[512];
    for (const TraceRecord& r : trace.records) {
        char rfe_buf[64] = "";
        if (r.rfe)
            std::snprintf(rfe_buf, sizeof rfe_buf, "%.17g", *r.rfe);
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%s,%.17g\n", r.iter, r.energy, r.data, r.reg, rfe_buf,
                      r.ms);
        s += buf;
    }
    return s;
}

void write_trace(const RunTrace& trace, const fs::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw InputError("cannot write " + path.string());
    out << trace_csv(trace);
    if (!out)
        throw InputError("write failed: " + path.string());
}

fs::path level_path(const fs::path& path, int level)
{
    fs::path out = path;
    const std::string ext = path.has_extension() ? path.extension().string() : std::string(".csv");
    out.replace_filename(path.stem().string() + "_L" + std::to_string(level) + ext);
    return out;
}

std::vector<fs::path> export_trace(const std::vector<RunTrace>& traces, const fs::path& path)
{
    require(!traces.empty(), "export_trace: no traces");
    std::vector<fs::path> written;
    for (std::size_t l = 0; l < traces.size(); ++l) {
        written.push_back(level_path(path, static_cast<int>(l)));
        write_trace(traces[l], written.back());
    }
    return written;
}

} // namespace msnlac::eval
